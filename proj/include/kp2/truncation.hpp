#pragma once

#include "kp2/rational.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace kp2 {

// Index k = (i, j) of a time variable t_{i,j}; j >= 0 always.
struct TimeIndex {
    long long i = 0;
    long long j = 0;

    friend auto operator<=>(const TimeIndex&, const TimeIndex&) = default;
    std::string str() const {
        return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
    }
};

// The index-set function alpha: Z+ -> R with alpha(0) <= 0.  A time (i,j) is
// allowed when i <= alpha(j).  Kind "full" places no restriction.
class AlphaFn {
  public:
    enum class Kind { Linear, Table, Full };

    static AlphaFn linear(const Rational& slope) {
        AlphaFn a;
        a.kind_ = Kind::Linear;
        a.slope_ = slope;
        return a;
    }
    static AlphaFn table(std::map<long long, Rational> values) {
        AlphaFn a;
        a.kind_ = Kind::Table;
        a.table_ = std::move(values);
        if (auto it = a.table_.find(0); it != a.table_.end() && it->second > 0)
            throw DomainError("alpha(0) must be <= 0");
        return a;
    }
    static AlphaFn full() {
        AlphaFn a;
        a.kind_ = Kind::Full;
        return a;
    }

    Kind kind() const { return kind_; }
    const Rational& slope() const { return slope_; }
    const std::map<long long, Rational>& table() const { return table_; }

    bool allows(const TimeIndex& k) const {
        if (k.j < 0) return false;
        switch (kind_) {
            case Kind::Full:
                return true;
            case Kind::Linear:
                return Rational(k.i) <= slope_ * Rational(k.j);
            case Kind::Table: {
                auto it = table_.find(k.j);
                if (it == table_.end())
                    throw DomainError("alpha table has no entry for j=" + std::to_string(k.j));
                return Rational(k.i) <= it->second;
            }
        }
        return false;
    }

    friend bool operator==(const AlphaFn& a, const AlphaFn& b) {
        return a.kind_ == b.kind_ && a.slope_ == b.slope_ && a.table_ == b.table_;
    }

  private:
    Kind kind_ = Kind::Full;
    Rational slope_ = 0;
    std::map<long long, Rational> table_;
};

// Global exactness contract shared by every value of a computation: degree
// caps, order floors and the finite set of active time variables.
//
// Monomials over the cap are dropped by every constructor and product, so a
// value never stores over-cap terms.
struct Truncation {
    int xdeg = 0;         // max total degree in x1, x2
    int d1floor = 0;      // minimum retained d1-order (<= 0)
    int d2floor = 0;      // minimum retained d2-order (<= 0)
    int tdeg = 0;         // max total degree in the time variables
    std::vector<TimeIndex> active_times;

    void validate() const {
        if (xdeg < 0 || tdeg < 0) throw DomainError("xdeg and tdeg must be >= 0");
        if (d1floor > 0 || d2floor > 0) throw DomainError("order floors must be <= 0");
        for (size_t a = 0; a < active_times.size(); ++a) {
            const TimeIndex& k = active_times[a];
            if (k.j < 0) throw DomainError("time index needs j >= 0: " + k.str());
            if (k.i == 0 && k.j == 0)
                throw DomainError("t_(0,0) cannot be active: solutions do not depend on it");
            for (size_t b = a + 1; b < active_times.size(); ++b)
                if (active_times[b] == k)
                    throw DomainError("duplicate active time " + k.str());
        }
    }

    std::optional<size_t> time_slot(const TimeIndex& k) const {
        for (size_t a = 0; a < active_times.size(); ++a)
            if (active_times[a] == k) return a;
        return std::nullopt;
    }

    friend bool operator==(const Truncation&, const Truncation&) = default;
};

using TruncPtr = std::shared_ptr<const Truncation>;

inline TruncPtr make_truncation(Truncation t) {
    t.validate();
    return std::make_shared<const Truncation>(std::move(t));
}

inline void require_same_truncation(const TruncPtr& a, const TruncPtr& b) {
    if (a == b) return;
    if (!a || !b || !(*a == *b)) throw TruncationMismatch();
}

}  // namespace kp2
