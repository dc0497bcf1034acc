#pragma once

#include "kp2/rational.hpp"
#include "kp2/truncation.hpp"

#include <map>
#include <vector>

namespace kp2 {

// Exponent tuple of one monomial x1^e1 * x2^e2 * prod t_k^{tdegs[k]}.
// tdegs is aligned with Truncation::active_times and always has its length.
// Ordering (time multidegree, e1, e2) is the canonical serialization order.
struct Monomial {
    int e1 = 0;
    int e2 = 0;
    std::vector<int> tdegs;

    int xdeg() const { return e1 + e2; }
    int tdeg() const {
        int s = 0;
        for (int d : tdegs) s += d;
        return s;
    }

    friend bool operator==(const Monomial&, const Monomial&) = default;
    friend bool operator<(const Monomial& a, const Monomial& b) {
        if (a.tdegs != b.tdegs) return a.tdegs < b.tdegs;
        if (a.e1 != b.e1) return a.e1 < b.e1;
        return a.e2 < b.e2;
    }
};

// Truncated formal power series in x1, x2 over Q, polynomial in the active
// time variables.  Canonical form: no stored zero coefficients, no over-cap
// monomials.  Values are immutable after construction and freely shareable.
class ScalarSeries {
  public:
    using TermMap = std::map<Monomial, Rational>;

    explicit ScalarSeries(TruncPtr trunc) : trunc_(std::move(trunc)) {}
    ScalarSeries(TruncPtr trunc, const Rational& c);

    static ScalarSeries zero(const TruncPtr& t) { return ScalarSeries(t); }
    static ScalarSeries one(const TruncPtr& t) { return ScalarSeries(t, 1); }
    static ScalarSeries constant(const TruncPtr& t, const Rational& c) {
        return ScalarSeries(t, c);
    }
    // x1^e1 x2^e2 with coefficient c; throws if the monomial is over-cap.
    static ScalarSeries monomial(const TruncPtr& t, int e1, int e2, const Rational& c);
    // The time variable t_k itself; k must be active.
    static ScalarSeries time_var(const TruncPtr& t, const TimeIndex& k);
    // General term constructor (used by parsing); enforces caps.
    static ScalarSeries from_terms(const TruncPtr& t, TermMap terms);

    const TruncPtr& truncation() const { return trunc_; }
    const TermMap& terms() const { return terms_; }

    bool is_zero() const { return terms_.empty(); }
    bool is_one() const;
    bool is_constant() const;  // single () term or zero
    Rational constant_part() const;

    // no x1 content, i.e. lies in ker(d1)
    bool is_ker_d1() const;
    // free of x1, x2 and t: a rational constant
    bool is_rational_constant() const { return is_constant(); }
    bool has_time_content() const;

    int max_x1_degree() const;  // -1 when zero
    int max_x2_degree() const;
    int max_total_xdeg() const;
    int max_total_tdeg() const;

    // v2 weight: min over terms of sum_k tdegs[k]*j_k (paper's t-valuation);
    // returns nullopt for the zero series.
    std::optional<long long> v2_weight() const;

    ScalarSeries operator-() const;
    ScalarSeries operator+(const ScalarSeries& o) const;
    ScalarSeries operator-(const ScalarSeries& o) const;
    ScalarSeries operator*(const ScalarSeries& o) const;
    ScalarSeries scale(const Rational& c) const;

    ScalarSeries d1() const;
    ScalarSeries d2() const;
    // x1-antiderivative with zero x1-free part.  A term at the x-degree cap
    // cannot be integrated and is dropped; *clipped is set when that happens.
    ScalarSeries antid1(bool* clipped = nullptr) const;
    ScalarSeries antid2(bool* clipped = nullptr) const;
    ScalarSeries dt(const TimeIndex& k) const;
    ScalarSeries eval_t0() const;
    // drop every term of time degree > cap (for "up to t-degree" checks)
    ScalarSeries truncate_tdeg(int cap) const;

    // multiplicative inverse; requires nonzero constant part (unit).
    ScalarSeries inverse() const;

    friend bool operator==(const ScalarSeries& a, const ScalarSeries& b) {
        require_same_truncation(a.trunc_, b.trunc_);
        return a.terms_ == b.terms_;
    }

    std::string str() const;  // human-readable, canonical order

  private:
    void insert_term(const Monomial& m, const Rational& c);  // drops over-cap, sums
    TruncPtr trunc_;
    TermMap terms_;
};

}  // namespace kp2
