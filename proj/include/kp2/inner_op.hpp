#pragma once

#include "kp2/scalar_series.hpp"

#include <map>
#include <vector>

namespace kp2 {

class InnerOp;

// Result of expanding an operator as sum_q c_q * u0^q with c_q in ker(d1).
struct InnerExpansion {
    std::vector<std::pair<int, ScalarSeries>> terms;  // descending exponent
    bool exact = true;  // false when a leading coefficient escaped ker(d1)
    int offending_order = 0;
};

// Truncated Laurent series in d1 with ScalarSeries coefficients, multiplied
// by the Leibniz rule in d1.  Orders below the truncation's d1floor are
// dropped; exact_floor marks the lowest order whose stored coefficient is
// exact under the propagation rule
//   fl(ab) = max(fl(a) + ord1(b), fl(b) + ord1(a)).
class InnerOp {
  public:
    using CoeffMap = std::map<int, ScalarSeries>;

    explicit InnerOp(TruncPtr trunc)
        : trunc_(std::move(trunc)), exact_floor_(trunc_->d1floor) {}

    static InnerOp zero(const TruncPtr& t) { return InnerOp(t); }
    static InnerOp one(const TruncPtr& t) { return from_scalar(ScalarSeries::one(t)); }
    static InnerOp from_scalar(const ScalarSeries& s);
    // c * d1^q
    static InnerOp term(int q, const ScalarSeries& c);
    static InnerOp d1_symbol(const TruncPtr& t, int q = 1) {
        return term(q, ScalarSeries::one(t));
    }
    static InnerOp from_coeffs(const TruncPtr& t, CoeffMap coeffs, int exact_floor);

    const TruncPtr& truncation() const { return trunc_; }
    const CoeffMap& coeffs() const { return coeffs_; }
    int exact_floor() const { return exact_floor_; }
    InnerOp with_floor(int f) const;

    bool is_zero() const { return coeffs_.empty(); }
    bool is_zero_above_floors() const;
    bool is_one() const;

    int ord1() const;  // throws on zero operator
    const ScalarSeries& leading() const;
    ScalarSeries coeff(int q) const;
    bool is_monic1() const;

    InnerOp operator-() const;
    InnerOp operator+(const InnerOp& o) const;
    InnerOp operator-(const InnerOp& o) const;
    InnerOp operator*(const InnerOp& o) const;  // Leibniz product
    InnerOp scale(const Rational& c) const;
    InnerOp scale_series(const ScalarSeries& s) const;  // left-multiply by order-0 scalar

    InnerOp commutator(const InnerOp& o) const { return *this * o - o * *this; }

    // coefficientwise derivations; t and d1 are constants for these
    InnerOp d1_coeffwise() const;
    InnerOp d2_coeffwise() const;
    InnerOp dt(const TimeIndex& k) const;
    InnerOp eval_t0() const;
    InnerOp truncate_tdeg(int cap) const;

    std::pair<InnerOp, InnerOp> split() const;  // (orders >= 0, orders < 0)

    // Neumann/long-division inverse; needs a unit leading coefficient.
    InnerOp inverse() const;
    InnerOp pow(long long k) const;  // negative k via inverse

    // In-window right division: the quotient q with q * denom = *this above
    // the propagated floor.  denom needs a unit leading coefficient.
    InnerOp right_divide(const InnerOp& denom) const;

    // monic k-th root of a monic operator with ord1 divisible by k
    InnerOp kth_root(long long k) const;

    // Expand as sum_q c_q u0^q with c_q in ker(d1); requires u0 monic of
    // ord1 = 1.  When strict, a non-ker(d1) leading coefficient throws;
    // otherwise it is reported through InnerExpansion::exact.
    InnerExpansion as_series_in(const InnerOp& u0, bool strict = true) const;

    // equality of stored coefficients at orders >= max of the two floors
    bool eq_above_floors(const InnerOp& o) const;

    // rebuild over another truncation (content outside the window dropped,
    // floors clamped into it)
    InnerOp retruncate(const TruncPtr& to) const;

    // structural equality of stored coefficients (floors are metadata)
    friend bool operator==(const InnerOp& a, const InnerOp& b) {
        require_same_truncation(a.trunc_, b.trunc_);
        return a.coeffs_ == b.coeffs_;
    }

    std::string str() const;

  private:
    void insert(int q, const ScalarSeries& c);
    TruncPtr trunc_;
    CoeffMap coeffs_;
    int exact_floor_;
};

// Reconstruct sum_q c_q * u0^q from an expansion (test oracle helper).
InnerOp eval_expansion(const InnerExpansion& e, const InnerOp& u0);

}  // namespace kp2
