#pragma once

#include "kp2/inner_op.hpp"

#include <map>
#include <vector>

namespace kp2 {

// Per-order residual of the commutation criterion.
struct OrderResidual {
    int order = 0;
    InnerOp residual;
};

// Truncated Laurent series in d2 with InnerOp coefficients; the outer Leibniz
// rule applies d2 to inner coefficients (acting on the ScalarSeries inside:
// t and d1 are constants for it).  exact_floor2 plays the role exact_floor
// plays one level down.
class PdoOp {
  public:
    using CoeffMap = std::map<int, InnerOp>;

    explicit PdoOp(TruncPtr trunc)
        : trunc_(std::move(trunc)), exact_floor2_(trunc_->d2floor) {}

    static PdoOp zero(const TruncPtr& t) { return PdoOp(t); }
    static PdoOp one(const TruncPtr& t) { return from_inner(InnerOp::one(t)); }
    static PdoOp from_inner(const InnerOp& c);           // order-0 embedding
    static PdoOp term(int q2, const InnerOp& c);         // c * d2^q2
    static PdoOp d2_symbol(const TruncPtr& t, int q = 1) {
        return term(q, InnerOp::one(t));
    }
    static PdoOp d1_symbol(const TruncPtr& t, int q = 1) {
        return from_inner(InnerOp::d1_symbol(t, q));
    }
    static PdoOp from_coeffs(const TruncPtr& t, CoeffMap coeffs, int exact_floor2);

    const TruncPtr& truncation() const { return trunc_; }
    const CoeffMap& coeffs() const { return coeffs_; }
    int exact_floor2() const { return exact_floor2_; }
    PdoOp with_floor2(int f) const;

    bool is_zero() const { return coeffs_.empty(); }
    bool is_zero_above_floors() const;
    bool is_one_above_floors() const;

    int ord2() const;  // throws on zero
    const InnerOp& leading2() const;
    InnerOp coeff(int q2) const;
    // monic in the iterated sense: leading coefficient of the leading
    // coefficient equals 1
    bool is_monic() const;

    PdoOp operator-() const;
    PdoOp operator+(const PdoOp& o) const;
    PdoOp operator-(const PdoOp& o) const;
    PdoOp operator*(const PdoOp& o) const;
    PdoOp scale(const Rational& c) const;
    PdoOp scale_inner_left(const InnerOp& c) const;  // (c * d2^0) * this

    PdoOp commutator(const PdoOp& o) const;

    // Per-order residuals of [M, L] computed from the expanded double-sum
    // criterion (independent of commutator()); all zero above floors iff the
    // operators commute there.
    static std::vector<OrderResidual> commute_criterion(const PdoOp& L, const PdoOp& M);

    std::pair<PdoOp, PdoOp> split() const;  // (E+, E-)
    PdoOp plus_part() const { return split().first; }
    PdoOp minus_part() const { return split().second; }

    PdoOp d2_coeffwise() const;
    PdoOp dt(const TimeIndex& k) const;
    PdoOp eval_t0() const;
    PdoOp truncate_tdeg(int cap) const;

    // Neumann-style inverse (right inverse computed order by order; it is
    // two-sided above floors).  Needs an invertible leading structure.
    PdoOp inverse() const;
    PdoOp pow(long long k) const;

    // unique monic k-th root of a monic operator (orders divisible by k)
    PdoOp kth_root(long long k) const;

    // S * a * S^-1
    static PdoOp conjugate(const PdoOp& S, const PdoOp& a);

    bool eq_above_floors(const PdoOp& o) const;
    bool is_in_one_plus_eminus() const;  // 1 + (orders < 0) shape

    // raise the inner exact floor of every stored coefficient at d2-orders
    // <= level to at least inner_floor (uncertainty imprint)
    PdoOp degrade_below_level(int level, int inner_floor) const;

    // rebuild the value over another truncation: content outside the new
    // window or caps is dropped, floors carry over clamped into the window
    PdoOp retruncate(const TruncPtr& to) const;

    // declare the whole window certified (callers use this after computing
    // in a window padded past the contamination budget)
    PdoOp with_window_floors() const;

    friend bool operator==(const PdoOp& a, const PdoOp& b) {
        require_same_truncation(a.trunc_, b.trunc_);
        return a.coeffs_ == b.coeffs_;
    }

    std::string str() const;

  private:
    void insert(int q, const InnerOp& c);
    TruncPtr trunc_;
    CoeffMap coeffs_;
    int exact_floor2_;
};

}  // namespace kp2
