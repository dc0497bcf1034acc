#pragma once

// Shared test fixtures: deterministic random generators for series and
// operators.  Generators keep per-operand x-degrees small so that products
// taken inside a property stay under the xdeg cap (the cap quotient is not
// compatible with the derivations at the top degree, so budgeted operands
// are what makes "exact" assertions meaningful).

#include "kp2/pdo_op.hpp"

#include <random>

namespace kp2::testing {

class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    long long integer(long long lo, long long hi) {
        return std::uniform_int_distribution<long long>(lo, hi)(eng_);
    }
    Rational rational(int num_range = 4) {
        long long n = integer(-num_range, num_range);
        long long d = integer(1, 3);
        return Rational(n, d);
    }
    Rational nonzero_rational(int num_range = 4) {
        Rational r = rational(num_range);
        return r == 0 ? Rational(1) : r;
    }

    // random scalar with <= max_terms monomials, each of x-degree <= xbudget
    // and t-degree <= tbudget
    ScalarSeries scalar(const TruncPtr& t, int xbudget, int tbudget, int max_terms = 3) {
        ScalarSeries s = ScalarSeries::zero(t);
        const int nt = static_cast<int>(t->active_times.size());
        for (int i = 0, n = static_cast<int>(integer(1, max_terms)); i < n; ++i) {
            int e1 = static_cast<int>(integer(0, xbudget));
            int e2 = static_cast<int>(integer(0, xbudget - e1));
            ScalarSeries m = ScalarSeries::monomial(t, e1, e2, rational());
            for (int b = 0; b < tbudget && nt > 0; ++b) {
                if (integer(0, 2) == 0) {
                    size_t slot = static_cast<size_t>(integer(0, nt - 1));
                    m = m * ScalarSeries::time_var(t, t->active_times[slot]);
                }
            }
            s = s + m;
        }
        return s;
    }

    InnerOp inner(const TruncPtr& t, int lo, int hi, int xbudget, int tbudget = 0) {
        InnerOp a = InnerOp::zero(t);
        for (int q = lo; q <= hi; ++q)
            if (integer(0, 2) != 0)
                a = a + InnerOp::term(q, scalar(t, xbudget, tbudget, 2));
        if (a.is_zero()) a = InnerOp::term(hi, ScalarSeries::constant(t, nonzero_rational()));
        return a;
    }

    InnerOp monic_inner(const TruncPtr& t, int ord, int lo, int xbudget, int tbudget = 0) {
        InnerOp a = InnerOp::d1_symbol(t, ord);
        for (int q = lo; q < ord; ++q)
            if (integer(0, 1) == 0) a = a + InnerOp::term(q, scalar(t, xbudget, tbudget, 2));
        return a;
    }

    PdoOp pdo(const TruncPtr& t, int lo, int hi, int inner_lo, int inner_hi, int xbudget,
              int tbudget = 0) {
        PdoOp a = PdoOp::zero(t);
        for (int q = lo; q <= hi; ++q)
            if (integer(0, 2) != 0)
                a = a + PdoOp::term(q, inner(t, inner_lo, inner_hi, xbudget, tbudget));
        if (a.is_zero())
            a = PdoOp::term(hi, InnerOp::from_scalar(
                                    ScalarSeries::constant(t, nonzero_rational())));
        return a;
    }

    // element of 1 + E- with bounded depth and coefficient budget
    PdoOp one_plus_eminus(const TruncPtr& t, int depth, int inner_lo, int inner_hi,
                          int xbudget, int tbudget = 0) {
        PdoOp a = PdoOp::one(t);
        for (int g = 1; g <= depth; ++g)
            if (integer(0, 1) == 0)
                a = a + PdoOp::term(-g, inner(t, inner_lo, inner_hi, xbudget, tbudget));
        return a;
    }

  private:
    std::mt19937_64 eng_;
};

inline TruncPtr small_trunc(int xdeg = 4, int d1floor = -3, int d2floor = -3, int tdeg = 2,
                            std::vector<TimeIndex> times = {{0, 1}, {-1, 1}}) {
    Truncation t;
    t.xdeg = xdeg;
    t.d1floor = d1floor;
    t.d2floor = d2floor;
    t.tdeg = tdeg;
    t.active_times = std::move(times);
    return make_truncation(t);
}

}  // namespace kp2::testing
