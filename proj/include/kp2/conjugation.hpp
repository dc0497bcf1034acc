#pragma once

#include "kp2/pdo_op.hpp"

#include <optional>
#include <vector>

namespace kp2 {

// Canonical pair (L00, M00) = (u0, v_-1 d2 + v0): u0 monic of ord1 1,
// v_-1 monic of ord1 0, and the order-0 identity
// v_-1 d2(u0) + [v0, u0] = 0 together with [v_-1, u0] = 0, i.e. the pair
// commutes as operators.
struct CanonicalPair {
    InnerOp u0;
    InnerOp v_minus1;
    InnerOp v0;

    PdoOp L00() const { return PdoOp::from_inner(u0); }
    PdoOp M00() const { return PdoOp::term(1, v_minus1) + PdoOp::from_inner(v0); }

    // order-0 identity residual v_-1 d2(u0) + [v0, u0]
    InnerOp order0_residual() const {
        return v_minus1 * u0.d2_coeffwise() + v0.commutator(u0);
    }
    void validate() const;
    bool is_time_free() const;
};

struct ConjugationResult {
    PdoOp S;  // in 1 + E-, with S L S^-1 = L00 and S M S^-1 = M00
    CanonicalPair pair;
    std::vector<OrderResidual> residuals;  // leftover of both conjugation identities
};

// Expansion of an operator as sum c_ij L00^i M00^j (coefficients in
// ker(d1) ∩ ker(d2), i.e. time polynomials; constants when time-free).
struct PairExpansion {
    struct Term {
        long long i = 0;
        long long j = 0;
        ScalarSeries coeff;
    };
    std::vector<Term> terms;
    bool exact = true;          // false when a coefficient escaped the basis
    std::string witness;        // description of the first offending piece
};

// Power cache for L00^i M00^j monomials.
class PairPowers {
  public:
    explicit PairPowers(const CanonicalPair& pair);
    const PdoOp& L_pow(long long i) const;
    const PdoOp& M_pow(long long j) const;
    PdoOp monomial(long long i, long long j) const { return L_pow(i) * M_pow(j); }
    const CanonicalPair& pair() const { return pair_; }

  private:
    CanonicalPair pair_;
    PdoOp L_, M_;
    mutable std::map<long long, PdoOp> lp_, mp_;
};

// Reduce a commuting pair of the stated shape to its canonical pair by an
// element of 1 + E-, working down order by order in d2.
ConjugationResult parshin_conjugate(const PdoOp& L, const PdoOp& M);

// Expand X in the (L00, M00) basis; inexact pieces are reported, not thrown.
PairExpansion expand_in_pair(const PdoOp& X, const PairPowers& powers);

// True when X - 1 expands in the (L00, M00) basis with coefficients free of
// x (and of t when require_time_free).
bool has_constant_coefficients(const PdoOp& X, const PairPowers& powers,
                               bool require_time_free, std::string* witness = nullptr);

struct NormalizeResult {
    InnerOp Sbar;        // invertible inner conjugator (d2-order 0)
    CanonicalPair pair;  // v_-1 = d1 * u0^-1 and no ker(d1) content in (v0)_-
};

// Second normalization of Thm-type (iii): restricted at truncation; inputs
// for which the order-by-order solves do not close raise UnsupportedInput.
NormalizeResult normalize_canonical(const CanonicalPair& pair);

}  // namespace kp2
