#pragma once

#include "kp2/hierarchy.hpp"

namespace kp2 {

struct FullOrder {
    long long p = 0;  // ord1 of the leading inner coefficient
    long long q = 0;  // ord2
    friend bool operator==(const FullOrder&, const FullOrder&) = default;
    std::string str() const {
        return "(" + std::to_string(p) + "," + std::to_string(q) + ")";
    }
};

FullOrder full_order(const PdoOp& a);

// A commuting pair of monic operators with no negative d2-orders, subject to
// the non-degeneracy condition (p1,q1) != d (p2/l, q2/l), l = gcd(p2,q2).
struct CommutingPair {
    PdoOp P1;
    PdoOp P2;

    void validate() const;  // shape, commutation, non-degeneracy
};

// (L1, L2) with full orders (1,0) and (0,1), both monic and commuting, such
// that P1 and P2 are recovered as monomials L1^p L2^q.
struct ReducedPair {
    PdoOp L1;
    PdoOp L2;
    FullOrder o1;  // exponents of P1 = L1^p L2^q
    FullOrder o2;  // exponents of P2
};

ReducedPair reduce_pair(const CommutingPair& p);

// identical contract to hierarchy::lax_rhs with (L1, L2) in place of (L, M)
std::pair<PdoOp, PdoOp> master_rhs(const PdoOp& L1, const PdoOp& L2, const TimeIndex& k,
                                   const AlphaFn* alpha = nullptr);

struct FLDecomposition {
    bool member = false;
    std::string witness;
    std::vector<std::pair<FullOrder, Rational>> terms;  // descending full order
};

// Membership in the span of the (L1^i L2^j)_+ together with the greedy
// decomposition by descending full order.
FLDecomposition in_FL(const PdoOp& Q, const PdoOp& L1, const PdoOp& L2);

struct DeformationFamily {
    CommutingPair base;
    ReducedPair reduced;
    HierarchySolution sol;
    PdoOp Pt1;
    PdoOp Pt2;
};

DeformationFamily deform(const CommutingPair& p, const AlphaFn& alpha, const PdoOp& S0,
                         const TruncPtr& trunc);

// Lax residuals of the family (each active index, both components) plus the
// zero-curvature residuals of the underlying solution.
ResidualReport verify_deformation(const DeformationFamily& fam);

}  // namespace kp2
