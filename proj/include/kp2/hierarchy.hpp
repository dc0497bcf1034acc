#pragma once

#include "kp2/conjugation.hpp"

#include <string>
#include <utility>
#include <vector>

namespace kp2 {

// 1-form with one operator coefficient per active time index.
struct ConnectionForm {
    std::vector<std::pair<TimeIndex, PdoOp>> entries;

    const PdoOp* find(const TimeIndex& k) const {
        for (const auto& [i, op] : entries)
            if (i == k) return &op;
        return nullptr;
    }
};

// Solver output: S in 1+E-, Y = S U plus-only, L = S L00 S^-1, M = S M00 S^-1.
struct HierarchySolution {
    PdoOp S;
    PdoOp Y;
    PdoOp L;
    PdoOp M;
    CanonicalPair pair;
    AlphaFn alpha;
};

struct FlowResidual {
    std::string label;
    TimeIndex k;
    TimeIndex k2{};
    bool has_second = false;
    PdoOp residual;
};

struct ResidualReport {
    std::vector<FlowResidual> entries;
    int checked_tdeg = 0;  // residuals asserted up to this time degree

    bool all_zero() const {
        for (const auto& e : entries)
            if (!e.residual.is_zero_above_floors()) return false;
        return true;
    }
};

// [(L^i M^j)_+, L] and [(L^i M^j)_+, M]; alpha (when given) gates the index.
std::pair<PdoOp, PdoOp> lax_rhs(const PdoOp& L, const PdoOp& M, const TimeIndex& k,
                                const AlphaFn* alpha = nullptr);

// omega coefficients L00^i M00^j for every active time (alpha-checked).
ConnectionForm build_omega(const PairPowers& powers, const AlphaFn& alpha,
                           const TruncPtr& trunc);

// U = exp(sum t_k L00^i M00^j) S0^-1; terminates because every exp term
// carries total t-degree at least its order.
PdoOp exp_solution(const PairPowers& powers, const AlphaFn& alpha, const PdoOp& S0,
                   const TruncPtr& trunc);

// Generalized Birkhoff factorization U = S^-1 Y: S in 1+E-, Y plus-only.
// Solves the window system s M = -u by back-substitution over the
// t-degree-0 triangle plus Neumann sweeps in the t-grading.
std::pair<PdoOp, PdoOp> birkhoff_factor(const PdoOp& U);

// Window deepened past the t-graded contamination budget of the solver:
// extra2/extra1 add room for order lifts by operators the caller will
// conjugate afterwards.
TruncPtr padded_truncation(const TruncPtr& trunc, int extra2 = 0, int extra1 = 0);

HierarchySolution sato_wilson_solve(const CanonicalPair& pair, const AlphaFn& alpha,
                                    const PdoOp& S0, const TruncPtr& trunc);

// dt S + (S omega_k S^-1)_- S per active k, up to t-degree tdeg-1
ResidualReport verify_sato_wilson(const HierarchySolution& sol);
// both Lax forms (Z+ and Z-) for L and M, up to t-degree tdeg-1
ResidualReport verify_lax(const HierarchySolution& sol);
// zero-curvature residuals for all index pairs, up to t-degree tdeg-2
ResidualReport verify_zakharov_shabat(const HierarchySolution& sol);
// [L(t), M(t)] above floors
ResidualReport verify_commutativity_preserved(const HierarchySolution& sol);

struct AdmissibilityResult {
    bool admissible = false;
    std::string witness;
};

// T is (L00, M00)-admissible when both conjugates T L00 T^-1, T M00 T^-1
// expand over the pair with coefficients free of x and t.
AdmissibilityResult is_admissible(const PdoOp& T, const CanonicalPair& pair);

}  // namespace kp2
