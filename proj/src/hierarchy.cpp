#include "kp2/hierarchy.hpp"

namespace kp2 {

std::pair<PdoOp, PdoOp> lax_rhs(const PdoOp& L, const PdoOp& M, const TimeIndex& k,
                                const AlphaFn* alpha) {
    require_same_truncation(L.truncation(), M.truncation());
    if (k.j < 0) throw DomainError("time index needs j >= 0");
    if (alpha && !alpha->allows(k))
        throw DomainError("index " + k.str() + " violates the alpha constraint");
    const PdoOp B = (L.pow(k.i) * M.pow(k.j)).plus_part();
    return {B.commutator(L), B.commutator(M)};
}

ConnectionForm build_omega(const PairPowers& powers, const AlphaFn& alpha,
                           const TruncPtr& trunc) {
    require_same_truncation(powers.pair().u0.truncation(), trunc);
    ConnectionForm omega;
    for (const TimeIndex& k : trunc->active_times) {
        if (!alpha.allows(k))
            throw DomainError("active time " + k.str() + " violates the alpha constraint");
        omega.entries.emplace_back(k, powers.monomial(k.i, k.j));
    }
    return omega;
}

PdoOp exp_solution(const PairPowers& powers, const AlphaFn& alpha, const PdoOp& S0,
                   const TruncPtr& trunc) {
    if (!S0.is_in_one_plus_eminus())
        throw DomainError("S(0) must lie in 1 + E-");
    ConnectionForm omega = build_omega(powers, alpha, trunc);
    if (trunc->tdeg == 0) return S0.inverse();
    PdoOp X = PdoOp::zero(trunc);
    for (const auto& [k, op] : omega.entries) {
        const ScalarSeries tk = ScalarSeries::time_var(trunc, k);
        X = X + op.scale_inner_left(InnerOp::from_scalar(tk));
    }
    PdoOp exp = PdoOp::one(trunc);
    PdoOp pw = PdoOp::one(trunc);
    Rational fact = 1;
    for (int n = 1; n <= trunc->tdeg; ++n) {
        pw = pw * X;
        if (pw.is_zero()) break;
        fact *= n;
        exp = exp + pw.scale(Rational(1) / fact);
    }
    return exp * S0.inverse();
}

std::pair<PdoOp, PdoOp> birkhoff_factor(const PdoOp& U) {
    const TruncPtr& t = U.truncation();
    const int gamma_max = -t->d2floor;
    if (U.is_zero()) throw DomainError("cannot factor the zero operator");

    // u_j and the matrix entries M_{gamma,beta} = sum_i C(-gamma, i) d2^i u_{gamma-beta+i}
    auto ucoeff = [&](int j) { return U.coeff(j); };
    auto entry = [&](int gamma, int beta) {
        InnerOp acc = InnerOp::zero(t);
        const int top = U.is_zero() ? 0 : U.ord2();
        for (int i = 0; gamma - beta + i <= top; ++i) {
            InnerOp u = ucoeff(gamma - beta + i);
            if (u.is_zero()) continue;
            for (int s = 0; s < i; ++s) u = u.d2_coeffwise();
            if (u.is_zero()) continue;
            acc = acc + u.scale(binomial_general(-gamma, i));
        }
        return acc;
    };

    // the t-degree-0 part must be upper triangular with invertible diagonal
    std::vector<std::vector<InnerOp>> M0(gamma_max + 1,
                                         std::vector<InnerOp>(gamma_max + 1, InnerOp::zero(t)));
    std::vector<std::vector<InnerOp>> M1 = M0;
    std::vector<InnerOp> D_inv(gamma_max + 1, InnerOp::zero(t));
    for (int g = 1; g <= gamma_max; ++g) {
        for (int b = 1; b <= gamma_max; ++b) {
            InnerOp e = entry(g, b);
            InnerOp e0 = e.eval_t0();
            if (g > b && !e0.is_zero_above_floors())
                throw SingularSystem(
                    "U|_{t=0} has certified positive d2-orders: block (" + std::to_string(g) +
                    "," + std::to_string(b) + ") breaks the triangular structure");
            M0[g][b] = e0;
            M1[g][b] = e - e0;
        }
        const InnerOp& d = M0[g][g];
        if (d.is_zero() || d.leading().constant_part() == 0)
            throw SingularSystem("singular truncated system: first non-invertible diagonal "
                                 "block at gamma = " + std::to_string(g));
        D_inv[g] = d.inverse();
    }

    std::vector<InnerOp> s(gamma_max + 1, InnerOp::zero(t));
    // sweeps gain one t-degree each; tdeg+2 passes reach the fixed point
    for (int pass = 0; pass <= t->tdeg + 1; ++pass) {
        std::vector<InnerOp> next(gamma_max + 1, InnerOp::zero(t));
        for (int b = 1; b <= gamma_max; ++b) {
            InnerOp rhs = -ucoeff(-b);
            for (int g = 1; g <= gamma_max; ++g)
                if (!M1[g][b].is_zero()) rhs = rhs - s[g] * M1[g][b];
            for (int g = 1; g < b; ++g)
                if (!M0[g][b].is_zero()) rhs = rhs - next[g] * M0[g][b];
            next[b] = rhs * D_inv[b];
        }
        bool stable = true;
        for (int g = 1; g <= gamma_max; ++g)
            if (!(next[g] == s[g])) stable = false;
        s = std::move(next);
        if (stable) break;
        if (pass == t->tdeg + 1)
            throw SingularSystem("factorization sweeps did not stabilize in the t-grading");
    }

    PdoOp S = PdoOp::one(t);
    for (int g = 1; g <= gamma_max; ++g)
        if (!s[g].is_zero()) S = S + PdoOp::term(-g, s[g]);
    PdoOp Y = S * U;
    return {S, Y};
}

TruncPtr padded_truncation(const TruncPtr& trunc, int extra2, int extra1) {
    // The window system consumes data near the order floors whose error has
    // t-valuation >= (depth below the window)/(max power in the flows), so
    // a pad of jmax*tdeg keeps every slot of the original window exact.
    long long jmax = 1, imax = 1;
    for (const TimeIndex& k : trunc->active_times) {
        jmax = std::max(jmax, k.j);
        imax = std::max(imax, k.i < 0 ? -k.i : k.i);
    }
    Truncation deep = *trunc;
    deep.d2floor -= static_cast<int>(jmax) * trunc->tdeg + 1 + extra2;
    deep.d1floor -= static_cast<int>(imax) * trunc->tdeg + 1 + extra1;
    return make_truncation(deep);
}

namespace {
HierarchySolution solve_in_window(const CanonicalPair& pair, const AlphaFn& alpha,
                                  const PdoOp& S0, const TruncPtr& win) {
    PairPowers powers(pair);
    const PdoOp U = exp_solution(powers, alpha, S0, win);
    auto [S, Y] = birkhoff_factor(U);
    const PdoOp Sinv = S.inverse();
    const PdoOp L = S * pair.L00() * Sinv;
    const PdoOp M = S * pair.M00() * Sinv;
    return {S, Y, L, M, pair, alpha};
}
}  // namespace

HierarchySolution sato_wilson_solve(const CanonicalPair& pair, const AlphaFn& alpha,
                                    const PdoOp& S0, const TruncPtr& trunc) {
    pair.validate();
    if (!S0.is_in_one_plus_eminus()) throw DomainError("S(0) must lie in 1 + E-");
    const TruncPtr deep = padded_truncation(trunc);
    CanonicalPair pd{pair.u0.retruncate(deep), pair.v_minus1.retruncate(deep),
                     pair.v0.retruncate(deep)};
    HierarchySolution ds = solve_in_window(pd, alpha, S0.retruncate(deep), deep);
    // every slot of the user window is exact after the pad
    HierarchySolution sol{ds.S.retruncate(trunc).with_window_floors(),
                          ds.Y.retruncate(trunc).with_window_floors(),
                          ds.L.retruncate(trunc).with_window_floors(),
                          ds.M.retruncate(trunc).with_window_floors(), pair, alpha};
    return sol;
}

ResidualReport verify_sato_wilson(const HierarchySolution& sol) {
    const TruncPtr& t = sol.S.truncation();
    ResidualReport rep;
    rep.checked_tdeg = t->tdeg - 1;
    PairPowers powers(sol.pair);
    const PdoOp Sinv = sol.S.inverse();
    for (const TimeIndex& k : t->active_times) {
        const PdoOp omega_k = powers.monomial(k.i, k.j);
        PdoOp r = sol.S.dt(k) + (sol.S * omega_k * Sinv).minus_part() * sol.S;
        rep.entries.push_back({"sato-wilson", k, {}, false, r.truncate_tdeg(rep.checked_tdeg)});
    }
    return rep;
}

ResidualReport verify_lax(const HierarchySolution& sol) {
    const TruncPtr& t = sol.S.truncation();
    ResidualReport rep;
    rep.checked_tdeg = t->tdeg - 1;
    for (const TimeIndex& k : t->active_times) {
        const PdoOp B = sol.L.pow(k.i) * sol.M.pow(k.j);
        const auto [Bp, Bm] = B.split();
        PdoOp rl_plus = sol.L.dt(k) - Bp.commutator(sol.L);
        PdoOp rm_plus = sol.M.dt(k) - Bp.commutator(sol.M);
        PdoOp rl_minus = sol.L.dt(k) + Bm.commutator(sol.L);
        PdoOp rm_minus = sol.M.dt(k) + Bm.commutator(sol.M);
        rep.entries.push_back({"lax L (Z+)", k, {}, false, rl_plus.truncate_tdeg(rep.checked_tdeg)});
        rep.entries.push_back({"lax M (Z+)", k, {}, false, rm_plus.truncate_tdeg(rep.checked_tdeg)});
        rep.entries.push_back({"lax L (Z-)", k, {}, false, rl_minus.truncate_tdeg(rep.checked_tdeg)});
        rep.entries.push_back({"lax M (Z-)", k, {}, false, rm_minus.truncate_tdeg(rep.checked_tdeg)});
    }
    return rep;
}

ResidualReport verify_zakharov_shabat(const HierarchySolution& sol) {
    const TruncPtr& t = sol.S.truncation();
    ResidualReport rep;
    rep.checked_tdeg = t->tdeg - 2;
    std::vector<std::pair<TimeIndex, PdoOp>> plus_parts;
    for (const TimeIndex& k : t->active_times)
        plus_parts.emplace_back(k, (sol.L.pow(k.i) * sol.M.pow(k.j)).plus_part());
    for (size_t a = 0; a < plus_parts.size(); ++a) {
        for (size_t b = a + 1; b < plus_parts.size(); ++b) {
            const auto& [k1, B1] = plus_parts[a];
            const auto& [k2, B2] = plus_parts[b];
            PdoOp r = B1.dt(k2) - B2.dt(k1) - B2.commutator(B1);
            rep.entries.push_back(
                {"zakharov-shabat", k1, k2, true, r.truncate_tdeg(rep.checked_tdeg)});
        }
    }
    return rep;
}

ResidualReport verify_commutativity_preserved(const HierarchySolution& sol) {
    const TruncPtr& t = sol.S.truncation();
    ResidualReport rep;
    rep.checked_tdeg = t->tdeg;
    rep.entries.push_back(
        {"commutator", TimeIndex{0, 0}, {}, false, sol.L.commutator(sol.M)});
    return rep;
}

AdmissibilityResult is_admissible(const PdoOp& T, const CanonicalPair& pair) {
    if (T.is_zero() || T.ord2() != 0)
        throw DomainError("admissibility needs an operator of d2-order zero");
    const InnerOp& lead = T.leading2();
    if (lead.is_zero() || lead.leading().constant_part() == 0)
        throw DomainError("admissibility needs an invertible operator");
    PairPowers powers(pair);
    const PdoOp Tinv = T.inverse();
    AdmissibilityResult out;
    std::string witness;
    for (const PdoOp* base : {&powers.L_pow(1), &powers.M_pow(1)}) {
        const PdoOp conj = T * *base * Tinv;
        if (!has_constant_coefficients(conj, powers, /*require_time_free=*/true, &witness)) {
            out.admissible = false;
            out.witness = witness;
            return out;
        }
    }
    out.admissible = true;
    return out;
}

}  // namespace kp2
