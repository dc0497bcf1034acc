#include "kp2/isospectral.hpp"

#include <numeric>

namespace kp2 {

FullOrder full_order(const PdoOp& a) {
    if (a.is_zero()) throw DomainError("full order of zero operator");
    return {a.leading2().ord1(), a.ord2()};
}

void CommutingPair::validate() const {
    require_same_truncation(P1.truncation(), P2.truncation());
    for (const PdoOp* p : {&P1, &P2}) {
        if (p->is_zero() || !p->is_monic())
            throw DomainError("commuting pair operators must be monic");
        if (p->ord2() < 0 || !p->minus_part().is_zero_above_floors())
            throw DomainError("commuting pair operators must have no negative d2-orders");
    }
    if (!P1.commutator(P2).is_zero_above_floors())
        throw DomainError("operators do not commute");
    const FullOrder o1 = full_order(P1);
    const FullOrder o2 = full_order(P2);
    const long long l = std::gcd(o2.p, o2.q);
    if (l != 0) {
        // degenerate when (p1,q1) = d (p2/l, q2/l) for an integer d
        const long long p2l = o2.p / l;
        const long long q2l = o2.q / l;
        auto multiple = [&](long long a, long long b) {
            // is (o1.p, o1.q) == d*(a, b) for some integer d
            if (a == 0 && b == 0) return false;
            if (b != 0) {
                if (o1.q % b != 0) return false;
                const long long d = o1.q / b;
                return o1.p == d * a;
            }
            if (o1.q != 0) return false;
            return a != 0 && o1.p % a == 0;
        };
        if (multiple(p2l, q2l))
            throw DomainError("degenerate order condition: " + o1.str() +
                              " is an integer multiple of " + FullOrder{p2l, q2l}.str());
    } else if (o1.p == 0 && o1.q == 0) {
        throw DomainError("degenerate order condition: both full orders vanish");
    }
}

namespace {
PdoOp signed_root(const PdoOp& a, long long k) {
    // monic k-th root for k != 0, via the inverse for negative k
    if (k > 0) return a.kth_root(k);
    return a.inverse().kth_root(-k);
}
}  // namespace

ReducedPair reduce_pair(const CommutingPair& pair) {
    pair.validate();
    FullOrder o1 = full_order(pair.P1);
    FullOrder o2 = full_order(pair.P2);
    const PdoOp* A = &pair.P1;
    const PdoOp* B = &pair.P2;
    if (o1.q < o2.q) {
        std::swap(o1, o2);
        std::swap(A, B);
    }
    if (o1.q < 1)
        throw DomainError("reduction needs an operator of positive d2-order");

    const long long l = std::gcd(o2.p, o2.q);
    const long long g = std::gcd(o1.q, l == 0 ? 0 : o2.q / l);
    const long long a = (l == 0) ? 0 : o2.q / (l * g);
    const long long b = o1.q / g;

    // P' = A^a (B^(1/l))^-b has full order (k, 0),
    // k = (p1 q2 - p2 q1) / (l g) nonzero by non-degeneracy
    const PdoOp Bl = (l <= 1) ? *B : B->kth_root(l);
    const PdoOp Pprime = A->pow(a) * Bl.pow(l == 0 ? 0 : -b);
    if (Pprime.is_zero() || Pprime.ord2() != 0)
        throw DomainError("reduction failed: P' does not have d2-order 0");
    const long long k = Pprime.leading2().ord1();
    if (k == 0) throw DomainError("degenerate order condition (k = 0)");

    PdoOp L1 = signed_root(Pprime, k);
    // recover L2 from an operator that genuinely involves d2
    const PdoOp* C = (o2.q >= 1) ? B : A;
    const FullOrder oc = (o2.q >= 1) ? o2 : o1;
    PdoOp L2 = signed_root(*C * L1.pow(-oc.p), oc.q);

    ReducedPair out{L1, L2, {}, {}};
    const FullOrder fo1 = full_order(pair.P1);
    const FullOrder fo2 = full_order(pair.P2);
    out.o1 = fo1;
    out.o2 = fo2;
    if (full_order(L1) != FullOrder{1, 0} || full_order(L2) != FullOrder{0, 1})
        throw DomainError("reduction produced wrong full orders");
    if (!L1.commutator(L2).is_zero_above_floors())
        throw DomainError("reduced operators do not commute at this truncation");
    return out;
}

std::pair<PdoOp, PdoOp> master_rhs(const PdoOp& L1, const PdoOp& L2, const TimeIndex& k,
                                   const AlphaFn* alpha) {
    return lax_rhs(L1, L2, k, alpha);
}

FLDecomposition in_FL(const PdoOp& Q, const PdoOp& L1, const PdoOp& L2) {
    require_same_truncation(Q.truncation(), L1.truncation());
    const TruncPtr& t = Q.truncation();
    FLDecomposition out;
    if (Q.is_zero()) {
        out.member = true;
        return out;
    }
    if (Q.ord2() < 0 || !Q.minus_part().is_zero_above_floors())
        throw DomainError("membership test needs an operator without negative d2-orders");
    {
        const PdoOp c1 = Q.commutator(L1);
        const PdoOp c2 = Q.commutator(L2);
        if (!c1.plus_part().is_zero_above_floors()) {
            out.witness = "ord2([Q, L1]) >= 0 (order " + std::to_string(c1.ord2()) + ")";
            return out;
        }
        if (!c2.plus_part().is_zero_above_floors()) {
            out.witness = "ord2([Q, L2]) >= 0 (order " + std::to_string(c2.ord2()) + ")";
            return out;
        }
    }
    out.member = true;

    // greedy peeling by descending full order
    std::map<std::pair<long long, long long>, PdoOp> cache;
    auto basis = [&](long long i, long long j) -> const PdoOp& {
        auto key = std::make_pair(i, j);
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache.emplace(key, (L1.pow(i) * L2.pow(j)).plus_part()).first;
        return it->second;
    };
    PdoOp rem = Q;
    int guard = (Q.ord2() + 2) * (t->xdeg - t->d1floor + 8);
    while (!rem.is_zero() && !rem.is_zero_above_floors()) {
        if (--guard < 0) {
            out.member = false;
            out.witness = "greedy decomposition did not terminate";
            return out;
        }
        // topmost certified slot
        int j = t->d2floor - 1;
        for (auto it = rem.coeffs().rbegin(); it != rem.coeffs().rend(); ++it)
            if (it->first >= rem.exact_floor2() && !it->second.is_zero_above_floors()) {
                j = it->first;
                break;
            }
        if (j < 0) break;  // leftover lives below d2-order 0 or is uncertified
        const InnerOp cj = rem.coeff(j);
        int i = cj.exact_floor() - 1;
        for (auto it = cj.coeffs().rbegin(); it != cj.coeffs().rend(); ++it)
            if (it->first >= cj.exact_floor() && !it->second.is_zero()) {
                i = it->first;
                break;
            }
        if (i < cj.exact_floor()) break;
        const ScalarSeries lead = cj.coeff(i);
        if (!lead.is_rational_constant()) {
            out.member = false;
            out.witness = "leading coefficient at full order " + FullOrder{i, j}.str() +
                          " is not constant: " + lead.str();
            return out;
        }
        const Rational c = lead.constant_part();
        out.terms.push_back({FullOrder{i, j}, c});
        rem = rem - basis(i, j).scale(c);
    }
    return out;
}

DeformationFamily deform(const CommutingPair& pair, const AlphaFn& alpha, const PdoOp& S0,
                         const TruncPtr& trunc) {
    ReducedPair red = reduce_pair(pair);

    // alpha-membership of the base pair in the (L1^i L2^j)_+ span
    for (const PdoOp* P : {&pair.P1, &pair.P2}) {
        FLDecomposition d = in_FL(*P, red.L1, red.L2);
        if (!d.member)
            throw DomainError("base operator is not in the flow span: " + d.witness);
        for (const auto& [o, c] : d.terms)
            if (!alpha.allows({o.p, o.q}))
                throw DomainError("base operator carries full order " + o.str() +
                                  " outside the alpha span");
    }

    auto conj = parshin_conjugate(red.L1, red.L2);

    // deform in a window padded for the extra order lifts of P1, P2, then
    // restrict; every user-window slot is exact after the pad
    const int qmax = static_cast<int>(std::max(full_order(pair.P1).q, full_order(pair.P2).q));
    const int pmax = static_cast<int>(std::max(std::abs(full_order(pair.P1).p),
                                               std::abs(full_order(pair.P2).p)));
    const TruncPtr deep = padded_truncation(trunc, qmax + 1, pmax + 1);
    CanonicalPair pd{conj.pair.u0.retruncate(deep), conj.pair.v_minus1.retruncate(deep),
                     conj.pair.v0.retruncate(deep)};
    HierarchySolution ds = sato_wilson_solve(pd, alpha, S0.retruncate(deep), deep);
    const PdoOp P1d = pair.P1.retruncate(deep);
    const PdoOp P2d = pair.P2.retruncate(deep);
    const PdoOp Yinv = ds.Y.inverse();
    const PdoOp Pt1 = ds.Y * P1d * Yinv;
    const PdoOp Pt2 = ds.Y * P2d * Yinv;

    HierarchySolution sol{ds.S.retruncate(trunc).with_window_floors(),
                          ds.Y.retruncate(trunc).with_window_floors(),
                          ds.L.retruncate(trunc).with_window_floors(),
                          ds.M.retruncate(trunc).with_window_floors(), conj.pair, alpha};
    DeformationFamily fam{pair, red, sol, Pt1.retruncate(trunc).with_window_floors(),
                          Pt2.retruncate(trunc).with_window_floors()};
    return fam;
}

ResidualReport verify_deformation(const DeformationFamily& fam) {
    const TruncPtr& t = fam.sol.S.truncation();
    ResidualReport rep;
    rep.checked_tdeg = t->tdeg - 1;
    for (const TimeIndex& k : t->active_times) {
        const PdoOp Q = (fam.sol.L.pow(k.i) * fam.sol.M.pow(k.j)).plus_part();
        PdoOp r1 = fam.Pt1.dt(k) - Q.commutator(fam.Pt1);
        PdoOp r2 = fam.Pt2.dt(k) - Q.commutator(fam.Pt2);
        rep.entries.push_back({"deform P1", k, {}, false, r1.truncate_tdeg(rep.checked_tdeg)});
        rep.entries.push_back({"deform P2", k, {}, false, r2.truncate_tdeg(rep.checked_tdeg)});
    }
    ResidualReport zs = verify_zakharov_shabat(fam.sol);
    for (auto& e : zs.entries) rep.entries.push_back(std::move(e));
    return rep;
}

}  // namespace kp2
