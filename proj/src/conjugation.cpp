#include "kp2/conjugation.hpp"

#include <sstream>

namespace kp2 {

namespace {

// coefficientwise x1-antiderivative of an inner operator; throws when a top
// degree term cannot be integrated (the solve does not close at truncation)
InnerOp antid1_inner(const InnerOp& a, const char* who) {
    InnerOp r = InnerOp::zero(a.truncation());
    for (const auto& [q, c] : a.coeffs()) {
        bool clipped = false;
        r = r + InnerOp::term(q, c.antid1(&clipped));
        if (clipped)
            throw DomainError(std::string(who) +
                              ": x1-antiderivative clipped at the degree cap; "
                              "the solve does not close at this truncation");
    }
    return r.with_floor(a.exact_floor());
}

// Solve [u0, b] = rhs by the antiderivative iteration
//   d1(b_0) = rhs,  d1(b_k) = -[u0 - d1, b_{k-1}].
// Every step lowers ord1 of the bracket, so the sum closes in the window.
InnerOp solve_bracket(const InnerOp& u0, const InnerOp& rhs, const char* who) {
    const auto& t = u0.truncation();
    const InnerOp w = u0 - InnerOp::d1_symbol(t);
    InnerOp b = InnerOp::zero(t);
    InnerOp cur = antid1_inner(rhs, who);
    const int guard = -t->d1floor + t->xdeg + 4;
    for (int pass = 0; pass <= guard; ++pass) {
        if (cur.is_zero()) return b;
        b = b + cur;
        InnerOp bracket = w.commutator(cur);
        if (bracket.is_zero()) return b;
        cur = antid1_inner(-bracket, who);
    }
    throw DomainError(std::string(who) + ": bracket iteration failed to drain");
}

// coefficientwise x2-antiderivative with ker(d1) inputs
ScalarSeries antid2_checked(const ScalarSeries& c, const char* who) {
    bool clipped = false;
    ScalarSeries r = c.antid2(&clipped);
    if (clipped)
        throw DomainError(std::string(who) +
                          ": x2-antiderivative clipped at the degree cap");
    return r;
}

struct WorkingPair {
    PdoOp L;
    PdoOp M;
};

void conjugate_pair(WorkingPair& p, const PdoOp& T, const PdoOp& Tinv) {
    p.L = T * p.L * Tinv;
    p.M = T * p.M * Tinv;
}

}  // namespace

void CanonicalPair::validate() const {
    if (u0.is_zero() || !u0.is_monic1() || u0.ord1() != 1)
        throw DomainError("canonical pair: u0 must be monic of ord1 = 1");
    if (v_minus1.is_zero() || !v_minus1.is_monic1() || v_minus1.ord1() != 0)
        throw DomainError("canonical pair: v_-1 must be monic of ord1 = 0");
    if (!order0_residual().is_zero_above_floors())
        throw DomainError("canonical pair: order-0 identity fails");
    if (!L00().commutator(M00()).is_zero_above_floors())
        throw DomainError("canonical pair: L00 and M00 do not commute");
}

bool CanonicalPair::is_time_free() const {
    for (const InnerOp* op : {&u0, &v_minus1, &v0})
        for (const auto& [q, c] : op->coeffs())
            if (c.has_time_content()) return false;
    return true;
}

PairPowers::PairPowers(const CanonicalPair& pair)
    : pair_(pair), L_(pair.L00()), M_(pair.M00()) {}

const PdoOp& PairPowers::L_pow(long long i) const {
    auto it = lp_.find(i);
    if (it == lp_.end()) it = lp_.emplace(i, L_.pow(i)).first;
    return it->second;
}

const PdoOp& PairPowers::M_pow(long long j) const {
    auto it = mp_.find(j);
    if (it == mp_.end()) it = mp_.emplace(j, M_.pow(j)).first;
    return it->second;
}

ConjugationResult parshin_conjugate(const PdoOp& L, const PdoOp& M) {
    require_same_truncation(L.truncation(), M.truncation());
    const TruncPtr& t = L.truncation();

    if (L.is_zero() || L.ord2() != 0) throw DomainError("L must have ord2 = 0");
    if (M.is_zero() || M.ord2() != 1) throw DomainError("M must have ord2 = 1");
    const InnerOp u0 = L.coeff(0);
    const InnerOp vm1 = M.coeff(1);
    if (!u0.is_monic1() || u0.ord1() != 1)
        throw DomainError("L_+ must be monic of ord1 = 1");
    if (!vm1.is_monic1() || vm1.ord1() != 0)
        throw DomainError("(M d2^-1)_+ must be monic of ord1 = 0");
    const PdoOp comm = L.commutator(M);
    if (!comm.is_zero_above_floors()) {
        for (const auto& r : PdoOp::commute_criterion(L, M))
            if (r.order >= comm.exact_floor2() && !r.residual.is_zero_above_floors())
                throw DomainError(
                    "operators do not commute: first nonzero residual at order " +
                    std::to_string(r.order));
        throw DomainError("operators do not commute");
    }

    WorkingPair p{L, M};
    PdoOp S = PdoOp::one(t);
    InnerOp v0 = InnerOp::zero(t);

    for (int m = -1; m >= t->d2floor; --m) {
        // clean L at level m:  T = 1 + b d2^m with [u0, b] = u_m
        // (levels below the certified d2-floor carry no claim to clean)
        InnerOp um = (m >= p.L.exact_floor2()) ? p.L.coeff(m) : InnerOp::zero(t);
        if (!um.is_zero()) {
            InnerOp b = solve_bracket(u0, um, "parshin level solve");
            PdoOp T = PdoOp::one(t) + PdoOp::term(m, b);
            conjugate_pair(p, T, T.inverse());
            S = T * S;
        }
        if (m == -1) {
            v0 = p.M.coeff(0);
            continue;
        }
        if (m + 1 < p.M.exact_floor2()) continue;
        // clean M at level m+1 with the commuting pair (s, d):
        // s has [u0, s] = 0 so it leaves L alone above level m, and d repairs
        // the level-m damage (m+1) s d2(u0) that s causes.
        int guard = t->xdeg - t->d1floor + 6;
        while (true) {
            InnerOp raw = p.M.coeff(m + 1);
            InnerOp w = InnerOp::zero(t);  // certified content only
            for (const auto& [q1, c] : raw.coeffs())
                if (q1 >= raw.exact_floor()) w = w + InnerOp::term(q1, c);
            w = w.with_floor(raw.exact_floor());
            if (w.is_zero()) break;
            if (--guard < 0)
                throw DomainError("parshin iteration failed to drain at level " +
                                  std::to_string(m + 1) + "; defect ord1 " +
                                  std::to_string(w.ord1()));
            const int defect = w.ord1();
            InnerExpansion e = w.as_series_in(u0, /*strict=*/false);
            if (!e.exact)
                throw DomainError("parshin iteration: level " + std::to_string(m + 1) +
                                  " coefficient does not commute with u0 (order " +
                                  std::to_string(e.offending_order) + ")");
            InnerOp s = InnerOp::zero(t);
            for (const auto& [k, bk] : e.terms)
                s = s + u0.pow(k).scale_series(antid2_checked(bk, "parshin step e"));
            // s approximates the theorem's corrector only as far as the
            // level data was certified
            s = s.with_floor(std::max(s.exact_floor(), w.exact_floor()));
            InnerOp d = solve_bracket(u0, s.scale(m + 1) * u0.d2_coeffwise(),
                                      "parshin step d");
            PdoOp T1 = PdoOp::one(t) + PdoOp::term(m + 1, s);
            PdoOp T2 = PdoOp::one(t) + PdoOp::term(m, d);
            PdoOp T = T2 * T1;
            conjugate_pair(p, T, T.inverse());
            S = T * S;
            InnerOp raw2 = p.M.coeff(m + 1);
            InnerOp w2 = InnerOp::zero(t);
            for (const auto& [q1, c] : raw2.coeffs())
                if (q1 >= raw2.exact_floor()) w2 = w2 + InnerOp::term(q1, c);
            if (!w2.is_zero() && w2.ord1() >= defect)
                throw DomainError("parshin iteration stalled at level " +
                                  std::to_string(m + 1) + "; defect ord1 " +
                                  std::to_string(w2.ord1()));
        }
        // The level was drained only as far as its data was certified.  A
        // deeper window could require further corrections with inner slots
        // below that floor; their product effects reach up by the largest
        // stored inner order, so imprint the loss on everything at and
        // below the level.
        const int leftover = p.M.coeff(m + 1).exact_floor();
        if (leftover > t->d1floor) {
            int beta = 1;
            for (const PdoOp* op : {&p.L, &p.M, &S})
                for (const auto& [q2, c] : op->coeffs())
                    if (!c.is_zero()) beta = std::max(beta, c.ord1());
            const int deg = leftover - 1 + beta;
            p.L = p.L.degrade_below_level(m + 1, deg);
            p.M = p.M.degrade_below_level(m + 1, deg);
            S = S.degrade_below_level(m + 1, deg);
        }
    }

    ConjugationResult out{S, CanonicalPair{u0, vm1, v0}, {}};
    out.pair.validate();

    // residual report: certified leftover of S L S^-1 - L00 and of
    // S M S^-1 - M00 (orders below the propagated floor carry no claim)
    const PdoOp Sinv = S.inverse();
    PdoOp rl = S * L * Sinv - out.pair.L00();
    PdoOp rm = S * M * Sinv - out.pair.M00();
    for (const auto& [q, c] : rl.coeffs())
        if (q >= rl.exact_floor2()) out.residuals.push_back({q, c});
    for (const auto& [q, c] : rm.coeffs())
        if (q >= rm.exact_floor2()) out.residuals.push_back({q, c});
    return out;
}

PairExpansion expand_in_pair(const PdoOp& X, const PairPowers& powers) {
    const TruncPtr& t = X.truncation();
    PairExpansion out;
    PdoOp rem = X;
    const InnerOp& u0 = powers.pair().u0;
    const int floor2 = t->d2floor;
    const int floor1 = t->d1floor;
    int guard = (8 - floor2) * (t->xdeg - floor1 + 8);
    while (!rem.is_zero() && !rem.is_zero_above_floors()) {
        if (--guard < 0) {
            out.exact = false;
            out.witness = "expansion failed to terminate";
            break;
        }
        // topmost d2-order carrying certified content
        int j = floor2 - 1;
        for (auto it = rem.coeffs().rbegin(); it != rem.coeffs().rend(); ++it)
            if (it->first >= rem.exact_floor2() && !it->second.is_zero_above_floors()) {
                j = it->first;
                break;
            }
        if (j < floor2) break;
        // the d2-top of M00^j is its leading inner coefficient
        const PdoOp& Mj = powers.M_pow(j);
        if (Mj.is_zero() || Mj.ord2() != j) {
            out.exact = false;
            out.witness = "M00 power misses d2-order " + std::to_string(j);
            break;
        }
        const InnerOp cj = rem.coeff(j);
        InnerOp certified(X.truncation());
        for (const auto& [q1, c] : cj.coeffs())
            if (q1 >= cj.exact_floor()) certified = certified + InnerOp::term(q1, c);
        certified = certified.with_floor(cj.exact_floor());
        const InnerOp y = certified.right_divide(Mj.leading2());
        InnerExpansion e = y.as_series_in(u0, /*strict=*/false);
        if (!e.exact) {
            out.exact = false;
            std::ostringstream os;
            os << "coefficient at d2-order " << j << ", d1-order " << e.offending_order
               << " has x1 content";
            out.witness = os.str();
            break;
        }
        PdoOp subtract = PdoOp::zero(t);
        for (const auto& [i, c] : e.terms) {
            out.terms.push_back({i, j, c});
            subtract = subtract + powers.monomial(i, j).scale_inner_left(InnerOp::from_scalar(c));
        }
        PdoOp next = rem - subtract;
        // the d2-top must drop; otherwise the operator is not in the span
        if (!next.is_zero() && next.ord2() >= j &&
            !(next.coeff(j).is_zero() || next.coeff(j).is_zero_above_floors())) {
            out.exact = false;
            out.witness = "d2-order " + std::to_string(j) + " does not reduce";
            break;
        }
        // drop the certified-zero top explicitly
        PdoOp::CoeffMap kept;
        for (const auto& [q, c] : next.coeffs())
            if (q < j) kept.emplace(q, c);
        rem = PdoOp::from_coeffs(t, std::move(kept), next.exact_floor2());
    }
    return out;
}

bool has_constant_coefficients(const PdoOp& X, const PairPowers& powers,
                               bool require_time_free, std::string* witness) {
    PairExpansion e = expand_in_pair(X, powers);
    if (!e.exact) {
        if (witness) *witness = e.witness;
        return false;
    }
    for (const auto& term : e.terms) {
        const bool ok = require_time_free ? term.coeff.is_rational_constant()
                                          : (term.coeff.is_ker_d1() &&
                                             term.coeff.max_x2_degree() <= 0);
        if (!ok) {
            if (witness) {
                std::ostringstream os;
                os << "coefficient of L00^" << term.i << " M00^" << term.j
                   << " is not constant: " << term.coeff.str();
                *witness = os.str();
            }
            return false;
        }
    }
    return true;
}

NormalizeResult normalize_canonical(const CanonicalPair& pair) {
    pair.validate();
    const TruncPtr& t = pair.u0.truncation();

    // Stage 1: conjugate p := v_-1 u0 (monic, ord1 = 1) to d1 by an
    // invertible inner operator W, order by order.
    InnerOp p = pair.v_minus1 * pair.u0;
    InnerOp W = InnerOp::one(t);
    {
        // kill the order-0 coefficient with a scalar factor g = exp(h),
        // d1(h) = p_0
        ScalarSeries p0 = p.coeff(0);
        if (!p0.is_zero()) {
            bool clipped = false;
            ScalarSeries h = p0.antid1(&clipped);
            if (clipped)
                throw UnsupportedInput(
                    "normalize_canonical: d1(x) = c x solve does not close at truncation");
            ScalarSeries g = ScalarSeries::one(t);
            ScalarSeries pw = ScalarSeries::one(t);
            Rational fact = 1;
            for (int n = 1; n <= t->xdeg + t->tdeg + 1; ++n) {
                pw = pw * h;
                if (pw.is_zero()) break;
                fact *= n;
                g = g + pw.scale(Rational(1) / fact);
            }
            InnerOp G = InnerOp::from_scalar(g);
            W = G * W;
            p = G * p * G.inverse();
        }
        for (int level = -1; level >= t->d1floor; --level) {
            ScalarSeries c = p.coeff(level);
            if (c.is_zero()) continue;
            bool clipped = false;
            ScalarSeries wq = c.antid1(&clipped);
            if (clipped)
                throw UnsupportedInput(
                    "normalize_canonical: antiderivative clipped during stage 1");
            InnerOp V = InnerOp::one(t) + InnerOp::term(level - 1, wq);
            W = V * W;
            p = V * p * V.inverse();
            if (!p.coeff(level).is_zero())
                throw UnsupportedInput("normalize_canonical: level " + std::to_string(level) +
                                       " does not close at truncation");
        }
    }

    auto conj_pair = [&](const CanonicalPair& q, const InnerOp& V) {
        const InnerOp Vinv = V.inverse();
        CanonicalPair r{V * q.u0 * Vinv, V * q.v_minus1 * Vinv,
                        V * q.v_minus1 * Vinv.d2_coeffwise() + V * q.v0 * Vinv};
        return r;
    };

    CanonicalPair cur = conj_pair(pair, W);

    // Stage 2: remove the ker(d1) monomial content of (v0)_- with
    // Sb = exp(X), d2(X) = -x coefficientwise.
    InnerOp x = InnerOp::zero(t);
    for (const auto& [q, c] : cur.v0.coeffs()) {
        if (q >= 0) continue;
        ScalarSeries::TermMap kerpart;
        for (const auto& [mono, coef] : c.terms())
            if (mono.e1 == 0) kerpart.emplace(mono, coef);
        if (!kerpart.empty())
            x = x + InnerOp::term(q, ScalarSeries::from_terms(t, std::move(kerpart)));
    }
    InnerOp Sb2 = InnerOp::one(t);
    if (!x.is_zero()) {
        // Sb2 (d2 + v0) Sb2^-1 = d2 - d2(Y) + v0 for Sb2 = exp(Y) in the
        // commutative ker(d1) subring, so Y integrates +x
        InnerOp X = InnerOp::zero(t);
        for (const auto& [q, c] : x.coeffs())
            X = X + InnerOp::term(q, antid2_checked(c, "normalize_canonical stage 2"));
        InnerOp pw = InnerOp::one(t);
        Rational fact = 1;
        Sb2 = InnerOp::one(t);
        for (int n = 1; n <= -t->d1floor + 2; ++n) {
            pw = pw * X;
            if (pw.is_zero()) break;
            fact *= n;
            Sb2 = Sb2 + pw.scale(Rational(1) / fact);
        }
        cur = conj_pair(cur, Sb2);
    }

    NormalizeResult out{Sb2 * W, cur};

    // verify the target conditions; reject inputs the model cannot normalize
    InnerOp target = InnerOp::d1_symbol(t) * out.pair.u0.inverse();
    if (!out.pair.v_minus1.eq_above_floors(target))
        throw UnsupportedInput("normalize_canonical: v_-1 != d1 u0^-1 after stage 1");
    for (const auto& [q, c] : out.pair.v0.coeffs()) {
        if (q >= 0 || q < t->d1floor + 2) continue;
        for (const auto& [mono, coef] : c.terms())
            if (mono.e1 == 0)
                throw UnsupportedInput(
                    "normalize_canonical: ker(d1) content survives in (v0)_-");
    }
    out.pair.validate();
    return out;
}

}  // namespace kp2
