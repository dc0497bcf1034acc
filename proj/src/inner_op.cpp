#include "kp2/inner_op.hpp"

#include <sstream>

namespace kp2 {

namespace {
// top stored order, or floor-1 when nothing is stored (possible hidden tail)
int ord_bound(const InnerOp& a) {
    if (!a.is_zero()) return a.coeffs().rbegin()->first;
    return a.exact_floor() - 1;
}
}  // namespace

InnerOp InnerOp::from_scalar(const ScalarSeries& s) {
    InnerOp r(s.truncation());
    if (!s.is_zero()) r.coeffs_.emplace(0, s);
    return r;
}

InnerOp InnerOp::term(int q, const ScalarSeries& c) {
    InnerOp r(c.truncation());
    if (q < r.trunc_->d1floor)
        throw DomainError("order " + std::to_string(q) + " below d1floor");
    if (!c.is_zero()) r.coeffs_.emplace(q, c);
    return r;
}

InnerOp InnerOp::from_coeffs(const TruncPtr& t, CoeffMap coeffs, int exact_floor) {
    InnerOp r(t);
    for (auto& [q, c] : coeffs) {
        if (q < t->d1floor) throw DomainError("coefficient below d1floor");
        require_same_truncation(t, c.truncation());
        if (!c.is_zero()) r.coeffs_.emplace(q, std::move(c));
    }
    if (exact_floor < t->d1floor) throw DomainError("exact_floor below d1floor");
    r.exact_floor_ = exact_floor;
    return r;
}

InnerOp InnerOp::with_floor(int f) const {
    InnerOp r = *this;
    r.exact_floor_ = std::max(f, trunc_->d1floor);
    return r;
}

bool InnerOp::is_zero_above_floors() const {
    for (const auto& [q, c] : coeffs_)
        if (q >= exact_floor_ && !c.is_zero()) return false;
    return true;
}

bool InnerOp::is_one() const {
    return coeffs_.size() == 1 && coeffs_.begin()->first == 0 && coeffs_.begin()->second.is_one();
}

int InnerOp::ord1() const {
    if (coeffs_.empty()) throw DomainError("ord1 of zero operator");
    return coeffs_.rbegin()->first;
}

const ScalarSeries& InnerOp::leading() const {
    if (coeffs_.empty()) throw DomainError("leading coefficient of zero operator");
    return coeffs_.rbegin()->second;
}

ScalarSeries InnerOp::coeff(int q) const {
    auto it = coeffs_.find(q);
    if (it != coeffs_.end()) return it->second;
    return ScalarSeries::zero(trunc_);
}

bool InnerOp::is_monic1() const { return !coeffs_.empty() && leading().is_one(); }

void InnerOp::insert(int q, const ScalarSeries& c) {
    if (q < trunc_->d1floor || c.is_zero()) return;
    auto it = coeffs_.find(q);
    if (it == coeffs_.end()) {
        coeffs_.emplace(q, c);
    } else {
        ScalarSeries s = it->second + c;
        if (s.is_zero())
            coeffs_.erase(it);
        else
            it->second = std::move(s);
    }
}

InnerOp InnerOp::operator-() const {
    InnerOp r(trunc_);
    for (const auto& [q, c] : coeffs_) r.coeffs_.emplace(q, -c);
    r.exact_floor_ = exact_floor_;
    return r;
}

InnerOp InnerOp::operator+(const InnerOp& o) const {
    require_same_truncation(trunc_, o.trunc_);
    InnerOp r = *this;
    for (const auto& [q, c] : o.coeffs_) r.insert(q, c);
    r.exact_floor_ = std::max(exact_floor_, o.exact_floor_);
    return r;
}

InnerOp InnerOp::operator-(const InnerOp& o) const { return *this + (-o); }

InnerOp InnerOp::operator*(const InnerOp& o) const {
    require_same_truncation(trunc_, o.trunc_);
    InnerOp r(trunc_);
    const int floor = trunc_->d1floor;
    for (const auto& [i, a] : coeffs_) {
        for (const auto& [j, b] : o.coeffs_) {
            // k-th Leibniz term lands at order i+j-k
            ScalarSeries db = b;
            for (int k = 0; i + j - k >= floor; ++k) {
                if (k > 0) {
                    db = db.d1();
                    if (db.is_zero()) break;
                }
                r.insert(i + j - k, (a * db).scale(binomial_general(i, k)));
            }
        }
    }
    if (is_zero() && exact_floor_ == trunc_->d1floor) return r;  // exact zero
    if (o.is_zero() && o.exact_floor_ == trunc_->d1floor) return r;
    r.exact_floor_ = std::max(
        {trunc_->d1floor, exact_floor_ + ord_bound(o), o.exact_floor_ + ord_bound(*this)});
    return r;
}

InnerOp InnerOp::scale(const Rational& c) const {
    InnerOp r(trunc_);
    if (c == 0) return r.with_floor(exact_floor_);
    for (const auto& [q, s] : coeffs_) r.coeffs_.emplace(q, s.scale(c));
    r.exact_floor_ = exact_floor_;
    return r;
}

InnerOp InnerOp::scale_series(const ScalarSeries& s) const {
    require_same_truncation(trunc_, s.truncation());
    InnerOp r(trunc_);
    for (const auto& [q, c] : coeffs_) r.insert(q, s * c);
    r.exact_floor_ = exact_floor_;
    return r;
}

InnerOp InnerOp::d1_coeffwise() const {
    InnerOp r(trunc_);
    for (const auto& [q, c] : coeffs_) r.insert(q, c.d1());
    r.exact_floor_ = exact_floor_;
    return r;
}

InnerOp InnerOp::d2_coeffwise() const {
    InnerOp r(trunc_);
    for (const auto& [q, c] : coeffs_) r.insert(q, c.d2());
    r.exact_floor_ = exact_floor_;
    return r;
}

InnerOp InnerOp::dt(const TimeIndex& k) const {
    InnerOp r(trunc_);
    for (const auto& [q, c] : coeffs_) r.insert(q, c.dt(k));
    r.exact_floor_ = exact_floor_;
    return r;
}

InnerOp InnerOp::eval_t0() const {
    InnerOp r(trunc_);
    for (const auto& [q, c] : coeffs_) r.insert(q, c.eval_t0());
    r.exact_floor_ = exact_floor_;
    return r;
}

InnerOp InnerOp::truncate_tdeg(int cap) const {
    InnerOp r(trunc_);
    for (const auto& [q, c] : coeffs_) r.insert(q, c.truncate_tdeg(cap));
    r.exact_floor_ = exact_floor_;
    return r;
}

std::pair<InnerOp, InnerOp> InnerOp::split() const {
    InnerOp plus(trunc_), minus(trunc_);
    for (const auto& [q, c] : coeffs_)
        (q >= 0 ? plus : minus).coeffs_.emplace(q, c);
    // plus part is exactly zero below order 0, so it is fully certified
    // whenever the parent was certified at all nonnegative orders
    plus.exact_floor_ = exact_floor_ > 0 ? exact_floor_ : trunc_->d1floor;
    minus.exact_floor_ = exact_floor_;
    return {plus, minus};
}

InnerOp InnerOp::inverse() const {
    if (is_zero()) throw DomainError("inverse of zero operator");
    const int n = ord1();
    if (-n < trunc_->d1floor)
        throw DomainError("inverse falls entirely below the d1 window");
    const ScalarSeries& lead = leading();
    if (lead.constant_part() == 0)
        throw DomainError("non-invertible leading coefficient (not a unit)");
    const ScalarSeries lead_inv = lead.inverse();
    const int floor = trunc_->d1floor;
    // Solve (this * b) = 1 order by order from the top equation down.
    InnerOp b(trunc_);
    for (int q = 0; q - n >= floor; --q) {
        // contribution at order q from already-known coefficients of b
        ScalarSeries acc = ScalarSeries::zero(trunc_);
        for (const auto& [i, a] : coeffs_) {
            for (const auto& [j, bc] : b.coeffs_) {
                const int k = i + j - q;
                if (k < 0) continue;
                ScalarSeries db = bc;
                for (int s = 0; s < k; ++s) db = db.d1();
                if (db.is_zero()) continue;
                acc = acc + (a * db).scale(binomial_general(i, k));
            }
        }
        ScalarSeries target = (q == 0) ? ScalarSeries::one(trunc_) : ScalarSeries::zero(trunc_);
        // unknown enters as lead * b_{q-n}
        ScalarSeries bq = lead_inv * (target - acc);
        b.insert(q - n, bq);
    }
    b.exact_floor_ = std::max(floor, exact_floor_ - 2 * n);
    return b;
}

InnerOp InnerOp::pow(long long k) const {
    if (k == 0) return InnerOp::one(trunc_);
    const InnerOp base = (k > 0) ? *this : inverse();
    long long e = k > 0 ? k : -k;
    InnerOp acc = InnerOp::one(trunc_);
    InnerOp sq = base;
    while (e > 0) {
        if (e & 1) acc = acc * sq;
        e >>= 1;
        if (e) sq = sq * sq;
    }
    return acc;
}

InnerOp InnerOp::right_divide(const InnerOp& denom) const {
    require_same_truncation(trunc_, denom.trunc_);
    if (denom.is_zero()) throw DomainError("division by zero operator");
    const int n = denom.ord1();
    const ScalarSeries& dlead = denom.leading();
    if (dlead.constant_part() == 0)
        throw DomainError("division needs a unit leading coefficient");
    const ScalarSeries dlead_inv = dlead.inverse();
    InnerOp q(trunc_);
    InnerOp rem = *this;
    while (!rem.is_zero()) {
        const int o = rem.ord1();
        const int p = o - n;
        if (p < trunc_->d1floor) break;
        const ScalarSeries qc = rem.leading() * dlead_inv;
        const InnerOp piece = InnerOp::term(p, qc);
        q.insert(p, qc);
        rem = rem - piece * denom;
        if (!rem.is_zero() && rem.ord1() >= o)
            throw DomainError("right division failed to reduce order");
    }
    q.exact_floor_ = std::max(trunc_->d1floor,
                              std::max(exact_floor_, denom.exact_floor_ + ord_bound(*this) -
                                                         denom.ord1()) -
                                  denom.ord1());
    return q;
}

InnerOp InnerOp::kth_root(long long k) const {
    if (k <= 0) throw DomainError("root index must be positive");
    if (is_zero()) throw DomainError("k-th root of zero operator");
    if (!is_monic1()) throw DomainError("k-th root needs a monic operator");
    if (ord1() % k != 0)
        throw DomainError("ord1 not divisible by root index");
    const int m = static_cast<int>(ord1() / k);
    InnerOp r = InnerOp::d1_symbol(trunc_, m);
    const int guard = ord1() - k * trunc_->d1floor + trunc_->xdeg + trunc_->tdeg + 4;
    for (int pass = 0; pass < guard; ++pass) {
        InnerOp err = *this - r.pow(k);
        // ignore content below what the window can certify
        bool live = false;
        int o = 0;
        for (auto it = err.coeffs_.rbegin(); it != err.coeffs_.rend(); ++it) {
            if (it->first - m * static_cast<int>(k - 1) < trunc_->d1floor) break;
            if (!it->second.is_zero()) {
                live = true;
                o = it->first;
                break;
            }
        }
        if (!live)
            return r.with_floor(exact_floor_ - m * static_cast<int>(k - 1));
        r.insert(o - m * static_cast<int>(k - 1),
                 err.coeffs_.at(o).scale(Rational(1, k)));
    }
    throw DomainError("k-th root iteration failed to converge at truncation");
}

InnerExpansion InnerOp::as_series_in(const InnerOp& u0, bool strict) const {
    require_same_truncation(trunc_, u0.trunc_);
    if (u0.is_zero() || !u0.is_monic1() || u0.ord1() != 1)
        throw DomainError("as_series_in needs monic u0 of ord1 = 1");
    InnerExpansion out;
    InnerOp rem = *this;
    std::map<int, InnerOp> pow_cache;
    auto u0pow = [&](int q) -> const InnerOp& {
        auto it = pow_cache.find(q);
        if (it == pow_cache.end()) it = pow_cache.emplace(q, u0.pow(q)).first;
        return it->second;
    };
    // peel only exponents backed by certified data
    const int floor = std::max(trunc_->d1floor, exact_floor_);
    while (!rem.is_zero()) {
        const int q = rem.ord1();
        if (q < floor) break;
        const ScalarSeries c = rem.leading();
        if (!c.is_ker_d1()) {
            if (strict)
                throw DomainError(
                    "operator does not commute with u0 at truncation: coefficient at order " +
                    std::to_string(q) + " has x1 content");
            out.exact = false;
            out.offending_order = q;
            break;
        }
        out.terms.emplace_back(q, c);
        rem = rem - u0pow(q).scale_series(c);
        if (!rem.is_zero() && rem.ord1() >= q)
            throw DomainError("as_series_in failed to reduce order (u0 not monic?)");
    }
    return out;
}

InnerOp InnerOp::retruncate(const TruncPtr& to) const {
    if (to->active_times != trunc_->active_times)
        throw DomainError("retruncation cannot change the active time set");
    InnerOp r(to);
    for (const auto& [q, c] : coeffs_) {
        if (q < to->d1floor) continue;
        ScalarSeries::TermMap tm;
        for (const auto& [m, v] : c.terms())
            if (m.xdeg() <= to->xdeg && m.tdeg() <= to->tdeg) tm.emplace(m, v);
        ScalarSeries moved = ScalarSeries::from_terms(to, std::move(tm));
        if (!moved.is_zero()) r.coeffs_.emplace(q, std::move(moved));
    }
    r.exact_floor_ = std::max(to->d1floor, exact_floor_);
    return r;
}

bool InnerOp::eq_above_floors(const InnerOp& o) const {
    require_same_truncation(trunc_, o.trunc_);
    const int floor = std::max(exact_floor_, o.exact_floor_);
    InnerOp d = *this - o;
    for (const auto& [q, c] : d.coeffs_)
        if (q >= floor && !c.is_zero()) return false;
    return true;
}

InnerOp eval_expansion(const InnerExpansion& e, const InnerOp& u0) {
    InnerOp acc = InnerOp::zero(u0.truncation());
    for (const auto& [q, c] : e.terms) acc = acc + u0.pow(q).scale_series(c);
    return acc;
}

std::string InnerOp::str() const {
    if (coeffs_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
        if (!first) os << "  +  ";
        first = false;
        os << "(" << it->second.str() << ")";
        if (it->first != 0) os << "*D1^" << it->first;
    }
    os << "  [fl " << exact_floor_ << "]";
    return os.str();
}

}  // namespace kp2
