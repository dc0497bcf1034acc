#include "kp2/pdo_op.hpp"

#include <sstream>

namespace kp2 {

namespace {
int ord_bound2(const PdoOp& a) {
    if (!a.is_zero()) return a.coeffs().rbegin()->first;
    return a.exact_floor2() - 1;
}
}  // namespace

PdoOp PdoOp::from_inner(const InnerOp& c) {
    PdoOp r(c.truncation());
    if (!c.is_zero()) r.coeffs_.emplace(0, c);
    return r;
}

PdoOp PdoOp::term(int q2, const InnerOp& c) {
    PdoOp r(c.truncation());
    if (q2 < r.trunc_->d2floor)
        throw DomainError("order " + std::to_string(q2) + " below d2floor");
    if (!c.is_zero()) r.coeffs_.emplace(q2, c);
    return r;
}

PdoOp PdoOp::from_coeffs(const TruncPtr& t, CoeffMap coeffs, int exact_floor2) {
    PdoOp r(t);
    for (auto& [q, c] : coeffs) {
        if (q < t->d2floor) throw DomainError("coefficient below d2floor");
        require_same_truncation(t, c.truncation());
        if (!c.is_zero()) r.coeffs_.emplace(q, std::move(c));
    }
    if (exact_floor2 < t->d2floor) throw DomainError("exact_floor2 below d2floor");
    r.exact_floor2_ = exact_floor2;
    return r;
}

PdoOp PdoOp::with_floor2(int f) const {
    PdoOp r = *this;
    r.exact_floor2_ = std::max(f, trunc_->d2floor);
    return r;
}

bool PdoOp::is_zero_above_floors() const {
    for (const auto& [q, c] : coeffs_)
        if (q >= exact_floor2_ && !c.is_zero_above_floors()) return false;
    return true;
}

bool PdoOp::is_one_above_floors() const {
    return (*this - PdoOp::one(trunc_)).is_zero_above_floors();
}

int PdoOp::ord2() const {
    if (coeffs_.empty()) throw DomainError("ord2 of zero operator");
    return coeffs_.rbegin()->first;
}

const InnerOp& PdoOp::leading2() const {
    if (coeffs_.empty()) throw DomainError("leading coefficient of zero operator");
    return coeffs_.rbegin()->second;
}

InnerOp PdoOp::coeff(int q2) const {
    auto it = coeffs_.find(q2);
    if (it != coeffs_.end()) return it->second;
    return InnerOp::zero(trunc_);
}

bool PdoOp::is_monic() const { return !coeffs_.empty() && leading2().is_monic1(); }

void PdoOp::insert(int q, const InnerOp& c) {
    if (q < trunc_->d2floor || c.is_zero()) return;
    auto it = coeffs_.find(q);
    if (it == coeffs_.end()) {
        coeffs_.emplace(q, c);
    } else {
        InnerOp s = it->second + c;
        if (s.is_zero())
            coeffs_.erase(it);
        else
            it->second = std::move(s);
    }
}

PdoOp PdoOp::operator-() const {
    PdoOp r(trunc_);
    for (const auto& [q, c] : coeffs_) r.coeffs_.emplace(q, -c);
    r.exact_floor2_ = exact_floor2_;
    return r;
}

PdoOp PdoOp::operator+(const PdoOp& o) const {
    require_same_truncation(trunc_, o.trunc_);
    PdoOp r = *this;
    for (const auto& [q, c] : o.coeffs_) r.insert(q, c);
    r.exact_floor2_ = std::max(exact_floor2_, o.exact_floor2_);
    return r;
}

PdoOp PdoOp::operator-(const PdoOp& o) const { return *this + (-o); }

PdoOp PdoOp::operator*(const PdoOp& o) const {
    require_same_truncation(trunc_, o.trunc_);
    PdoOp r(trunc_);
    const int floor = trunc_->d2floor;
    for (const auto& [i, a] : coeffs_) {
        for (const auto& [j, b] : o.coeffs_) {
            InnerOp db = b;
            for (int k = 0; i + j - k >= floor; ++k) {
                if (k > 0) {
                    db = db.d2_coeffwise();
                    if (db.is_zero()) break;
                }
                r.insert(i + j - k, (a * db).scale(binomial_general(i, k)));
            }
        }
    }
    if (is_zero() && exact_floor2_ == trunc_->d2floor) return r;
    if (o.is_zero() && o.exact_floor2_ == trunc_->d2floor) return r;
    r.exact_floor2_ = std::max(
        {trunc_->d2floor, exact_floor2_ + ord_bound2(o), o.exact_floor2_ + ord_bound2(*this)});
    return r;
}

PdoOp PdoOp::scale(const Rational& c) const {
    PdoOp r(trunc_);
    if (c == 0) return r.with_floor2(exact_floor2_);
    for (const auto& [q, s] : coeffs_) r.coeffs_.emplace(q, s.scale(c));
    r.exact_floor2_ = exact_floor2_;
    return r;
}

PdoOp PdoOp::scale_inner_left(const InnerOp& c) const {
    require_same_truncation(trunc_, c.truncation());
    // c sits at d2-order 0, so no outer Leibniz corrections arise
    PdoOp r(trunc_);
    for (const auto& [q, s] : coeffs_) r.insert(q, c * s);
    r.exact_floor2_ = exact_floor2_;
    return r;
}

PdoOp PdoOp::commutator(const PdoOp& o) const { return *this * o - o * *this; }

std::vector<OrderResidual> PdoOp::commute_criterion(const PdoOp& L, const PdoOp& M) {
    require_same_truncation(L.truncation(), M.truncation());
    const TruncPtr& t = L.truncation();
    // [M,L] = sum C_i^j (v_i d2^(j)(u_k) - u_i d2^(j)(v_k)) d2^(i-j+k)
    //       + sum [v_l, u_n] d2^(l+n),   accumulated per output order
    std::map<int, InnerOp> acc;
    const int floor = t->d2floor;
    auto add = [&](int order, const InnerOp& v) {
        if (order < floor || v.is_zero()) return;
        auto it = acc.find(order);
        if (it == acc.end())
            acc.emplace(order, v);
        else
            it->second = it->second + v;
    };
    for (const auto& [i, vi] : M.coeffs()) {
        for (const auto& [k, uk] : L.coeffs()) {
            InnerOp du = uk;
            for (int j = 1; i - j + k >= floor; ++j) {
                du = du.d2_coeffwise();
                if (du.is_zero()) break;
                add(i - j + k, (vi * du).scale(binomial_general(i, j)));
            }
        }
    }
    for (const auto& [i, ui] : L.coeffs()) {
        for (const auto& [k, vk] : M.coeffs()) {
            InnerOp dv = vk;
            for (int j = 1; i - j + k >= floor; ++j) {
                dv = dv.d2_coeffwise();
                if (dv.is_zero()) break;
                add(i - j + k, -(ui * dv).scale(binomial_general(i, j)));
            }
        }
    }
    for (const auto& [l, vl] : M.coeffs())
        for (const auto& [n, un] : L.coeffs()) add(l + n, vl.commutator(un));
    std::vector<OrderResidual> out;
    for (auto it = acc.rbegin(); it != acc.rend(); ++it)
        out.push_back({it->first, it->second});
    return out;
}

std::pair<PdoOp, PdoOp> PdoOp::split() const {
    PdoOp plus(trunc_), minus(trunc_);
    for (const auto& [q, c] : coeffs_)
        (q >= 0 ? plus : minus).coeffs_.emplace(q, c);
    plus.exact_floor2_ = exact_floor2_ > 0 ? exact_floor2_ : trunc_->d2floor;
    minus.exact_floor2_ = exact_floor2_;
    return {plus, minus};
}

PdoOp PdoOp::d2_coeffwise() const {
    PdoOp r(trunc_);
    for (const auto& [q, c] : coeffs_) r.insert(q, c.d2_coeffwise());
    r.exact_floor2_ = exact_floor2_;
    return r;
}

PdoOp PdoOp::dt(const TimeIndex& k) const {
    PdoOp r(trunc_);
    for (const auto& [q, c] : coeffs_) r.insert(q, c.dt(k));
    r.exact_floor2_ = exact_floor2_;
    return r;
}

PdoOp PdoOp::eval_t0() const {
    PdoOp r(trunc_);
    for (const auto& [q, c] : coeffs_) r.insert(q, c.eval_t0());
    r.exact_floor2_ = exact_floor2_;
    return r;
}

PdoOp PdoOp::truncate_tdeg(int cap) const {
    PdoOp r(trunc_);
    for (const auto& [q, c] : coeffs_) r.insert(q, c.truncate_tdeg(cap));
    r.exact_floor2_ = exact_floor2_;
    return r;
}

PdoOp PdoOp::inverse() const {
    if (is_zero()) throw DomainError("inverse of zero operator");
    const int n = ord2();
    if (-n < trunc_->d2floor)
        throw DomainError("inverse falls entirely below the d2 window");
    const InnerOp& lead = leading2();
    if (lead.is_zero() || lead.leading().constant_part() == 0) {
        // leading coefficient nilpotent in t: invert through the t-grading,
        // P^-1 = (sum (-Z)^n) P0^-1 with P0 = P|_{t=0} and Z = P0^-1 P - 1
        PdoOp p0 = eval_t0();
        if (p0.is_zero() || p0.leading2().is_zero() ||
            p0.leading2().leading().constant_part() == 0)
            throw DomainError("non-invertible leading structure");
        PdoOp p0inv = p0.inverse();
        PdoOp z = p0inv * *this - PdoOp::one(trunc_);
        PdoOp acc = PdoOp::one(trunc_);
        PdoOp pw = PdoOp::one(trunc_);
        for (int s = 1; s <= trunc_->tdeg; ++s) {
            pw = pw * (-z);
            if (pw.is_zero()) break;
            acc = acc + pw;
        }
        return acc * p0inv;
    }
    const InnerOp lead_inv = lead.inverse();
    const int floor = trunc_->d2floor;
    PdoOp b(trunc_);
    for (int q = 0; q - n >= floor; --q) {
        InnerOp acc = InnerOp::zero(trunc_);
        for (const auto& [i, a] : coeffs_) {
            for (const auto& [j, bc] : b.coeffs_) {
                const int k = i + j - q;
                if (k < 0) continue;
                InnerOp db = bc;
                for (int s = 0; s < k; ++s) db = db.d2_coeffwise();
                if (db.is_zero()) continue;
                acc = acc + (a * db).scale(binomial_general(i, k));
            }
        }
        InnerOp target = (q == 0) ? InnerOp::one(trunc_) : InnerOp::zero(trunc_);
        b.insert(q - n, lead_inv * (target - acc));
    }
    b.exact_floor2_ = std::max(floor, exact_floor2_ - 2 * n);
    return b;
}

PdoOp PdoOp::pow(long long k) const {
    if (k == 0) return PdoOp::one(trunc_);
    const PdoOp base = (k > 0) ? *this : inverse();
    long long e = k > 0 ? k : -k;
    PdoOp acc = PdoOp::one(trunc_);
    PdoOp sq = base;
    while (e > 0) {
        if (e & 1) acc = acc * sq;
        e >>= 1;
        if (e) sq = sq * sq;
    }
    return acc;
}

PdoOp PdoOp::kth_root(long long k) const {
    if (k <= 0) throw DomainError("root index must be positive");
    if (is_zero()) throw DomainError("k-th root of zero operator");
    if (!is_monic()) throw DomainError("k-th root needs a monic operator");
    if (ord2() % k != 0) throw DomainError("ord2 not divisible by root index");
    const InnerOp& lead = leading2();
    const long long n1 = lead.ord1();
    if (n1 % k != 0)
        throw DomainError("ord1 of the leading coefficient not divisible by root index");
    const int m = static_cast<int>(ord2() / k);
    const InnerOp rlead = lead.kth_root(k);
    const InnerOp rlead_km1 = rlead.pow(static_cast<long long>(k) - 1);
    const int m1 = static_cast<int>(rlead.ord1());
    // a correction at inner order below d1floor cannot be represented, so
    // error content whose solve would land there is not fixable
    const int fixable_floor = trunc_->d1floor + (k - 1) * std::max(m1, 0);

    PdoOp r = PdoOp::term(m, rlead);
    const int guard =
        (ord2() - k * trunc_->d2floor + 2) * (trunc_->xdeg + trunc_->tdeg - trunc_->d1floor + 4);
    for (int pass = 0; pass < guard; ++pass) {
        PdoOp err = *this - r.pow(k);
        bool live = false;
        int o = 0;
        InnerOp fixable = InnerOp::zero(trunc_);
        for (auto it = err.coeffs_.rbegin(); it != err.coeffs_.rend(); ++it) {
            if (it->first - m * static_cast<int>(k - 1) < trunc_->d2floor) break;
            InnerOp masked(trunc_);
            for (const auto& [q1, c] : it->second.coeffs())
                if (q1 >= fixable_floor) masked = masked + InnerOp::term(q1, c);
            if (!masked.is_zero()) {
                live = true;
                o = it->first;
                // stored content drives the solve; certainty is inherited
                // from the error coefficient
                fixable = masked.with_floor(it->second.exact_floor());
                break;
            }
        }
        if (!live) return r.with_floor2(exact_floor2_ - m * static_cast<int>(k - 1));
        // top equation: sum_i c^i * delta * c^(k-1-i) = e with c the leading
        // inner coefficient; first-order solve by division, then re-iterate
        const InnerOp delta = fixable.right_divide(rlead_km1).scale(Rational(1, k));
        r.insert(o - m * static_cast<int>(k - 1), delta);
    }
    throw DomainError("k-th root iteration failed to converge at truncation");
}

PdoOp PdoOp::conjugate(const PdoOp& S, const PdoOp& a) {
    return S * a * S.inverse();
}

bool PdoOp::eq_above_floors(const PdoOp& o) const {
    require_same_truncation(trunc_, o.trunc_);
    const int floor = std::max(exact_floor2_, o.exact_floor2_);
    PdoOp d = *this - o;
    for (const auto& [q, c] : d.coeffs_)
        if (q >= floor && !c.is_zero_above_floors()) return false;
    return true;
}

PdoOp PdoOp::degrade_below_level(int level, int inner_floor) const {
    PdoOp r = *this;
    for (auto& [q, c] : r.coeffs_)
        if (q <= level && c.exact_floor() < inner_floor) c = c.with_floor(inner_floor);
    return r;
}

PdoOp PdoOp::retruncate(const TruncPtr& to) const {
    if (to->active_times != trunc_->active_times)
        throw DomainError("retruncation cannot change the active time set");
    PdoOp r(to);
    for (const auto& [q2, c] : coeffs_) {
        if (q2 < to->d2floor) continue;
        InnerOp ic(to);
        for (const auto& [q1, s] : c.coeffs()) {
            if (q1 < to->d1floor) continue;
            ScalarSeries::TermMap tm;
            for (const auto& [m, v] : s.terms())
                if (m.xdeg() <= to->xdeg && m.tdeg() <= to->tdeg) tm.emplace(m, v);
            ScalarSeries moved = ScalarSeries::from_terms(to, std::move(tm));
            if (!moved.is_zero()) ic = ic + InnerOp::term(q1, moved);
        }
        ic = ic.with_floor(std::max(to->d1floor, c.exact_floor()));
        if (!ic.is_zero()) r.insert(q2, ic);
    }
    r.exact_floor2_ = std::max(to->d2floor, exact_floor2_);
    return r;
}

PdoOp PdoOp::with_window_floors() const {
    PdoOp r = *this;
    for (auto& [q, c] : r.coeffs_) c = c.with_floor(trunc_->d1floor);
    r.exact_floor2_ = trunc_->d2floor;
    return r;
}

bool PdoOp::is_in_one_plus_eminus() const {
    for (const auto& [q, c] : coeffs_) {
        if (q > 0) return false;
        if (q == 0 && !c.is_one()) return false;
    }
    return coeffs_.count(0) == 1;
}

std::string PdoOp::str() const {
    if (coeffs_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
        if (!first) os << "\n + ";
        first = false;
        os << "[" << it->second.str() << "]";
        if (it->first != 0) os << "*D2^" << it->first;
    }
    os << "   [fl2 " << exact_floor2_ << "]";
    return os.str();
}

}  // namespace kp2
