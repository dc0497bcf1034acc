#include "kp2/scalar_series.hpp"

#include <sstream>

namespace kp2 {

ScalarSeries::ScalarSeries(TruncPtr trunc, const Rational& c) : trunc_(std::move(trunc)) {
    if (c != 0) {
        Monomial m;
        m.tdegs.assign(trunc_->active_times.size(), 0);
        terms_.emplace(std::move(m), c);
    }
}

void ScalarSeries::insert_term(const Monomial& m, const Rational& c) {
    if (c == 0) return;
    if (m.xdeg() > trunc_->xdeg || m.tdeg() > trunc_->tdeg) return;
    auto [it, fresh] = terms_.emplace(m, c);
    if (!fresh) {
        it->second += c;
        if (it->second == 0) terms_.erase(it);
    }
}

ScalarSeries ScalarSeries::monomial(const TruncPtr& t, int e1, int e2, const Rational& c) {
    if (e1 < 0 || e2 < 0) throw DomainError("negative x exponent");
    if (e1 + e2 > t->xdeg)
        throw DomainError("monomial exceeds xdeg cap (" + std::to_string(e1 + e2) + " > " +
                          std::to_string(t->xdeg) + ")");
    ScalarSeries r(t);
    Monomial m;
    m.e1 = e1;
    m.e2 = e2;
    m.tdegs.assign(t->active_times.size(), 0);
    if (c != 0) r.terms_.emplace(std::move(m), c);
    return r;
}

ScalarSeries ScalarSeries::time_var(const TruncPtr& t, const TimeIndex& k) {
    auto slot = t->time_slot(k);
    if (!slot) throw DomainError("inactive time index " + k.str());
    if (t->tdeg < 1) throw DomainError("tdeg cap too small to hold a time variable");
    ScalarSeries r(t);
    Monomial m;
    m.tdegs.assign(t->active_times.size(), 0);
    m.tdegs[*slot] = 1;
    r.terms_.emplace(std::move(m), 1);
    return r;
}

ScalarSeries ScalarSeries::from_terms(const TruncPtr& t, TermMap terms) {
    ScalarSeries r(t);
    const size_t nt = t->active_times.size();
    for (auto& [m, c] : terms) {
        if (m.e1 < 0 || m.e2 < 0) throw DomainError("negative x exponent");
        if (m.tdegs.size() != nt) throw DomainError("time multidegree has wrong length");
        for (int d : m.tdegs)
            if (d < 0) throw DomainError("negative time exponent");
        if (m.xdeg() > t->xdeg || m.tdeg() > t->tdeg)
            throw DomainError("term exceeds truncation caps");
        r.insert_term(m, c);
    }
    return r;
}

bool ScalarSeries::is_one() const {
    return terms_.size() == 1 && terms_.begin()->first.xdeg() == 0 &&
           terms_.begin()->first.tdeg() == 0 && terms_.begin()->second == 1;
}

bool ScalarSeries::is_constant() const {
    if (terms_.empty()) return true;
    return terms_.size() == 1 && terms_.begin()->first.xdeg() == 0 &&
           terms_.begin()->first.tdeg() == 0;
}

Rational ScalarSeries::constant_part() const {
    for (const auto& [m, c] : terms_)
        if (m.xdeg() == 0 && m.tdeg() == 0) return c;
    return 0;
}

bool ScalarSeries::is_ker_d1() const {
    for (const auto& [m, c] : terms_)
        if (m.e1 != 0) return false;
    return true;
}

bool ScalarSeries::has_time_content() const {
    for (const auto& [m, c] : terms_)
        if (m.tdeg() != 0) return true;
    return false;
}

int ScalarSeries::max_x1_degree() const {
    int d = -1;
    for (const auto& [m, c] : terms_) d = std::max(d, m.e1);
    return d;
}

int ScalarSeries::max_x2_degree() const {
    int d = -1;
    for (const auto& [m, c] : terms_) d = std::max(d, m.e2);
    return d;
}

int ScalarSeries::max_total_xdeg() const {
    int d = -1;
    for (const auto& [m, c] : terms_) d = std::max(d, m.xdeg());
    return d;
}

int ScalarSeries::max_total_tdeg() const {
    int d = -1;
    for (const auto& [m, c] : terms_) d = std::max(d, m.tdeg());
    return d;
}

std::optional<long long> ScalarSeries::v2_weight() const {
    if (terms_.empty()) return std::nullopt;
    std::optional<long long> w;
    for (const auto& [m, c] : terms_) {
        long long s = 0;
        for (size_t a = 0; a < m.tdegs.size(); ++a)
            s += static_cast<long long>(m.tdegs[a]) * trunc_->active_times[a].j;
        if (!w || s < *w) w = s;
    }
    return w;
}

ScalarSeries ScalarSeries::operator-() const {
    ScalarSeries r(trunc_);
    for (const auto& [m, c] : terms_) r.terms_.emplace(m, -c);
    return r;
}

ScalarSeries ScalarSeries::operator+(const ScalarSeries& o) const {
    require_same_truncation(trunc_, o.trunc_);
    ScalarSeries r = *this;
    for (const auto& [m, c] : o.terms_) {
        auto [it, fresh] = r.terms_.emplace(m, c);
        if (!fresh) {
            it->second += c;
            if (it->second == 0) r.terms_.erase(it);
        }
    }
    return r;
}

ScalarSeries ScalarSeries::operator-(const ScalarSeries& o) const { return *this + (-o); }

ScalarSeries ScalarSeries::operator*(const ScalarSeries& o) const {
    require_same_truncation(trunc_, o.trunc_);
    ScalarSeries r(trunc_);
    const int xcap = trunc_->xdeg;
    const int tcap = trunc_->tdeg;
    for (const auto& [ma, ca] : terms_) {
        for (const auto& [mb, cb] : o.terms_) {
            Monomial m;
            m.e1 = ma.e1 + mb.e1;
            m.e2 = ma.e2 + mb.e2;
            if (m.e1 + m.e2 > xcap) continue;
            m.tdegs.resize(ma.tdegs.size());
            int td = 0;
            for (size_t a = 0; a < m.tdegs.size(); ++a) {
                m.tdegs[a] = ma.tdegs[a] + mb.tdegs[a];
                td += m.tdegs[a];
            }
            if (td > tcap) continue;
            auto [it, fresh] = r.terms_.emplace(std::move(m), ca * cb);
            if (!fresh) {
                it->second += ca * cb;
                if (it->second == 0) r.terms_.erase(it);
            }
        }
    }
    return r;
}

ScalarSeries ScalarSeries::scale(const Rational& c) const {
    ScalarSeries r(trunc_);
    if (c == 0) return r;
    for (const auto& [m, v] : terms_) r.terms_.emplace(m, v * c);
    return r;
}

ScalarSeries ScalarSeries::d1() const {
    ScalarSeries r(trunc_);
    for (const auto& [m, c] : terms_) {
        if (m.e1 == 0) continue;
        Monomial n = m;
        n.e1 -= 1;
        r.terms_.emplace(std::move(n), c * m.e1);
    }
    return r;
}

ScalarSeries ScalarSeries::d2() const {
    ScalarSeries r(trunc_);
    for (const auto& [m, c] : terms_) {
        if (m.e2 == 0) continue;
        Monomial n = m;
        n.e2 -= 1;
        r.terms_.emplace(std::move(n), c * m.e2);
    }
    return r;
}

ScalarSeries ScalarSeries::antid1(bool* clipped) const {
    ScalarSeries r(trunc_);
    for (const auto& [m, c] : terms_) {
        if (m.xdeg() + 1 > trunc_->xdeg) {
            if (clipped) *clipped = true;
            continue;
        }
        Monomial n = m;
        n.e1 += 1;
        r.terms_.emplace(std::move(n), c / Rational(n.e1));
    }
    return r;
}

ScalarSeries ScalarSeries::antid2(bool* clipped) const {
    ScalarSeries r(trunc_);
    for (const auto& [m, c] : terms_) {
        if (m.xdeg() + 1 > trunc_->xdeg) {
            if (clipped) *clipped = true;
            continue;
        }
        Monomial n = m;
        n.e2 += 1;
        r.terms_.emplace(std::move(n), c / Rational(n.e2));
    }
    return r;
}

ScalarSeries ScalarSeries::dt(const TimeIndex& k) const {
    auto slot = trunc_->time_slot(k);
    if (!slot) throw DomainError("inactive time index " + k.str());
    ScalarSeries r(trunc_);
    for (const auto& [m, c] : terms_) {
        const int d = m.tdegs[*slot];
        if (d == 0) continue;
        Monomial n = m;
        n.tdegs[*slot] -= 1;
        r.terms_.emplace(std::move(n), c * d);
    }
    return r;
}

ScalarSeries ScalarSeries::eval_t0() const {
    ScalarSeries r(trunc_);
    for (const auto& [m, c] : terms_) {
        if (m.tdeg() != 0) continue;
        r.terms_.emplace(m, c);
    }
    return r;
}

ScalarSeries ScalarSeries::truncate_tdeg(int cap) const {
    ScalarSeries r(trunc_);
    for (const auto& [m, c] : terms_)
        if (m.tdeg() <= cap) r.terms_.emplace(m, c);
    return r;
}

ScalarSeries ScalarSeries::inverse() const {
    const Rational c0 = constant_part();
    if (c0 == 0) throw DomainError("scalar series is not a unit (zero constant part)");
    // 1/s = (1/c0) sum_n (1 - s/c0)^n; the bracket is nilpotent at truncation.
    const ScalarSeries n = ScalarSeries::one(trunc_) - scale(Rational(1) / c0);
    ScalarSeries acc = ScalarSeries::one(trunc_);
    ScalarSeries pow = ScalarSeries::one(trunc_);
    const int bound = trunc_->xdeg + trunc_->tdeg + 1;
    for (int s = 1; s <= bound; ++s) {
        pow = pow * n;
        if (pow.is_zero()) break;
        acc = acc + pow;
    }
    return acc.scale(Rational(1) / c0);
}

std::string ScalarSeries::str() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, c] : terms_) {
        if (!first) os << " + ";
        first = false;
        os << c.str();
        if (m.e1) os << "*x1^" << m.e1;
        if (m.e2) os << "*x2^" << m.e2;
        for (size_t a = 0; a < m.tdegs.size(); ++a)
            if (m.tdegs[a])
                os << "*t" << trunc_->active_times[a].str() << "^" << m.tdegs[a];
    }
    return os.str();
}

}  // namespace kp2
