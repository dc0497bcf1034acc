#include "doctest.h"
#include "support.hpp"

using namespace kp2;
using kp2::testing::Rng;
using kp2::testing::small_trunc;

namespace {
ScalarSeries x1(const TruncPtr& t) { return ScalarSeries::monomial(t, 1, 0, 1); }
ScalarSeries x2(const TruncPtr& t) { return ScalarSeries::monomial(t, 0, 1, 1); }

// Independent Neumann oracle: for monic a of ord1 n, a^-1 =
// d1^-n * sum_k (1 - a d1^-n)^k   (the bracket is strictly lower order).
InnerOp neumann_inverse(const InnerOp& a) {
    const auto& t = a.truncation();
    const int n = a.ord1();
    InnerOp shifted = a * InnerOp::d1_symbol(t, -n);
    InnerOp bracket = InnerOp::one(t) - shifted;
    InnerOp acc = InnerOp::one(t);
    InnerOp pw = InnerOp::one(t);
    for (int k = 1; k <= -t->d1floor + 1; ++k) {
        pw = pw * bracket;
        if (pw.is_zero()) break;
        acc = acc + pw;
    }
    return InnerOp::d1_symbol(t, -n) * acc;
}
}  // namespace

TEST_CASE("Leibniz base cases") {
    auto t = small_trunc();
    auto D = InnerOp::d1_symbol(t);
    auto X = InnerOp::from_scalar(x1(t));
    // d1 * x1 = x1 d1 + 1
    CHECK(D * X == X * D + InnerOp::one(t));
    // d1^-1 * u = u d1^-1 - u' d1^-2 + u'' d1^-3 - ...
    auto u = x1(t) * x1(t) * x2(t);
    auto lhs = InnerOp::d1_symbol(t, -1) * InnerOp::from_scalar(u);
    InnerOp rhs = InnerOp::zero(t);
    ScalarSeries d = u;
    Rational sign = 1;
    for (int k = 0; -1 - k >= t->d1floor; ++k) {
        rhs = rhs + InnerOp::term(-1 - k, d.scale(sign));
        d = d.d1();
        sign = -sign;
    }
    CHECK(lhs.eq_above_floors(rhs));
}

TEST_CASE("alternating expansion for 20 random u") {
    auto t = small_trunc(4, -5, -2, 1, {{0, 1}});
    Rng rng(101);
    for (int i = 0; i < 20; ++i) {
        auto u = rng.scalar(t, 3, 1);
        auto lhs = InnerOp::d1_symbol(t, -1) * InnerOp::from_scalar(u);
        InnerOp rhs = InnerOp::zero(t);
        ScalarSeries d = u;
        Rational sign = 1;
        for (int k = 0; k < 4; ++k) {
            rhs = rhs + InnerOp::term(-1 - k, d.scale(sign));
            d = d.d1();
            sign = -sign;
        }
        // compare to depth 4
        for (int q = -1; q >= -4; --q) CHECK(lhs.coeff(q) == rhs.coeff(q));
    }
}

TEST_CASE("constant-coefficient product is the Laurent product") {
    auto t = small_trunc();
    Rng rng(33);
    for (int i = 0; i < 20; ++i) {
        InnerOp a = InnerOp::zero(t), b = InnerOp::zero(t);
        std::map<int, Rational> ca, cb;
        for (int q = -2; q <= 2; ++q) {
            ca[q] = rng.rational();
            cb[q] = rng.rational();
            a = a + InnerOp::term(q, ScalarSeries::constant(t, ca[q]));
            b = b + InnerOp::term(q, ScalarSeries::constant(t, cb[q]));
        }
        InnerOp prod = a * b;
        for (int q = 2 * -2; q <= 4; ++q) {
            Rational expect = 0;
            for (int i1 = -2; i1 <= 2; ++i1) {
                int j = q - i1;
                if (j < -2 || j > 2) continue;
                expect += ca[i1] * cb[j];
            }
            if (q >= t->d1floor) CHECK(prod.coeff(q).constant_part() == expect);
        }
    }
}

TEST_CASE("order-0 left factor acts coefficientwise") {
    auto t = small_trunc();
    Rng rng(41);
    for (int i = 0; i < 20; ++i) {
        auto s = rng.scalar(t, 2, 0);
        auto a = InnerOp::from_scalar(s);
        auto b = rng.inner(t, -2, 2, 2);
        auto prod = a * b;
        for (const auto& [q, c] : b.coeffs()) CHECK(prod.coeff(q) == s * c);
    }
}

TEST_CASE("ord1 and monic") {
    auto t = small_trunc();
    auto a = InnerOp::d1_symbol(t) + InnerOp::from_scalar(x1(t));
    CHECK(a.ord1() == 1);
    CHECK(a.is_monic1());
    CHECK(!InnerOp::term(1, x1(t)).is_monic1());
    CHECK_THROWS_AS(InnerOp::zero(t).ord1(), DomainError);
}

TEST_CASE("ring laws for inner operators") {
    auto t = small_trunc(6, -3, -2, 2, {{0, 1}});
    Rng rng(55);
    for (int i = 0; i < 60; ++i) {
        auto a = rng.inner(t, -2, 2, 2, 1);
        auto b = rng.inner(t, -2, 2, 2, 1);
        auto c = rng.inner(t, -2, 2, 2, 1);
        CHECK(((a * b) * c).eq_above_floors(a * (b * c)));
        CHECK((a * (b + c)).eq_above_floors(a * b + a * c));
        // antisymmetry and Jacobi
        CHECK(a.commutator(b).eq_above_floors(-(b.commutator(a))));
        auto jac = a.commutator(b.commutator(c)) + b.commutator(c.commutator(a)) +
                   c.commutator(a.commutator(b));
        CHECK(jac.is_zero_above_floors());
    }
}

TEST_CASE("ord1 of products with unit leading coefficients") {
    auto t = small_trunc();
    Rng rng(77);
    for (int i = 0; i < 20; ++i) {
        auto a = rng.monic_inner(t, static_cast<int>(rng.integer(-1, 2)), -2, 2);
        auto b = rng.monic_inner(t, static_cast<int>(rng.integer(-1, 2)), -2, 2);
        CHECK((a * b).ord1() == a.ord1() + b.ord1());
    }
}

TEST_CASE("inverse") {
    auto t = small_trunc();
    CHECK(InnerOp::d1_symbol(t).inverse().eq_above_floors(InnerOp::d1_symbol(t, -1)));
    // inverse(1 + x1 d1^-1) starts 1 - x1 d1^-1 + (x1^2 ...) d1^-2
    auto a = InnerOp::one(t) + InnerOp::term(-1, x1(t));
    auto inv = a.inverse();
    CHECK(inv.coeff(0).is_one());
    CHECK(inv.coeff(-1) == -x1(t));
    CHECK((a * inv).eq_above_floors(InnerOp::one(t)));
    CHECK((inv * a).eq_above_floors(InnerOp::one(t)));

    Rng rng(13);
    for (int i = 0; i < 20; ++i) {
        auto m = rng.monic_inner(t, static_cast<int>(rng.integer(0, 2)), -2, 1);
        auto mi = m.inverse();
        CHECK((m * mi).eq_above_floors(InnerOp::one(t)));
        CHECK((mi * m).eq_above_floors(InnerOp::one(t)));
        // independent Neumann-series oracle
        CHECK(mi.eq_above_floors(neumann_inverse(m)));
        // round trip
        CHECK(mi.inverse().eq_above_floors(m));
    }
    CHECK_THROWS_AS(InnerOp::term(1, x1(t)).inverse(), DomainError);
}

TEST_CASE("split") {
    auto t = small_trunc();
    auto a = InnerOp::d1_symbol(t) + InnerOp::d1_symbol(t, -1);
    auto [p, m] = a.split();
    CHECK(p == InnerOp::d1_symbol(t));
    CHECK(m == InnerOp::d1_symbol(t, -1));
    auto five = InnerOp::from_scalar(ScalarSeries::constant(t, 5));
    auto [p5, m5] = five.split();
    CHECK(p5 == five);
    CHECK(m5.is_zero());
    auto neg = InnerOp::term(-2, x2(t));
    auto [pn, mn] = neg.split();
    CHECK(pn.is_zero());
    CHECK(mn == neg);
    CHECK((p + m) == a);
}

TEST_CASE("as_series_in") {
    auto t = small_trunc();
    auto u0 = InnerOp::d1_symbol(t) + InnerOp::from_scalar(x2(t));
    // a = u0^2 + 3
    auto a = u0 * u0 + InnerOp::from_scalar(ScalarSeries::constant(t, 3));
    auto e = a.as_series_in(u0);
    REQUIRE(e.terms.size() == 2);
    CHECK(e.terms[0].first == 2);
    CHECK(e.terms[0].second.is_one());
    CHECK(e.terms[1].first == 0);
    CHECK(e.terms[1].second == ScalarSeries::constant(t, 3));

    auto d = InnerOp::d1_symbol(t);
    auto ed = d.as_series_in(d);
    REQUIRE(ed.terms.size() == 1);
    CHECK(ed.terms[0].first == 1);

    // construct-then-decompose with ker(d1) coefficients
    Rng rng(19);
    for (int i = 0; i < 15; ++i) {
        InnerOp acc = InnerOp::zero(t);
        std::map<int, Rational> ks;
        for (int q = -2; q <= 2; ++q)
            if (rng.integer(0, 1)) {
                ks[q] = rng.nonzero_rational();
                acc = acc + u0.pow(q).scale(ks[q]);
            }
        if (acc.is_zero()) continue;
        auto exp = acc.as_series_in(u0);
        for (const auto& [q, c] : exp.terms) {
            if (q < t->d1floor + 2) continue;  // below certified window
            REQUIRE(ks.count(q));
            CHECK(c == ScalarSeries::constant(t, ks[q]));
        }
    }

    // x1-content in a leading coefficient is a non-commuting witness
    auto bad = InnerOp::term(1, x1(t));
    CHECK_THROWS_AS(bad.as_series_in(u0), DomainError);
    auto rep = bad.as_series_in(u0, /*strict=*/false);
    CHECK(!rep.exact);
    CHECK(rep.offending_order == 1);
}

TEST_CASE("exact floor propagation") {
    auto t = small_trunc();
    auto a = InnerOp::d1_symbol(t).with_floor(-1);
    auto b = InnerOp::d1_symbol(t, 2);
    CHECK((a * b).exact_floor() == 1);   // fl(a)+ord(b) = -1+2
    CHECK((a + b).exact_floor() == -1);
    CHECK(InnerOp::d1_symbol(t).inverse().exact_floor() == t->d1floor);
}
