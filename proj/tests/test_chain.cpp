#include "adw/chain.hpp"
#include "adw/errors.hpp"
#include <doctest.h>
#include <cmath>

using namespace adw;

namespace {
struct Ctx {
    ModelParams p = ModelParams::defaults(1e-2);
    SectionSpec spec = SectionSpec::make(p.freq);
    HeteroclinicCurve curve{p};
};
} // namespace

TEST_CASE("equally spaced chain")
{
    Ctx c;
    double dh = 0.75 * c.curve.delta_bar();
    TransitionChain ch = build_esc(Vec2::Zero(), dh, std::vector<int>(9, 1), c.curve, c.p);
    CHECK(ch.size() == 10);
    CHECK(ch.nodes.back().y - ch.nodes.front().y == doctest::Approx(9 * dh));
    for (const ChainNode& n : ch.nodes) {
        CHECK(c.p.freq.omega.dot(n.action) == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(n.interval_halfwidth == doctest::Approx(c.curve.delta_bar() / 16));
    }
    TransitionChain flat = build_esc(Vec2::Zero(), dh, {0, 0, 0}, c.curve, c.p);
    for (const ChainNode& n : flat.nodes) CHECK(n.y == 0.0);
    TransitionChain back = build_esc(Vec2::Zero(), dh, {1, -1, 0}, c.curve, c.p);
    CHECK(back.nodes[3].y == doctest::Approx(0.0));
}

TEST_CASE("chain feasibility")
{
    Ctx c;
    CHECK_THROWS_AS(build_esc(Vec2::Zero(), 0.9 * c.curve.delta_bar(), {1, 1}, c.curve, c.p), ChainError);
    CHECK_THROWS_AS(build_esc(Vec2::Zero(), 0.1, {2}, c.curve, c.p), UsageError);
}

TEST_CASE("elastic adjustment")
{
    Ctx c;
    double dh = 0.75 * c.curve.delta_bar();
    TransitionChain ch = build_esc(Vec2::Zero(), dh, {1, 1, 1}, c.curve, c.p);
    auto thp = [&](double y) { return theta_functions(y, 1, ch, 1, 1, c.curve, c.spec).theta_prime; };
    double y1 = ch.nodes[1].y;

    TransitionChain same = ch;
    ElasticResult r0 = elastic_adjust(1, thp(y1), same, thp);
    CHECK(std::abs(r0.y_tilde - y1) < 1e-12);

    double target = thp(y1 + 0.5 * ch.nodes[1].e_k);
    ElasticResult r = elastic_adjust(1, target, ch, thp);
    CHECK(r.y_tilde == doctest::Approx(y1 + 0.5 * ch.nodes[1].e_k).epsilon(1e-9));
    CHECK(ch.kind == ChainKind::EEC);
    CHECK(ch.nodes[1].y == r.y_tilde);
    CHECK(r.residual < 1e-12);

    TransitionChain other = build_esc(Vec2::Zero(), dh, {1, 1, 1}, c.curve, c.p);
    double far = thp(y1) + 1.0;
    CHECK_THROWS(elastic_adjust(1, far, other, thp));
}

TEST_CASE("theta functions outside the interval")
{
    Ctx c;
    TransitionChain ch = build_esc(Vec2::Zero(), 0.5 * c.curve.delta_bar(), {1, 1}, c.curve, c.p);
    CHECK_THROWS(theta_functions(ch.nodes[1].y + 2 * ch.nodes[1].interval_halfwidth, 1, ch, 1, 1, c.curve, c.spec));
    ThetaPair t = theta_functions(ch.nodes[1].y, 1, ch, 1, 1, c.curve, c.spec);
    CHECK(std::abs(wrap_centered(t.theta_prime - t.theta - 2 * c.spec.nu)) < 1e-12);
}
