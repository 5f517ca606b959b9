#include "adw/diffusion.hpp"
#include "adw/errors.hpp"
#include <doctest.h>
#include <cmath>

using namespace adw;

namespace {

PipelineConfig small_config(int N = 4)
{
    PipelineConfig c;
    c.params = ModelParams::defaults(1e-2);
    c.N = N;
    return c;
}

const DiffusionReport& four_node_run()
{
    static const DiffusionReport r = run_pipeline(small_config());
    return r;
}

} // namespace

TEST_CASE("four-node pipeline passes every certificate")
{
    const DiffusionReport& r = four_node_run();
    REQUIRE(r.links.size() == 3u);
    CHECK(r.all_passed);
    double returns = 0;
    for (const LinkReport& L : r.links) {
        CHECK(L.cert.passed);
        CHECK(L.cert.chi_a < 1);
        CHECK(L.n >= r.n_beta);
        CHECK(L.n <= 10 * r.n_beta);
        CHECK(L.delta2_residual < 1e-10);
        CHECK(std::abs(L.Delta4) < 1e-12);
        returns += L.n + L.record.l_minus + L.record.l_plus;
    }
    CHECK(r.total_returns == returns);
    CHECK(r.total_time == doctest::Approx(returns * r.t_star));
    CHECK(r.drift == doctest::Approx(3 * r.chain.delta_hat).epsilon(0.1));
    CHECK(r.n_without_elasticity == doctest::Approx(std::pow(1e-2, -9)));
}

TEST_CASE("remainder budget")
{
    const DiffusionReport& r = four_node_run();
    double half = 0.5 * r.torsion.K_margin * 1e-4;
    CHECK(r.chi1 < half);
    CHECK(r.chi2 < half);
    for (const LinkReport& L : r.links) CHECK(L.C2 > 0);
}

TEST_CASE("centres nullify the first and fourth offsets")
{
    const DiffusionReport& r = four_node_run();
    for (const LinkReport& L : r.links) {
        const MatR4 A = to_mp(L.tj.A_proj);
        int k = L.k;
        VecR4 xi0(r.centers.sigma[k], Real(0), r.centers.delta[k], Real(0));
        CHECK(std::abs(static_cast<double>((A * xi0)[3])) < 1e-12);
        CHECK(std::abs(L.Delta1) < 1e-12 * std::max(1.0, std::abs(r.links[k].record.X_k_prime.Q)));
    }
    CHECK(r.centers.sigma.back() == 0);
    CHECK(r.centers.delta.back() == 0);
}

TEST_CASE("shadowing witness")
{
    const DiffusionReport& r = four_node_run();
    ShadowResult s = shadow_verify(r);
    REQUIRE(s.cube_points.size() == 4u);
    for (const Vec4& x : s.cube_points) CHECK(x.cwiseAbs().maxCoeff() < 1);
    CHECK(std::abs(s.drift_y - 3 * r.chain.delta_hat) <= s.slack);
    CHECK(s.residual < 1e-12);

    DiffusionReport bad = r;
    bad.links[1].MinvDelta[0] += 5;
    CHECK_THROWS_AS(shadow_verify(bad), ShadowingError);
    CHECK_THROWS_AS(shadow_verify(r, 3), UsageError);
}

TEST_CASE("two-node chain")
{
    DiffusionReport r = run_pipeline(small_config(2));
    ShadowResult s = shadow_verify(r);
    CHECK(s.cube_points.size() == 2u);
    CHECK(std::abs(s.drift_y - r.chain.delta_hat) <= s.slack);
}

TEST_CASE("homoclinic chain")
{
    PipelineConfig c = small_config();
    c.pattern = {0, 0, 0};
    DiffusionReport r = run_pipeline(c);
    CHECK(r.all_passed);
    // only the elastic move of the first node remains
    CHECK(r.drift <= r.chain.nodes[0].interval_halfwidth);
}

TEST_CASE("pipeline failures")
{
    PipelineConfig c = small_config();
    c.budget_factor = 1;
    CHECK_THROWS_AS(run_pipeline(c), ErgodizationError);

    PipelineConfig d = small_config();
    d.p_exp = 2;
    d.beta = 10;
    CHECK_THROWS_AS(run_pipeline(d), BudgetError);

    PipelineConfig e = small_config();
    e.pattern = {1, 1};
    CHECK_THROWS_AS(run_pipeline(e), UsageError);
}

TEST_CASE("choose_centers rejects inconsistent input")
{
    const DiffusionReport& r = four_node_run();
    std::vector<HeteroclinicRecord> recs{r.links[0].record, r.terminal};
    std::vector<TransitionJacobian> tjs{r.links[0].tj, r.terminal_tj};
    NormalChart ch = jacobi_chart(Vec2::Zero(), r.config.params);
    CHECK_THROWS_AS(choose_centers(recs, tjs, {}, ch), UsageError);
    CenterChoice cc = choose_centers(recs, tjs, {r.links[0].n}, ch);
    CHECK(cc.rule_used[0] == "a41_nonzero");
}
