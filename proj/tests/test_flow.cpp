#include "adw/errors.hpp"
#include "adw/flow.hpp"
#include "adw/splitting.hpp"
#include <doctest.h>
#include <cmath>

using namespace adw;

TEST_CASE("torus points rotate rigidly")
{
    ModelParams p = ModelParams::defaults(1e-2);
    PhasePoint z(0, Vec2(0.1, 0.2), 0, Vec2(0.02, 0.01));
    FlowResult r = integrate(z, 2.5, p);
    PhasePoint e = r.endpoint;
    CHECK(std::abs(e.q) < 1e-14);
    CHECK(std::abs(e.p) < 1e-14);
    CHECK(std::abs(wrap_centered(e.phi[0] - 0.1 - 2.5 * p.freq.omega[0])) < 1e-12);
    CHECK(std::abs(wrap_centered(e.phi[1] - 0.2 - 2.5 * p.freq.omega[1])) < 1e-12);
    CHECK((e.A - z.A).norm() < 1e-14);
}

TEST_CASE("separatrix stays on p = 2 sin(q/2)")
{
    ModelParams p0 = ModelParams::defaults(0.0);
    SeparatrixPoint s = separatrix_at(-2.0);
    FlowResult r = integrate(PhasePoint(s.q0, Vec2::Zero(), s.p0, Vec2::Zero()), 4.0, p0);
    double q = r.endpoint.q;
    CHECK(std::abs(r.endpoint.p - 2 * std::sin(q / 2)) < 1e-9);
}

TEST_CASE("forward then backward is the identity")
{
    ModelParams p = ModelParams::defaults(1e-2);
    PhasePoint z(1.0, Vec2(0.3, 0.4), 0.5, Vec2(0.01, -0.02));
    PhasePoint y = integrate(integrate(z, 3.0, p).endpoint, -3.0, p).endpoint;
    CHECK(std::abs(wrap_centered(y.q - z.q)) < 1e-8);
    CHECK(std::abs(y.p - z.p) < 1e-8);
    CHECK((y.A - z.A).norm() < 1e-8);
}

TEST_CASE("variational flow")
{
    ModelParams p = ModelParams::defaults(1e-2);
    PhasePoint z(0.8, Vec2(0.2, 1.1), 0.3, Vec2(0.03, 0.01));
    CHECK((variational_flow(z, 0.0, p).jacobian - Mat6::Identity()).cwiseAbs().maxCoeff() < 1e-15);

    FlowResult v = variational_flow(z, 0.7, p);
    Mat6 fd;
    for (int j = 0; j < 6; ++j) {
        Vec6 e = Vec6::Zero();
        e[j] = 1e-6;
        Vec6 a = integrate_raw(z.to_vec() + e, 0.7, p, false).z, b = integrate_raw(z.to_vec() - e, 0.7, p, false).z;
        fd.col(j) = (a - b) / 2e-6;
    }
    CHECK((fd - v.jacobian).cwiseAbs().maxCoeff() < 1e-5);

    Mat6 Om = symplectic_form();
    CHECK((v.jacobian.transpose() * Om * v.jacobian - Om).cwiseAbs().maxCoeff() < 1e-10);

    // unperturbed: the pendulum block decouples from the actions, angle rows are trivial
    Mat6 J = variational_flow(z, 0.7, p.with_mu(0)).jacobian;
    for (int i : {0, 3})
        for (int j : {1, 2, 4, 5}) CHECK(std::abs(J(i, j)) < 1e-14);
    CHECK(std::abs(J(1, 1) - 1) < 1e-14);
    CHECK(std::abs(J(4, 4) - 1) < 1e-14);
}

TEST_CASE("section returns")
{
    ModelParams p = ModelParams::defaults(1e-2);
    SectionSpec spec = SectionSpec::make(p.freq);
    CHECK(spec.t_star == doctest::Approx(kTwoPi / p.freq.omega[1]));
    PhasePoint t(0, Vec2(0.5, 0.0), 0, Vec2::Zero());
    PhasePoint r = section_return(t, spec, 1, p);
    CHECK(std::abs(wrap_centered(r.phi[0] - 0.5 - spec.nu)) < 1e-12);

    PhasePoint z(0.05, Vec2(0.5, 0.0), 0.03, Vec2::Zero());
    PhasePoint back = section_return(section_return(z, spec, 3, p), spec, -3, p);
    CHECK(std::abs(wrap_centered(back.q - z.q)) < 1e-8);
    CHECK(std::abs(back.p - z.p) < 1e-8);
    CHECK(std::abs(wrap_centered(back.phi[0] - z.phi[0])) < 1e-8);
}

TEST_CASE("escape box")
{
    ModelParams p = ModelParams::defaults(1e-2);
    SectionSpec spec = SectionSpec::make(p.freq);
    CHECK_THROWS_AS(section_return(PhasePoint(0, Vec2::Zero(), 3.9, Vec2::Zero()), spec, 1, p), EscapeError);
}
