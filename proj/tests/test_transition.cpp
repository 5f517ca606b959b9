#include "adw/errors.hpp"
#include "adw/transition.hpp"
#include <doctest.h>
#include <cmath>

using namespace adw;

namespace {

struct Fixture {
    ModelParams p;
    SectionSpec spec;
    HeteroclinicRecord rec;
    TransitionJacobian tj;
};

const Fixture& unperturbed()
{
    static const Fixture f = [] {
        Fixture x;
        x.p = ModelParams::defaults(0.0);
        x.spec = SectionSpec::make(x.p.freq);
        HeteroclinicCurve curve(ModelParams::defaults(1e-3));
        x.rec = heteroclinic_record(0, 0.0, 0.0, Vec2::Zero(), curve, x.p, x.spec);
        x.tj = transition_jacobian(x.rec, x.p, x.spec);
        return x;
    }();
    return f;
}

const Fixture& perturbed()
{
    static const Fixture f = [] {
        Fixture x;
        x.p = ModelParams::defaults(1e-3);
        x.spec = SectionSpec::make(x.p.freq);
        HeteroclinicCurve curve(x.p);
        x.rec = heteroclinic_record(0, 0.0, 0.75 * curve.delta_bar(), Vec2::Zero(), curve, x.p, x.spec);
        x.tj = transition_jacobian(x.rec, x.p, x.spec);
        return x;
    }();
    return f;
}

} // namespace

TEST_CASE("unperturbed record lies on the straightened whiskers")
{
    const Fixture& f = unperturbed();
    CHECK(f.rec.l_minus >= 1);
    CHECK(f.rec.l_plus >= 1);
    CHECK(std::abs(f.rec.X_k.P) < 1e-12);
    CHECK(std::abs(f.rec.X_k_prime.Q) < 1e-12);
    CHECK(f.rec.X_k.rho == doctest::Approx(f.rec.X_k_prime.rho));
}

TEST_CASE("unperturbed Jacobian pattern")
{
    const TransitionJacobian& t = unperturbed().tj;
    CHECK(t.A(0, 2) * t.A(2, 0) == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(t.row2_dev < 1e-6);
    // the (3,3) entry is the period-energy twist of the pendulum and does not vanish
    CHECK(std::abs(t.A(2, 2)) > 1e-3);
    CHECK(std::abs(t.A(0, 0)) < 1e-6);
}

TEST_CASE("perturbed Jacobian")
{
    const Fixture& f = perturbed();
    const TransitionJacobian& t = f.tj;
    CHECK(t.row2_dev < 1e-6);
    CHECK(t.col4_dev < 1e-6);
    CHECK(t.a11_margin > 0);
    CHECK(t.D_margin > 0);
    Mat4 fd;
    for (int j = 0; j < 4; ++j) {
        Vec4 e = Vec4::Zero();
        e[j] = 1e-6;
        fd.col(j) = (psi_map(f.rec, f.rec.X_k.vec() + e, f.p, f.spec) - psi_map(f.rec, f.rec.X_k.vec() - e, f.p, f.spec)) / 2e-6;
    }
    CHECK((fd - t.A).cwiseAbs().maxCoeff() < 1e-4 * t.A.cwiseAbs().maxCoeff());
}

TEST_CASE("transition map remainder is quadratic")
{
    const Fixture& f = perturbed();
    TransitionMapValue z = transition_map(f.rec, f.tj, Vec4::Zero(), f.p, f.spec);
    Vec4 d = z.image - f.rec.X_k_prime.vec();
    d[1] = wrap_centered(d[1]);
    CHECK(d.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(z.remainder.cwiseAbs().maxCoeff() < 1e-12);
    Vec4 xi(1e-4, -1e-4, 5e-5, 0);
    double r1 = transition_map(f.rec, f.tj, xi, f.p, f.spec).remainder.cwiseAbs().maxCoeff();
    double r2 = transition_map(f.rec, f.tj, 2 * xi, f.p, f.spec).remainder.cwiseAbs().maxCoeff();
    CHECK(r2 / r1 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("stable graph")
{
    const Fixture& u = unperturbed();
    StableGraph g0 = stable_graph(u.rec, u.tj, u.p, u.spec);
    CHECK(g0.M_N.cwiseAbs().maxCoeff() < 1e-8);
    CHECK(std::abs(g0.P_fun(g0.Q0, g0.theta0)) < 1e-12);
    CHECK(g0.rho_fun(g0.Q0 + 1e-3, g0.theta0) == doctest::Approx(u.rec.X_k_prime.rho));

    const Fixture& f = perturbed();
    StableGraph g = stable_graph(f.rec, f.tj, f.p, f.spec);
    CHECK(g.M_N.cwiseAbs().maxCoeff() > 0);
    // a11 = -a h11 and D = a det h
    CHECK(f.tj.a_ij(0, 0) == doctest::Approx(-f.tj.a * g.h(0, 0)).epsilon(1e-5));
    CHECK(f.tj.D == doctest::Approx(f.tj.a * g.h.determinant()).epsilon(1e-5));
}

TEST_CASE("record refinement lands on the next torus")
{
    const Fixture& f = perturbed();
    CHECK(f.rec.refined);
    CHECK(f.rec.newton_residual < 1e-12);
    CHECK(f.rec.flight_time() == doctest::Approx((f.rec.l_minus + f.rec.l_plus) * f.spec.t_star));
}
