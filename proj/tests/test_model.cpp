#include "adw/errors.hpp"
#include "adw/model.hpp"
#include <doctest.h>
#include <cmath>
#include <random>

using namespace adw;

TEST_CASE("hamiltonian at reference points")
{
    ModelParams p = ModelParams::defaults(1e-2);
    CHECK(eval_hamiltonian(PhasePoint(0, Vec2::Zero(), 0, Vec2::Zero()), p) == doctest::Approx(0.0));
    ModelParams p0 = p.with_mu(0);
    CHECK(eval_hamiltonian(PhasePoint(kPi, Vec2::Zero(), 0, Vec2::Zero()), p0) == doctest::Approx(-2.0));
    CHECK(eval_hamiltonian(PhasePoint(kPi, Vec2::Zero(), 2, Vec2::Zero()), p0) == doctest::Approx(0.0).epsilon(1e-15));
    Vec2 A(0.3, -0.2);
    CHECK(eval_hamiltonian(PhasePoint(0, Vec2(1.1, 2.2), 0, A), p) == doctest::Approx(p.freq.omega.dot(A)));
}

TEST_CASE("hamiltonian is even in phi")
{
    ModelParams p = ModelParams::defaults(0.05);
    PhasePoint a(1.0, Vec2(0.4, -1.3), 0.2, Vec2(0.1, 0.1)), b = a;
    b.phi = -a.phi;
    CHECK(eval_hamiltonian(a, p) == doctest::Approx(eval_hamiltonian(b, p)).epsilon(1e-14));
}

TEST_CASE("vector field")
{
    ModelParams p = ModelParams::defaults(1e-2);
    Vec6 v = vector_field(PhasePoint(0, Vec2(0.3, 0.9), 0, Vec2::Zero()), p);
    CHECK(v[0] == 0.0);
    CHECK(v[1] == doctest::Approx(p.freq.omega[0]));
    CHECK(v[2] == doctest::Approx(p.freq.omega[1]));
    CHECK(v.tail<3>().cwiseAbs().maxCoeff() < 1e-15);

    Vec6 w = vector_field(PhasePoint(kPi, Vec2::Zero(), 2, Vec2::Zero()), p.with_mu(0));
    CHECK(w[0] == doctest::Approx(2.0));
    CHECK(std::abs(w[3]) < 1e-15);

    // Hamilton's equations against central differences
    PhasePoint z(0.7, Vec2(0.2, 1.4), 0.3, Vec2(0.05, -0.1));
    Vec6 x = z.to_vec(), g;
    for (int i = 0; i < 6; ++i) {
        Vec6 e = Vec6::Zero();
        e[i] = 1e-6;
        g[i] = (eval_hamiltonian(PhasePoint::from_vec(x + e), p) - eval_hamiltonian(PhasePoint::from_vec(x - e), p)) / 2e-6;
    }
    Vec6 f = vector_field(z, p);
    Vec6 expect;
    expect << g[3], g[4], g[5], -g[0], -g[1], -g[2];
    CHECK((f - expect).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("perturbation values")
{
    Perturbation u = Perturbation::uniform(3);
    PerturbationValue v0 = perturbation_eval(Vec2::Zero(), u);
    double sum = 0;
    for (const Mode& m : u.modes()) sum += m.f;
    CHECK(v0.value == doctest::Approx(sum));
    CHECK(v0.grad.norm() < 1e-15);

    Perturbation single(1, {{1, 0, 1.0}});
    CHECK(std::abs(perturbation_eval(Vec2(kPi / 2, 0.7), single).value) < 1e-15);

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(0, kTwoPi);
    for (int t = 0; t < 20; ++t) {
        Vec2 phi(U(rng), U(rng));
        double direct = 0;
        Vec2 grad = Vec2::Zero();
        for (const Mode& m : u.modes()) {
            double a = m.k1 * phi[0] + m.k2 * phi[1];
            direct += m.f * std::cos(a);
            grad -= m.f * std::sin(a) * Vec2(m.k1, m.k2);
        }
        PerturbationValue pv = perturbation_eval(phi, u);
        CHECK(std::abs(pv.value - direct) < 1e-12);
        CHECK((pv.grad - grad).norm() < 1e-12);
    }
}

TEST_CASE("perturbation mirrors are enforced")
{
    CHECK_THROWS(Perturbation(2, {{1, 0, 1.0}, {-1, 0, 2.0}}));
}

TEST_CASE("diophantine margin")
{
    CHECK(diophantine_margin(Frequency(Vec2(1, 1.6180339887498949), 0.1, 1), 50) > 0);
    CHECK(diophantine_margin(Frequency(Vec2(1, 1), 0.1, 1), 10) == 0.0);
    Frequency s2(Vec2(1, std::sqrt(2.0)), 0.1, 1);
    double best = 1e9;
    for (int k1 = -10; k1 <= 10; ++k1)
        for (int k2 = -10; k2 <= 10; ++k2) {
            int n = std::abs(k1) + std::abs(k2);
            if (n == 0 || n > 10) continue;
            best = std::min(best, std::abs(k1 + k2 * std::sqrt(2.0)) * n);
        }
    CHECK(diophantine_margin(s2, 10) == doctest::Approx(best));
}

TEST_CASE("mu range")
{
    CHECK_THROWS_AS(ModelParams(2 * ModelParams::mu_max, Frequency(), Perturbation::uniform(3)), UsageError);
    CHECK_THROWS_AS(ModelParams(-1e-3, Frequency(), Perturbation::uniform(3)), UsageError);
}
