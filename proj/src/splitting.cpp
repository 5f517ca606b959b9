#include "adw/splitting.hpp"
#include "adw/errors.hpp"
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

namespace adw {

SeparatrixPoint separatrix_at(double t)
{
    SeparatrixPoint s;
    s.t = t;
    s.q0 = 4.0 * std::atan(std::exp(t));
    s.p0 = 2.0 / std::cosh(t);
    return s;
}

double separatrix_time(double q)
{
    return std::log(std::tan(0.25 * q));
}

double separatrix_momentum(double q)
{
    return 2.0 * std::sin(0.5 * q);
}

double melnikov_I(double a)
{
    double x = 0.5 * kPi * a;
    if (std::abs(x) < 1e-8) return 4.0 * (1.0 - x * x / 6.0);
    return 4.0 * x / std::sinh(x);
}

namespace {

struct SGrad {
    Vec2 grad;
    Mat2 hess;
};

// S(psi) = sum f_k cos(k.psi) I(k.w)
SGrad melnikov_potential(const Vec2& psi, const ModelParams& prm)
{
    SGrad r{Vec2::Zero(), Mat2::Zero()};
    for (const Mode& m : prm.pert.modes()) {
        Vec2 k(m.k1, m.k2);
        double I = melnikov_I(k.dot(prm.freq.omega));
        double arg = k.dot(psi);
        r.grad -= m.f * I * std::sin(arg) * k;
        r.hess -= m.f * I * std::cos(arg) * (k * k.transpose());
    }
    return r;
}

void check_q(double q)
{
    if (!(q > 0 && q < kTwoPi)) throw UsageError("splitting: q must lie in (0, 2pi)");
}

} // namespace

MelnikovValue melnikov_at(double q, const Vec2& phi, const ModelParams& params)
{
    check_q(q);
    Vec2 psi = phi - params.freq.omega * separatrix_time(q);
    SGrad s = melnikov_potential(psi, params);
    MelnikovValue v;
    v.dA = params.mu * s.grad;
    v.dp = -params.freq.omega.dot(v.dA) / separatrix_momentum(q);
    return v;
}

MelnikovValue melnikov(const Vec2& phi, const ModelParams& params)
{
    return melnikov_at(kPi, phi, params);
}

SplittingData splitting_matrix_raw(double q, const Vec2& phi, const ModelParams& params)
{
    check_q(q);
    const Vec2& w = params.freq.omega;
    double p0 = separatrix_momentum(q);
    double alpha = -1.0 / p0;
    double dalpha = std::cos(0.5 * q) / (p0 * p0);
    Vec2 psi = phi - w * separatrix_time(q);
    SGrad s = melnikov_potential(psi, params);
    double mu = params.mu;

    SplittingData d;
    d.q_star = q;
    d.phi_star = phi;
    d.alpha_energy = alpha;
    d.delta_A = mu * s.grad;
    d.delta_p = alpha * w.dot(d.delta_A);
    Vec2 dAq = mu * alpha * (s.hess * w);
    Mat2 dAphi = mu * s.hess;
    d.M_full(0, 0) = dalpha * w.dot(d.delta_A) + alpha * w.dot(dAq);
    d.M_full(0, 1) = alpha * w.dot(dAphi.col(0));
    d.M_full(0, 2) = alpha * w.dot(dAphi.col(1));
    d.M_full.block<2, 1>(1, 0) = dAq;
    d.M_full.block<2, 2>(1, 1) = dAphi;
    d.M_se = dAphi;
    return d;
}

SplittingData splitting_matrix(const Vec2& phi, const ModelParams& params, double q)
{
    SplittingData d = splitting_matrix_raw(q, phi, params);
    double scale = d.M_full.cwiseAbs().maxCoeff();
    if (!(scale > 0)) throw ConditionError("splitting matrix vanishes (mu = 0?)");
    double det = d.M_se.determinant();
    if (!(det > 1e-12 * scale * scale))
        throw ConditionError("det M_se = " + std::to_string(det) + " is not positive");
    if (std::abs(d.M_full(0, 0)) < 1e-10 * scale) throw ConditionError("d_q dp vanishes");
    Mat2 J;
    J.col(0) = d.M_full.block<2, 1>(1, 0);
    J.col(1) = d.M_full.block<2, 1>(1, 1);
    if (std::abs(J.determinant()) < 1e-12 * scale * scale)
        throw ConditionError("(d_q dA, d_phi1 dA) is singular");
    return d;
}

// ---------------------------------------------------------------------------

HeteroclinicCurve::HeteroclinicCurve(const ModelParams& params, double phi1_0, double phi2_0)
    : params_(params), phi1_0_(phi1_0), phi2_0_(phi2_0)
{
    if (!(params.mu > 0)) throw ContinuationError("heteroclinic curve needs mu > 0");
    SplittingData d0 = splitting_matrix(Vec2(phi1_0, phi2_0), params);
    if (d0.delta_A.norm() > 1e-12 * params.mu)
        throw ContinuationError("(pi, phi0) is not a homoclinic point");
    dpq0_ = std::abs(d0.M_full(0, 0));

    double scale = 0;
    for (const Mode& m : params.pert.modes())
        scale += m.f * melnikov_I(m.k1 * params.freq.omega[0] + m.k2 * params.freq.omega[1]) *
                 std::hypot(m.k1, m.k2);
    scale *= params.mu / params.freq.omega.norm();
    double step = scale / 400.0;
    const int max_steps = 4000;

    double bars[2];
    for (int sgn = 0; sgn < 2; ++sgn) {
        double dir = sgn ? -1.0 : 1.0;
        CurvePoint c{kPi, phi1_0};
        std::vector<std::pair<double, CurvePoint>> branch;
        double last_ok = 0;
        for (int i = 1; i <= max_steps; ++i) {
            double delta = dir * i * step;
            bool ok = false;
            CurvePoint nc = newton(delta, c, ok);
            if (!ok || nc.q < 0.5 || nc.q > kTwoPi - 0.5) break;
            SplittingData d = splitting_matrix_raw(nc.q, Vec2(nc.phi1, phi2_0), params);
            if (std::abs(d.M_full(0, 0)) < 0.5 * dpq0_) break;
            if (std::abs(nc.q - c.q) > 0.2 || std::abs(nc.phi1 - c.phi1) > 0.2) break;
            c = nc;
            last_ok = std::abs(delta);
            branch.push_back({delta, c});
        }
        bars[sgn] = last_ok;
        for (auto& b : branch) table_.push_back(b);
    }
    table_.push_back({0.0, CurvePoint{kPi, phi1_0}});
    std::sort(table_.begin(), table_.end(), [](auto& a, auto& b) { return a.first < b.first; });
    delta_bar_ = std::min(bars[0], bars[1]);
    if (!(delta_bar_ > 0)) throw ContinuationError("could not continue the homoclinic point");
}

CurvePoint HeteroclinicCurve::newton(double delta, CurvePoint c, bool& ok) const
{
    const Vec2 wp = params_.freq.perp();
    ok = false;
    for (int it = 0; it < 50; ++it) {
        if (!(c.q > 0 && c.q < kTwoPi)) return c;
        SplittingData d = splitting_matrix_raw(c.q, Vec2(c.phi1, phi2_0_), params_);
        Vec2 F = delta * wp + d.delta_A;
        Mat2 J;
        J.col(0) = d.M_full.block<2, 1>(1, 0);
        J.col(1) = d.M_full.block<2, 1>(1, 1);
        Vec2 step = J.fullPivLu().solve(F);
        if (!step.allFinite()) return c;
        c.q -= step[0];
        c.phi1 -= step[1];
        if (step.norm() < 1e-14 * (1 + std::abs(c.q) + std::abs(c.phi1))) {
            ok = residual(delta, c) < 1e-10 * std::max(params_.mu, 1e-300) + 1e-15;
            return c;
        }
    }
    ok = residual(delta, c) < 1e-10 * params_.mu;
    return c;
}

double HeteroclinicCurve::residual(double delta, const CurvePoint& c) const
{
    MelnikovValue v = melnikov_at(c.q, Vec2(c.phi1, phi2_0_), params_);
    return (delta * params_.freq.perp() + v.dA).norm();
}

CurvePoint HeteroclinicCurve::seed_for(double delta) const
{
    auto it = std::lower_bound(table_.begin(), table_.end(), delta,
                               [](const auto& e, double d) { return e.first < d; });
    if (it == table_.end()) return table_.back().second;
    if (it != table_.begin() && std::abs(std::prev(it)->first - delta) < std::abs(it->first - delta))
        --it;
    return it->second;
}

CurvePoint HeteroclinicCurve::at(double delta) const
{
    if (!(std::abs(delta) < delta_bar_))
        throw ContinuationError("|delta| = " + std::to_string(std::abs(delta)) + " >= delta_bar = " +
                                std::to_string(delta_bar_));
    if (delta == 0.0) return CurvePoint{kPi, phi1_0_};
    bool ok = false;
    CurvePoint c = newton(delta, seed_for(delta), ok);
    if (!ok) throw ContinuationError("Newton did not converge at delta = " + std::to_string(delta));
    return c;
}

Vec2 HeteroclinicCurve::derivative(double delta) const
{
    CurvePoint c = at(delta);
    SplittingData d = splitting_matrix_raw(c.q, Vec2(c.phi1, phi2_0_), params_);
    Mat2 J;
    J.col(0) = d.M_full.block<2, 1>(1, 0);
    J.col(1) = d.M_full.block<2, 1>(1, 1);
    return -J.fullPivLu().solve(params_.freq.perp());
}

CurvePoint continue_heteroclinic(double delta, const ModelParams& params)
{
    HeteroclinicCurve c(params);
    return c.at(delta);
}

// ---------------------------------------------------------------------------

PhasePoint whisker_point(const Vec2& base_action, Side side, double q, const Vec2& phi,
                         const ModelParams& params, double d_margin)
{
    if (side == Side::Unstable && !(q > 0 && q < kTwoPi - d_margin))
        throw DomainError("whisker_point", "unstable graph needs q in (0, 2pi - d)");
    if (side == Side::Stable && !(q > d_margin && q < kTwoPi))
        throw DomainError("whisker_point", "stable graph needs q in (d, 2pi)");
    const Vec2& w = params.freq.omega;
    Vec2 A = base_action;
    if (params.mu != 0.0) {
        double tq = separatrix_time(q);
        Vec2 psi = phi - w * tq;
        using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
        const double inf = std::numeric_limits<double>::infinity();
        Vec2 I;
        for (int c = 0; c < 2; ++c) {
            auto integrand = [&](double u) {
                if (std::abs(u) > 700) return 0.0;
                double s = 1.0 / std::cosh(u);
                return 2.0 * s * s * perturbation_eval(psi + w * u, params.pert).grad[c];
            };
            I[c] = side == Side::Unstable ? -GK::integrate(integrand, -inf, tq, 15, 1e-14)
                                          : GK::integrate(integrand, tq, inf, 15, 1e-14);
        }
        A += params.mu * I;
    }
    double h = w.dot(base_action);
    double cq = std::cos(q);
    double kin = h - w.dot(A) - (cq - 1.0) - params.mu * (1.0 - cq) * perturbation_eval(phi, params.pert).value;
    if (kin < 0) throw DomainError("whisker_point", "negative kinetic energy");
    return PhasePoint(wrap_angle(q), Vec2(wrap_angle(phi[0]), wrap_angle(phi[1])), std::sqrt(2.0 * kin), A);
}

} // namespace adw
