#include "adw/flow.hpp"
#include "adw/errors.hpp"
#include <cmath>
#include <vector>

namespace adw {

FlowSettings& flow_settings()
{
    static FlowSettings s;
    return s;
}

SectionSpec SectionSpec::make(const Frequency& fr, double phi2_0)
{
    if (fr.omega[1] == 0.0) throw UsageError("section phi2 = const needs omega2 != 0");
    SectionSpec s;
    s.phi2_0 = wrap_angle(phi2_0);
    s.t_star = kTwoPi / std::abs(fr.omega[1]);
    s.nu = wrap_angle(fr.omega[0] * s.t_star);
    return s;
}

Mat6 symplectic_form()
{
    Mat6 W = Mat6::Zero();
    W.block<3, 3>(0, 3) = Mat3::Identity();
    W.block<3, 3>(3, 0) = -Mat3::Identity();
    return W;
}

namespace {

std::vector<double> composition_weights(int order)
{
    if (order < 2 || order > 8 || order % 2) throw UsageError("integrator order must be 2, 4, 6 or 8");
    std::vector<double> w{1.0};
    for (int n = 1; 2 * n < order; ++n) {
        double r = std::pow(2.0, 1.0 / (2 * n + 1));
        double z1 = 1.0 / (2.0 - r), z0 = -r * z1;
        std::vector<double> next;
        for (double z : {z1, z0, z1})
            for (double c : w) next.push_back(z * c);
        w.swap(next);
    }
    return w;
}

const std::vector<double>& weights(int order)
{
    static std::vector<double> cache[9];
    if (cache[order].empty()) cache[order] = composition_weights(order);
    return cache[order];
}

struct Potential {
    double Vq;
    Vec2 Vphi;
    double Vqq;
    Vec2 Vqphi;
    Mat2 Vphiphi;
};

Potential potential(double q, const Vec2& phi, const ModelParams& prm, bool hess)
{
    double f = 0, g1 = 0, g2 = 0, h11 = 0, h12 = 0, h22 = 0;
    for (const Mode& m : prm.pert.modes()) {
        double s, c;
        sincos(m.k1 * phi[0] + m.k2 * phi[1], &s, &c);
        f += m.f * c;
        g1 -= m.f * s * m.k1;
        g2 -= m.f * s * m.k2;
        if (hess) {
            h11 -= m.f * c * m.k1 * m.k1;
            h12 -= m.f * c * m.k1 * m.k2;
            h22 -= m.f * c * m.k2 * m.k2;
        }
    }
    double sq, cq;
    sincos(q, &sq, &cq);
    double mu = prm.mu;
    Potential P;
    P.Vq = -sq + mu * sq * f;
    P.Vphi = Vec2(mu * (1 - cq) * g1, mu * (1 - cq) * g2);
    if (hess) {
        P.Vqq = -cq + mu * cq * f;
        P.Vqphi = Vec2(mu * sq * g1, mu * sq * g2);
        P.Vphiphi << h11, h12, h12, h22;
        P.Vphiphi *= mu * (1 - cq);
    }
    return P;
}

double energy_raw(const Vec6& z, const ModelParams& prm)
{
    PhasePoint pt(z[0], Vec2(z[1], z[2]), z[3], Vec2(z[4], z[5]));
    return eval_hamiltonian(pt, prm);
}

struct Box {
    bool on = false;
    double p_max = 0, A_max = 0;
    Vec2 A0;
};

RawFlow run(const Vec6& z0, double t, const ModelParams& prm, bool tangent, const FlowSettings& fs,
            const Box& box)
{
    RawFlow out{z0, Mat6::Identity()};
    if (!std::isfinite(t)) throw IntegrationError("non-finite integration time");
    if (t == 0.0) return out;
    SectionSpec sec = SectionSpec::make(prm.freq);
    double hmax = sec.t_star / fs.steps_per_return;
    double steps_d = std::ceil(std::abs(t) / hmax - 1e-9);
    if (steps_d > 1e9) throw IntegrationError("step count overflow");
    long steps = std::max(1L, static_cast<long>(steps_d));
    double h = t / steps;
    if (std::abs(h) < 1e-300) throw IntegrationError("step-size underflow");
    const std::vector<double>& w = weights(fs.order);
    const Vec2 om = prm.freq.omega;

    double q = z0[0], p = z0[3];
    Vec2 phi(z0[1], z0[2]), A(z0[4], z0[5]);
    Mat6& J = out.J;

    auto drift = [&](double tau) {
        q += tau * p;
        phi += tau * om;
        if (tangent) J.row(0) += tau * J.row(3);
    };
    auto kick = [&](double tau) {
        Potential P = potential(q, phi, prm, tangent);
        if (tangent) {
            Eigen::Matrix<double, 1, 6> dq = J.row(0), d1 = J.row(1), d2 = J.row(2);
            J.row(3) -= tau * (P.Vqq * dq + P.Vqphi[0] * d1 + P.Vqphi[1] * d2);
            J.row(4) -= tau * (P.Vqphi[0] * dq + P.Vphiphi(0, 0) * d1 + P.Vphiphi(0, 1) * d2);
            J.row(5) -= tau * (P.Vqphi[1] * dq + P.Vphiphi(1, 0) * d1 + P.Vphiphi(1, 1) * d2);
        }
        p -= tau * P.Vq;
        A -= tau * P.Vphi;
    };

    for (long s = 0; s < steps; ++s) {
        for (double c : w) {
            drift(0.5 * c * h);
            kick(c * h);
            drift(0.5 * c * h);
        }
        if (!std::isfinite(p) || !std::isfinite(q)) throw IntegrationError("state became non-finite");
        if (box.on && (std::abs(p) > box.p_max || (A - box.A0).norm() > box.A_max))
            throw EscapeError("orbit left the box |p|<=" + std::to_string(box.p_max) +
                              ", |A-A0|<=" + std::to_string(box.A_max));
    }
    out.z << q, phi[0], phi[1], p, A[0], A[1];
    return out;
}

} // namespace

RawFlow integrate_raw(const Vec6& z0, double t, const ModelParams& params, bool with_tangent,
                      const FlowSettings& fs)
{
    return run(z0, t, params, with_tangent, fs, Box{});
}

FlowResult integrate(const PhasePoint& pt, double t, const ModelParams& params, double tol)
{
    if (!(tol > 0)) throw UsageError("integrate: tol must be positive");
    Vec6 z0 = pt.to_vec();
    double H0 = eval_hamiltonian(pt, params);
    FlowSettings fs = flow_settings();
    for (int refine = 0; refine < 8; ++refine) {
        RawFlow r = run(z0, t, params, false, fs, Box{});
        double drift = std::abs(energy_raw(r.z, params) - H0);
        if (drift <= tol * std::max(1.0, std::abs(H0)) || refine == 7) {
            if (drift > tol * std::max(1.0, std::abs(H0)))
                throw IntegrationError("energy drift above tolerance after step refinement");
            FlowResult fr;
            fr.endpoint = PhasePoint::from_vec(r.z).wrapped();
            fr.elapsed = t;
            fr.energy_drift = drift;
            return fr;
        }
        fs.steps_per_return *= 2;
    }
    throw IntegrationError("unreachable");
}

FlowResult variational_flow(const PhasePoint& pt, double t, const ModelParams& params)
{
    RawFlow r = run(pt.to_vec(), t, params, true, flow_settings(), Box{});
    FlowResult fr;
    fr.endpoint = PhasePoint::from_vec(r.z).wrapped();
    fr.jacobian = r.J;
    fr.elapsed = t;
    fr.energy_drift = std::abs(energy_raw(r.z, params) - eval_hamiltonian(pt, params));
    return fr;
}

PhasePoint section_return(const PhasePoint& pt, const SectionSpec& spec, int n, const ModelParams& params)
{
    if (std::abs(wrap_centered(pt.phi[1] - spec.phi2_0)) > 1e-8)
        throw UsageError("section_return: point is not on the section");
    if (n == 0) return pt.wrapped();
    const FlowSettings& fs = flow_settings();
    Box box{true, fs.p_box, fs.A_box, pt.A};
    double dir = params.freq.omega[1] > 0 ? 1.0 : -1.0;
    RawFlow r = run(pt.to_vec(), dir * n * spec.t_star, params, false, fs, box);
    double resid = wrap_centered(r.z[2] - spec.phi2_0);
    if (resid != 0.0) {
        FlowSettings one = fs;
        one.steps_per_return = 1 << 20;
        r = run(r.z, -resid / params.freq.omega[1], params, false, one, Box{});
    }
    PhasePoint out = PhasePoint::from_vec(r.z).wrapped();
    out.phi[1] = spec.phi2_0;
    return out;
}

} // namespace adw
