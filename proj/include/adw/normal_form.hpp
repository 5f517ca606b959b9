/** \file normal_form.hpp
    \brief Local hyperbolic chart near a whiskered torus, reduced coordinates, inner map.

    The chart is the pendulum Birkhoff normal form (Lie series up to a fixed degree)
    followed by a first-order Lie transform removing mu (1 - cos q) f(phi).
*/
#pragma once
#include "adw/flow.hpp"
#include "adw/poly.hpp"
#include <memory>

namespace adw {

struct ChartSettings {
    int degree = 12;
    double R = 0.5;
    double kappa = 1.0;
    int g0_returns = 200;  ///< section returns used to measure the saddle exponent
};

ChartSettings& chart_settings();

/// pendulum part, shared by all tori on an energy level
struct ChartCore {
    int degree = 0;
    Poly2 q_of, p_of;   ///< physical (q, p) as polynomials of the normal (Q, P)
    Poly2 G;            ///< 1 - cos q in normal coordinates
    std::vector<double> J;  ///< J0(eta) = sum J[j] eta^j
    ModelParams params;
    bool with_mu = true;

    double J1(double eta) const;  ///< J0'
    double J2(double eta) const;  ///< J0''
    /// chi and its gradient in (Q, P, psi1, psi2)
    void chi(double Q, double P, const Vec2& psi, double& v, double& vQ, double& vP, Vec2& vpsi) const;
};

struct NormalChart {
    Vec2 torus_action = Vec2::Zero();
    double R = 0.5;
    double kappa = 1.0;
    double g0 = 1.0;
    double g_tilde = 0.125;
    double energy_h = 0.0;
    double t_star = 1.0;
    std::shared_ptr<const ChartCore> core;

    double g(double eta) const { return g0 + g_tilde * eta; }
    /// L = e^{g0 t*}
    double L() const { return std::exp(g0 * t_star); }

    /// (Q, psi1, psi2, P, I1, I2) -> physical point
    PhasePoint to_physical(const Vec6& normal) const;
    /// physical -> (Q, psi1, psi2, P, I1, I2); q is read in (-pi, pi]
    Vec6 to_normal(const PhasePoint& pt) const;
    /// same chart translated to another torus on the same energy level
    NormalChart for_torus(const Vec2& action) const;
};

struct ReducedPoint {
    double Q = 0, theta = 0, P = 0, rho = 0;
    ReducedPoint() = default;
    ReducedPoint(double Q_, double th, double P_, double r) : Q(Q_), theta(th), P(P_), rho(r) {}
    Vec4 vec() const { return Vec4(Q, theta, P, rho); }
    static ReducedPoint from_vec(const Vec4& v) { return ReducedPoint(v[0], v[1], v[2], v[3]); }
};

/// saddle exponent of the linearised flow at q = p = 0
double saddle_exponent(const ModelParams& params, int returns);

NormalChart jacobi_chart(const Vec2& torus_action, const ModelParams& params);

/// checks section, energy and chart domain
ReducedPoint to_reduced(const PhasePoint& pt, const NormalChart& chart, const SectionSpec& spec);
/// no checks; used inside Newton loops and finite differences
ReducedPoint to_reduced_raw(const PhasePoint& pt, const NormalChart& chart);
/// A2 is recovered from the exact energy H = chart.energy_h
PhasePoint from_reduced(const ReducedPoint& rp, const NormalChart& chart, const SectionSpec& spec);

struct InnerMapResult {
    ReducedPoint image;
    ReducedPoint linear_part;
    Vec4 remainder;
};

InnerMapResult inner_map(const ReducedPoint& rp, int n, const NormalChart& chart, const SectionSpec& spec);
/// same map without the chart-domain check
InnerMapResult inner_map_raw(const ReducedPoint& rp, int n, const NormalChart& chart, const SectionSpec& spec);

/// largest circular gap of {j nu mod 2pi : 1 <= j <= n}
double ergodization_gap(int n, const SectionSpec& spec);

/// n(beta) = beta ln(1/mu) / (g0 t*), rounded to the nearest integer
int n_of_beta(double beta, double mu, const NormalChart& chart);

} // namespace adw
