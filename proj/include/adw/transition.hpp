/** \file transition.hpp
    \brief Outer map Psi between the neighbourhoods of consecutive tori, its Jacobian and the stable graph.
*/
#pragma once
#include "adw/chain.hpp"
#include <functional>

namespace adw {

struct HeteroclinicRecord {
    int k = 0;
    double y = 0, y_next = 0, delta = 0;
    PhasePoint z_k;
    int l_minus = 1, l_plus = 1;
    ReducedPoint X_k, X_k_prime;
    double theta_first = 0, theta_prime_first = 0;  ///< first-order angles phi1(delta) -+ l nu
    NormalChart chart_k, chart_k1;
    double newton_residual = 0;
    bool refined = false;

    /// total flow time of one Psi evaluation
    double flight_time() const { return (l_minus + l_plus) * chart_k.t_star; }
};

struct RecordSettings {
    int return_budget = 12;
    bool refine = true;
};

HeteroclinicRecord heteroclinic_record(int k, double y, double y_next, const Vec2& A0,
                                       const HeteroclinicCurve& curve, const ModelParams& params,
                                       const SectionSpec& spec, const RecordSettings& rs = {});

/// Psi(X); angle returned unwrapped relative to X.theta + (l- + l+) nu
Vec4 psi_map(const HeteroclinicRecord& rec, const Vec4& X, const ModelParams& params, const SectionSpec& spec);

struct TransitionJacobian {
    Mat4 A = Mat4::Identity();       ///< measured
    Mat4 A_proj = Mat4::Identity();  ///< row 2 and column 4 set to their exact values
    double a = 0;
    Mat4 a_ij = Mat4::Zero();        ///< (A_proj - A0) / mu
    double D = 0;
    double gamma = 0;
    double mu = 0;
    double row2_dev = 0, col4_dev = 0;
    double offpattern_max = 0;       ///< only meaningful at mu = 0
    double a11_margin = 0, D_margin = 0;

    double f1() const { return a + mu * a_ij(0, 2); }
    double f2() const { return 1.0 + mu * a_ij(3, 3); }
    double delta_mu() const { return f1() * f2() - mu * mu * a_ij(0, 3) * a_ij(2, 3); }
};

/// A0 pattern for a given a
Mat4 unperturbed_pattern(double a);

TransitionJacobian transition_jacobian(const HeteroclinicRecord& rec, const ModelParams& params,
                                       const SectionSpec& spec);

/// Jacobian of Psi at an arbitrary point (variational flow + chart derivatives)
Mat4 psi_jacobian(const HeteroclinicRecord& rec, const Vec4& X, const ModelParams& params, const SectionSpec& spec);

struct TransitionMapValue {
    Vec4 image;
    Vec4 remainder;
};

TransitionMapValue transition_map(const HeteroclinicRecord& rec, const TransitionJacobian& tj, const Vec4& xi,
                                  const ModelParams& params, const SectionSpec& spec);

struct StableGraph {
    Mat2 M_N = Mat2::Zero();
    Mat2 h = Mat2::Zero();
    double Q0 = 0, theta0 = 0, spacing = 1e-3;
    std::array<std::array<double, 5>, 5> P_grid{}, rho_grid{};
    std::function<double(double, double)> P_fun, rho_fun;
};

StableGraph stable_graph(const HeteroclinicRecord& rec, const TransitionJacobian& tj, const ModelParams& params,
                         const SectionSpec& spec, double spacing = 1e-3);

} // namespace adw
