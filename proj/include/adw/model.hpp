/** \file    model.hpp
    \brief   Hamiltonian H = w.A + p^2/2 + (cos q - 1) + mu (1 - cos q) f(phi)
*/
#pragma once
#include <Eigen/Dense>
#include <array>
#include <vector>

namespace adw {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kPi    = 3.141592653589793238462643383280;

/// angle in [0, 2pi)
double wrap_angle(double x);
/// angle in [-pi, pi)
double wrap_centered(double x);

struct Frequency {
    Vec2 omega{1.0, 1.6180339887498949};
    double dioph_C = 0.1;
    double dioph_tau = 1.0;

    Frequency() = default;
    Frequency(Vec2 w, double C, double tau);
    /// omega rotated by +pi/2: (-w2, w1)
    Vec2 perp() const { return Vec2(-omega[1], omega[0]); }
};

struct Mode {
    int k1, k2;
    double f;
};

/// Even trigonometric polynomial; both k and -k are stored.
class Perturbation {
public:
    Perturbation() = default;
    /// modes may be given with or without mirrors; mirrors are added and checked
    Perturbation(int gamma_cut, const std::vector<Mode>& modes);

    int gamma_cut() const { return gamma_cut_; }
    const std::vector<Mode>& modes() const { return modes_; }

    /// f_k == 1 on every k != 0 with |k1|+|k2| <= gamma_cut
    static Perturbation uniform(int gamma_cut, double fk = 1.0);

private:
    int gamma_cut_ = 0;
    std::vector<Mode> modes_;
};

struct PerturbationValue {
    double value;
    Vec2 grad;
    Mat2 hess;
};

struct ModelParams {
    double mu = 1e-3;
    Frequency freq;
    Perturbation pert;

    static constexpr double mu_max = 0.1;
    ModelParams() = default;
    ModelParams(double mu_, Frequency fr, Perturbation pe);
    /// omega=(1, golden), tau=1, Gamma=3, f_k=1
    static ModelParams defaults(double mu);
    ModelParams with_mu(double m) const { ModelParams c = *this; c.mu = m; return c; }
};

struct PhasePoint {
    double q = 0;
    Vec2 phi = Vec2::Zero();
    double p = 0;
    Vec2 A = Vec2::Zero();

    PhasePoint() = default;
    PhasePoint(double q_, Vec2 phi_, double p_, Vec2 A_) : q(q_), phi(phi_), p(p_), A(A_) {}

    /// (q, phi1, phi2, p, A1, A2)
    Vec6 to_vec() const;
    static PhasePoint from_vec(const Vec6& v);
    PhasePoint wrapped() const;
};

PerturbationValue perturbation_eval(const Vec2& phi, const Perturbation& pert);

double eval_hamiltonian(const PhasePoint& pt, const ModelParams& params);

Vec6 vector_field(const PhasePoint& pt, const ModelParams& params);

/// min over 0<|k|_1<=k_max of |w.k| |k|_1^tau
double diophantine_margin(const Frequency& freq, int k_max);

} // namespace adw
