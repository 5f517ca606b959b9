/** \file splitting.hpp
    \brief First-order whisker geometry: separatrix, Melnikov splitting, heteroclinic curve.

    Conventions: dA = A^s - A^u, dp = p^s - p^u, alpha = -1/p0(q), so that
    dp = alpha w.dA and M = d(dp, dA)/d(q, phi) is the (symmetric) Hessian of S^s - S^u.
*/
#pragma once
#include "adw/model.hpp"
#include <functional>

namespace adw {

struct SeparatrixPoint {
    double t, q0, p0;
};

SeparatrixPoint separatrix_at(double t);
/// inverse of q0(t) = 4 atan(e^t), q in (0, 2pi)
double separatrix_time(double q);
double separatrix_momentum(double q);

/// int 2 sech^2(t) cos(a t) dt over R
double melnikov_I(double a);

struct MelnikovValue {
    double dp;
    Vec2 dA;
};

/// at the section q = pi
MelnikovValue melnikov(const Vec2& phi, const ModelParams& params);
/// at a general q in (0, 2pi)
MelnikovValue melnikov_at(double q, const Vec2& phi, const ModelParams& params);

struct SplittingData {
    double q_star = kPi;
    Vec2 phi_star = Vec2::Zero();
    double delta_p = 0;
    Vec2 delta_A = Vec2::Zero();
    Mat3 M_full = Mat3::Zero();
    Mat2 M_se = Mat2::Zero();
    double alpha_energy = 0;
};

/// throws ConditionError unless det M_se > 0 and the transversality conditions hold
SplittingData splitting_matrix(const Vec2& phi, const ModelParams& params, double q = kPi);
/// no checks
SplittingData splitting_matrix_raw(double q, const Vec2& phi, const ModelParams& params);

struct CurvePoint {
    double q, phi1;
};

class HeteroclinicCurve {
public:
    /// continuation of F(q, phi1, phi2_0, delta) = delta w_perp + dA = 0 from (pi, phi1_0)
    HeteroclinicCurve(const ModelParams& params, double phi1_0 = 0.0, double phi2_0 = 0.0);

    double delta_bar() const { return delta_bar_; }
    double phi2_0() const { return phi2_0_; }
    double phi1_0() const { return phi1_0_; }
    /// throws ContinuationError for |delta| >= delta_bar or Newton failure
    CurvePoint at(double delta) const;
    /// d(q, phi1)/d delta from the implicit function theorem
    Vec2 derivative(double delta) const;
    /// |dp_q| at delta = 0, the reference for the delta_bar cut
    double dpq0() const { return dpq0_; }
    /// residual |F| at a point
    double residual(double delta, const CurvePoint& c) const;

private:
    CurvePoint newton(double delta, CurvePoint seed, bool& ok) const;
    CurvePoint seed_for(double delta) const;

    ModelParams params_;
    double phi1_0_, phi2_0_;
    double delta_bar_ = 0, dpq0_ = 0;
    std::vector<std::pair<double, CurvePoint>> table_;
};

CurvePoint continue_heteroclinic(double delta, const ModelParams& params);

enum class Side { Stable, Unstable };

/// first-order graph point of the whisker of T(base_action); p fixed by the torus energy
PhasePoint whisker_point(const Vec2& base_action, Side side, double q, const Vec2& phi,
                         const ModelParams& params, double d_margin = 0.5);

} // namespace adw
