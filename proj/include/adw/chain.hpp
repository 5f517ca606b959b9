/** \file chain.hpp
    \brief Transition chains on the isoenergy line A(y) = A0 + y w_perp, elastic intervals.
*/
#pragma once
#include "adw/normal_form.hpp"
#include "adw/splitting.hpp"
#include <functional>

namespace adw {

struct ChainNode {
    double y = 0;
    Vec2 action = Vec2::Zero();
    double interval_halfwidth = 0;  ///< C1 mu
    double e_k = 0;
    double y_ref = 0;               ///< centre of E_k (the ESC value)
};

enum class ChainKind { ESC, EEC };

struct TransitionChain {
    std::vector<ChainNode> nodes;
    std::vector<double> steps;  ///< delta^k = y_{k+1} - y_k
    ChainKind kind = ChainKind::ESC;
    Vec2 A0 = Vec2::Zero();
    Vec2 omega_perp = Vec2::Zero();
    double delta_hat = 0;
    double delta_bar = 0;
    double C1 = 0;
    std::vector<int> pattern;

    int size() const { return static_cast<int>(nodes.size()); }
    Vec2 action(double y) const { return A0 + y * omega_perp; }
    void set_y(int k, double y);
};

/// C1 = delta_bar / (16 mu), e_k = C1 mu / 2
TransitionChain build_esc(const Vec2& A0, double delta_hat, const std::vector<int>& pattern,
                          const HeteroclinicCurve& curve, const ModelParams& params);

struct ThetaPair {
    double theta, theta_prime;
};

/// theta_k(y) = phi1(delta) - l_minus nu, theta'_k(y) = phi1(delta) + l_plus nu, delta = y_{k+1} - y
ThetaPair theta_functions(double y, int k, const TransitionChain& chain, int l_minus, int l_plus,
                          const HeteroclinicCurve& curve, const SectionSpec& spec);

struct ElasticResult {
    double y_tilde;
    double residual;         ///< |F(y_tilde)|
    double bracket_lo, bracket_hi;
    double slope;            ///< dF/dy at the root
};

/// root of F(y) = [theta'(y) - target] mod 2pi on (y_k - e_k, y_k + e_k) by bisection + Newton;
/// updates the chain node and re-verifies |delta| <= delta_bar
ElasticResult elastic_adjust(int k, double theta_target, TransitionChain& chain,
                             const std::function<double(double)>& theta_prime);

/// finds a sign-change bracket of F inside (lo, hi); false if the target is not in the image
bool image_bracket(const std::function<double(double)>& F, double lo, double hi, double y0,
                   double& a, double& b, int samples = 64);

} // namespace adw
