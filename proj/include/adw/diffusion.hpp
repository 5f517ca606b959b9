/** \file diffusion.hpp
    \brief Full pipeline: records, torsion windows, centres, elastic Delta2 nullification,
    certificates, remainder budget, drift time and a small-N shadowing witness.
*/
#pragma once
#include "adw/windows.hpp"

namespace adw {

struct PipelineConfig {
    ModelParams params = ModelParams::defaults(1e-2);
    int N = 4;
    double delta_hat = 0;           ///< absolute step; <= 0 means delta_hat_fraction * delta_bar
    double delta_hat_fraction = 0.75;
    std::vector<int> pattern;       ///< length N-1; empty means all +1
    int p_exp = 6;
    double beta = 30;
    double x1 = 1.0;
    Vec2 A0 = Vec2::Zero();
    double phi1_0 = 0, phi2_0 = 0;
    int budget_factor = 10;         ///< ergodization budget in units of n(beta)
};

struct CenterChoice {
    std::vector<Real> sigma, delta;
    std::vector<std::string> rule_used;
};

struct LinkReport {
    int k = 0;
    int n = 0;                      ///< n_{k+1}
    HeteroclinicRecord record;
    TransitionJacobian tj;
    AlignmentCertificate cert;
    double chi1 = 0, chi2 = 0;
    double C2 = 0;                  ///< fitted Psi-remainder constant
    double delta2_residual = 0;     ///< |F(y_tilde)| measured with the refined record
    double Delta1 = 0, Delta3 = 0, Delta4 = 0;
    double gamma_k = 0;             ///< |M_k^-1|_inf
    MatR4 MinvN, Minv;
    VecR4 MinvDelta;
};

struct DiffusionReport {
    PipelineConfig config;
    TransitionChain chain;
    std::vector<LinkReport> links;  ///< N-1 links
    HeteroclinicRecord terminal;    ///< homoclinic record of the last torus
    TransitionJacobian terminal_tj;
    TorsionSequence torsion;
    CenterChoice centers;
    std::vector<MatR4> B;           ///< window matrices B_k
    std::vector<VecR4> p;           ///< window centres p_k
    int n_beta = 0;
    double g0 = 1, t_star = 0, nu = 0;
    double total_returns = 0;       ///< sum (n_{k+1} + l- + l+)
    double total_time = 0;          ///< total_returns * t*
    double chi1 = 0, chi2 = 0;
    double drift = 0;               ///< |y_N - y_1|
    double delta_bar = 0;
    double n_without_elasticity = 0;
    bool all_passed = false;

    std::vector<int> n_steps() const;
};

/// backward recursion for (sigma_k, delta_k) nullifying Delta1 and Delta4; uses the actual L^-n
CenterChoice choose_centers(const std::vector<HeteroclinicRecord>& recs, const std::vector<TransitionJacobian>& tjs,
                            const std::vector<int>& n_steps, const NormalChart& chart);

struct Delta2Result {
    int n = 0;
    double y_tilde = 0;
    double residual = 0;
    HeteroclinicRecord record;
};

/// picks n_{k+1} >= n(beta) with theta_{k+1} - n nu in the image of theta'_k, then moves y_k
Delta2Result nullify_delta2(int k, TransitionChain& chain, const HeteroclinicRecord& next,
                            const HeteroclinicCurve& curve, const ModelParams& params, const SectionSpec& spec,
                            int n_beta, int budget);

/// chi1, chi2 of one link; fills link.chi1, link.chi2 and applies them to link.cert
void remainder_budget(LinkReport& link, const MatR4& B_k, const MatR4& B_k1, const VecR4& p_k1,
                      const VecR4& xi0, const NormalChart& chart_k1, int p_exp, double mu);

/// throws the stage error of the first failing stage
DiffusionReport run_pipeline(const PipelineConfig& cfg);

struct ShadowResult {
    PhasePoint seed;
    std::vector<Vec4> cube_points;     ///< x^k in the cube of window k
    std::vector<Vec4> reduced_points;  ///< B_k(x^k) in the chart of torus k
    double drift_y = 0;                ///< measured along omega_perp
    double expected_drift = 0;
    double slack = 0;
    int iterations = 0;
    double residual = 0;
};

/// fixed point of the crossing maps (h_k, v_{k+1}) = T_k(h_{k+1}, v_k) with v_1 = 0, h_N = 0
ShadowResult shadow_verify(const DiffusionReport& report, int max_nodes = 5);

} // namespace adw
