/** \file flow.hpp
    \brief Symplectic integration of the model flow, tangent map, returns to phi2 = const.
*/
#pragma once
#include "adw/model.hpp"

namespace adw {

struct FlowSettings {
    int steps_per_return = 200;  ///< macro-steps per t*
    int order = 6;               ///< 2, 4, 6 or 8 (triple-jump composition)
    double p_box = 4.0;
    double A_box = 1.0;
};

/// process-wide defaults, changed only by the CLI before any work starts
FlowSettings& flow_settings();

struct FlowResult {
    PhasePoint endpoint;
    Mat6 jacobian = Mat6::Identity();
    double elapsed = 0;
    double energy_drift = 0;
};

struct SectionSpec {
    double phi2_0 = 0;
    double t_star = 0;
    double nu = 0;

    static SectionSpec make(const Frequency& fr, double phi2_0 = 0.0);
};

/// raw state (q, phi1, phi2, p, A1, A2), angles not wrapped
struct RawFlow {
    Vec6 z;
    Mat6 J;
};

/// integrate the unwrapped state; J propagated when with_tangent
RawFlow integrate_raw(const Vec6& z0, double t, const ModelParams& params, bool with_tangent,
                      const FlowSettings& fs = flow_settings());

FlowResult integrate(const PhasePoint& pt, double t, const ModelParams& params, double tol = 1e-10);
FlowResult variational_flow(const PhasePoint& pt, double t, const ModelParams& params);

/// n returns to the section (n < 0: backward). Escape box is centred on pt.A.
PhasePoint section_return(const PhasePoint& pt, const SectionSpec& spec, int n, const ModelParams& params);

/// canonical form for (q, phi1, phi2, p, A1, A2)
Mat6 symplectic_form();

} // namespace adw
