/** \file config.hpp
    \brief Run configuration (JSON), fixed-precision CSV and JSON report writers.
*/
#pragma once
#include "adw/diffusion.hpp"
#include <iosfwd>
#include <json.hpp>

namespace adw {

struct RunConfig {
    ModelParams params = ModelParams::defaults(1e-2);
    int N = 4;
    double delta_hat = 0;
    double delta_hat_fraction = 0.75;
    std::vector<int> pattern;
    int p_exp = 6;
    double beta = 30;
    double x1 = 1.0;
    Vec2 A0 = Vec2::Zero();
    double phi1_0 = 0, phi2_0 = 0;
    int budget_factor = 10;
    FlowSettings flow;
    int chart_degree = 12;
    std::string out_dir = ".";

    PipelineConfig pipeline() const;
    /// installs flow and chart settings process-wide
    void apply_settings() const;
};

/// unknown keys and out-of-range values raise UsageError
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& cfg);

/// 17 significant digits
std::string fmt17(double x);

class CsvWriter {
public:
    CsvWriter(std::ostream& os, const std::vector<std::string>& header);
    void row(const std::vector<double>& values);

private:
    std::ostream& os_;
    size_t width_;
};

nlohmann::json to_json(const AlignmentCertificate& cert);
nlohmann::json to_json(const DiffusionReport& rep);
nlohmann::json to_json(const ShadowResult& res);

/// window from {"center": [4], "matrix": [[4]x4]}; a "correction" key is rejected
Window window_from_json(const nlohmann::json& j);

} // namespace adw
