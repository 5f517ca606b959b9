#include "adw/config.hpp"
#include "adw/errors.hpp"
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

namespace adw {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object()) throw UsageError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw UsageError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
T get(const json& j, const char* key, T fallback)
{
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw UsageError(std::string("bad value for '") + key + "': " + e.what());
    }
}

Vec2 get_vec2(const json& j, const char* key, Vec2 fallback)
{
    if (!j.contains(key)) return fallback;
    auto v = get<std::vector<double>>(j, key, {});
    if (v.size() != 2) throw UsageError(std::string("'") + key + "' must have two entries");
    return Vec2(v[0], v[1]);
}

void require(bool ok, const std::string& msg)
{
    if (!ok) throw UsageError(msg);
}

json vec(const Vec4& v) { return json::array({v[0], v[1], v[2], v[3]}); }

json mat(const Mat4& m)
{
    json a = json::array();
    for (int i = 0; i < 4; ++i) a.push_back(json::array({m(i, 0), m(i, 1), m(i, 2), m(i, 3)}));
    return a;
}

json record_json(const HeteroclinicRecord& r)
{
    auto rp = [](const ReducedPoint& X) { return json::array({X.Q, X.theta, X.P, X.rho}); };
    return {{"k", r.k}, {"y", r.y}, {"y_next", r.y_next}, {"delta", r.delta}, {"l_minus", r.l_minus},
            {"l_plus", r.l_plus}, {"X", rp(r.X_k)}, {"X_prime", rp(r.X_k_prime)},
            {"newton_residual", r.newton_residual}};
}

json tj_json(const TransitionJacobian& t)
{
    return {{"A", mat(t.A)}, {"a", t.a}, {"D", t.D}, {"gamma", t.gamma}, {"row2_dev", t.row2_dev},
            {"col4_dev", t.col4_dev}, {"a11_margin", t.a11_margin}, {"D_margin", t.D_margin}};
}

} // namespace

PipelineConfig RunConfig::pipeline() const
{
    PipelineConfig p;
    p.params = params;
    p.N = N;
    p.delta_hat = delta_hat;
    p.delta_hat_fraction = delta_hat_fraction;
    p.pattern = pattern;
    p.p_exp = p_exp;
    p.beta = beta;
    p.x1 = x1;
    p.A0 = A0;
    p.phi1_0 = phi1_0;
    p.phi2_0 = phi2_0;
    p.budget_factor = budget_factor;
    return p;
}

void RunConfig::apply_settings() const
{
    flow_settings() = flow;
    chart_settings().degree = chart_degree;
}

RunConfig parse_config(const json& j)
{
    check_keys(j, {"model", "chain", "window", "integrator", "out"}, "config");
    RunConfig c;
    json m = j.value("model", json::object());
    check_keys(m, {"omega", "dioph_C", "dioph_tau", "gamma_cut", "coeffs", "mu"}, "model");
    Frequency fr(get_vec2(m, "omega", Frequency().omega), get<double>(m, "dioph_C", 0.5),
                 get<double>(m, "dioph_tau", 1.0));
    int gcut = get<int>(m, "gamma_cut", 3);
    require(gcut >= 1, "gamma_cut must be >= 1");
    Perturbation pert = Perturbation::uniform(gcut);
    if (m.contains("coeffs")) {
        std::vector<Mode> modes;
        for (const json& e : m.at("coeffs")) {
            check_keys(e, {"k1", "k2", "f"}, "coeffs entry");
            modes.push_back({get<int>(e, "k1", 0), get<int>(e, "k2", 0), get<double>(e, "f", 0.0)});
        }
        pert = Perturbation(gcut, modes);
    }
    double mu = get<double>(m, "mu", 1e-2);
    require(mu >= 0 && mu <= ModelParams::mu_max, "mu must lie in [0, mu_max]");
    c.params = ModelParams(mu, fr, pert);

    json ch = j.value("chain", json::object());
    check_keys(ch, {"N", "delta_hat", "delta_hat_fraction", "pattern", "A0", "phi1_0", "phi2_0", "budget_factor"},
               "chain");
    c.N = get<int>(ch, "N", c.N);
    require(c.N >= 2 && c.N <= 100000, "N must lie in [2, 100000]");
    c.delta_hat = get<double>(ch, "delta_hat", 0.0);
    c.delta_hat_fraction = get<double>(ch, "delta_hat_fraction", c.delta_hat_fraction);
    require(c.delta_hat_fraction > 0 && c.delta_hat_fraction <= 0.75, "delta_hat_fraction must lie in (0, 0.75]");
    c.pattern = get<std::vector<int>>(ch, "pattern", {});
    require(c.pattern.empty() || static_cast<int>(c.pattern.size()) == c.N - 1, "pattern length must be N-1");
    for (int s : c.pattern) require(s >= -1 && s <= 1, "pattern entries must be -1, 0 or 1");
    c.A0 = get_vec2(ch, "A0", c.A0);
    c.phi1_0 = get<double>(ch, "phi1_0", 0.0);
    c.phi2_0 = get<double>(ch, "phi2_0", 0.0);
    c.budget_factor = get<int>(ch, "budget_factor", c.budget_factor);
    require(c.budget_factor >= 1, "budget_factor must be >= 1");

    json w = j.value("window", json::object());
    check_keys(w, {"p_exp", "beta", "x1", "b_init"}, "window");
    c.p_exp = get<int>(w, "p_exp", c.p_exp);
    require(c.p_exp >= 1 && c.p_exp <= 20, "p_exp must lie in [1, 20]");
    c.beta = get<double>(w, "beta", c.beta);
    require(c.beta > 0, "beta must be positive");
    c.x1 = get<double>(w, "x1", get<double>(w, "b_init", c.x1));
    require(c.x1 > 0, "x1 must be positive");

    json in = j.value("integrator", json::object());
    check_keys(in, {"steps_per_return", "order", "p_box", "A_box", "chart_degree"}, "integrator");
    c.flow.steps_per_return = get<int>(in, "steps_per_return", c.flow.steps_per_return);
    require(c.flow.steps_per_return >= 10, "steps_per_return must be >= 10");
    c.flow.order = get<int>(in, "order", c.flow.order);
    require(c.flow.order == 2 || c.flow.order == 4 || c.flow.order == 6 || c.flow.order == 8,
            "order must be 2, 4, 6 or 8");
    c.flow.p_box = get<double>(in, "p_box", c.flow.p_box);
    c.flow.A_box = get<double>(in, "A_box", c.flow.A_box);
    require(c.flow.p_box > 2 && c.flow.A_box > 0, "escape box too small");
    c.chart_degree = get<int>(in, "chart_degree", c.chart_degree);
    require(c.chart_degree >= 2 && c.chart_degree <= 20, "chart_degree must lie in [2, 20]");

    c.out_dir = get<std::string>(j, "out", c.out_dir);
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw UsageError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

json to_json(const RunConfig& c)
{
    json coeffs = json::array();
    for (const Mode& md : c.params.pert.modes()) coeffs.push_back({{"k1", md.k1}, {"k2", md.k2}, {"f", md.f}});
    const Frequency& fr = c.params.freq;
    return {{"model",
             {{"omega", {fr.omega[0], fr.omega[1]}}, {"dioph_C", fr.dioph_C}, {"dioph_tau", fr.dioph_tau},
              {"gamma_cut", c.params.pert.gamma_cut()}, {"coeffs", coeffs}, {"mu", c.params.mu}}},
            {"chain",
             {{"N", c.N}, {"delta_hat", c.delta_hat}, {"delta_hat_fraction", c.delta_hat_fraction},
              {"pattern", c.pattern}, {"A0", {c.A0[0], c.A0[1]}}, {"phi1_0", c.phi1_0}, {"phi2_0", c.phi2_0},
              {"budget_factor", c.budget_factor}}},
            {"window", {{"p_exp", c.p_exp}, {"beta", c.beta}, {"x1", c.x1}}},
            {"integrator",
             {{"steps_per_return", c.flow.steps_per_return}, {"order", c.flow.order}, {"p_box", c.flow.p_box},
              {"A_box", c.flow.A_box}, {"chart_degree", c.chart_degree}}},
            {"out", c.out_dir}};
}

std::string fmt17(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

CsvWriter::CsvWriter(std::ostream& os, const std::vector<std::string>& header) : os_(os), width_(header.size())
{
    for (size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << "\n";
}

void CsvWriter::row(const std::vector<double>& values)
{
    if (values.size() != width_) throw UsageError("csv row width mismatch");
    for (size_t i = 0; i < values.size(); ++i) os_ << (i ? "," : "") << fmt17(values[i]);
    os_ << "\n";
}

json to_json(const AlignmentCertificate& c)
{
    return {{"chi_a", c.chi_a}, {"chi_c", c.chi_c}, {"chi_c_coarse", c.chi_c_coarse}, {"passed", c.passed},
            {"margin", c.margin}, {"reason", c.reason}, {"M", mat(c.M_int)}, {"N", mat(c.N_int)},
            {"M_inv", mat(c.M_inv)}};
}

json to_json(const DiffusionReport& r)
{
    json links = json::array();
    for (const LinkReport& L : r.links)
        links.push_back({{"k", L.k}, {"n", L.n}, {"record", record_json(L.record)}, {"jacobian", tj_json(L.tj)},
                         {"certificate", to_json(L.cert)}, {"chi1", L.chi1}, {"chi2", L.chi2}, {"C2", L.C2},
                         {"delta2_residual", L.delta2_residual}, {"Delta1", L.Delta1}, {"Delta2", 0.0},
                         {"Delta3", L.Delta3}, {"Delta4", L.Delta4}, {"gamma_k", L.gamma_k}});
    json nodes = json::array();
    for (const ChainNode& nd : r.chain.nodes)
        nodes.push_back({{"y", nd.y}, {"A", {nd.action[0], nd.action[1]}}, {"y_ref", nd.y_ref},
                         {"halfwidth", nd.interval_halfwidth}, {"e_k", nd.e_k}});
    json windows = json::array();
    for (size_t k = 0; k < r.B.size(); ++k) {
        Vec4 pk = to_double(r.p[k]);
        windows.push_back({{"k", k}, {"center", vec(pk)}, {"B", mat(to_double(r.B[k]))},
                           {"sigma", static_cast<double>(r.centers.sigma[k])},
                           {"delta", static_cast<double>(r.centers.delta[k])}, {"rule", r.centers.rule_used[k]}});
    }
    json torsion = {{"x", r.torsion.x}, {"b4", r.torsion.b4}, {"C", r.torsion.C_rec},
                    {"b", r.torsion.b_freq}, {"K_margin", r.torsion.K_margin}};
    return {{"mu", r.config.params.mu}, {"N", r.config.N}, {"p_exp", r.config.p_exp}, {"beta", r.config.beta},
            {"delta_hat", r.chain.delta_hat}, {"delta_bar", r.delta_bar}, {"n_beta", r.n_beta}, {"g0", r.g0},
            {"t_star", r.t_star}, {"nu", r.nu}, {"n_steps", r.n_steps()}, {"total_returns", r.total_returns},
            {"total_time", r.total_time}, {"chi1", r.chi1}, {"chi2", r.chi2}, {"drift", r.drift},
            {"n_without_elasticity", r.n_without_elasticity}, {"all_passed", r.all_passed}, {"nodes", nodes},
            {"terminal", record_json(r.terminal)}, {"links", links}, {"windows", windows}, {"torsion", torsion}};
}

json to_json(const ShadowResult& s)
{
    json cube = json::array(), red = json::array();
    for (const Vec4& v : s.cube_points) cube.push_back(vec(v));
    for (const Vec4& v : s.reduced_points) red.push_back(vec(v));
    const PhasePoint& z = s.seed;
    return {{"seed", {{"q", z.q}, {"phi", {z.phi[0], z.phi[1]}}, {"p", z.p}, {"A", {z.A[0], z.A[1]}}}},
            {"cube_points", cube}, {"reduced_points", red}, {"drift_y", s.drift_y},
            {"expected_drift", s.expected_drift}, {"slack", s.slack}, {"iterations", s.iterations},
            {"residual", s.residual}};
}

Window window_from_json(const json& j)
{
    check_keys(j, {"center", "matrix", "correction"}, "window");
    if (j.contains("correction")) throw UsageError("window corrections are not supported from JSON");
    auto c = get<std::vector<double>>(j, "center", {0, 0, 0, 0});
    require(c.size() == 4, "window center must have 4 entries");
    auto m = get<std::vector<std::vector<double>>>(j, "matrix", {});
    require(m.size() == 4, "window matrix must be 4x4");
    Mat4 W;
    for (int i = 0; i < 4; ++i) {
        require(m[i].size() == 4, "window matrix must be 4x4");
        for (int k = 0; k < 4; ++k) W(i, k) = m[i][k];
    }
    return Window(Vec4(c[0], c[1], c[2], c[3]), W);
}

} // namespace adw
