#include "adw/config.hpp"
#include "adw/errors.hpp"
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

using namespace adw;
using nlohmann::json;

namespace {

struct Options {
    std::string config, out;
    double mu = -1;
    int N = -1;
    int grid = 32;
    double beta = -1;
    int p_exp = -1;
    std::string w1, w2;
};

RunConfig resolve(const Options& o)
{
    RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
    if (!o.out.empty()) c.out_dir = o.out;
    if (o.mu >= 0) {
        if (!(o.mu <= ModelParams::mu_max)) throw UsageError("--mu must lie in [0, mu_max]");
        c.params = c.params.with_mu(o.mu);
    }
    if (o.N >= 0) {
        if (o.N < 2) throw UsageError("--N must be at least 2");
        c.N = o.N;
        if (!c.pattern.empty() && static_cast<int>(c.pattern.size()) != c.N - 1)
            throw UsageError("--N conflicts with the configured pattern length");
    }
    if (o.beta >= 0) c.beta = o.beta;
    if (o.p_exp >= 0) c.p_exp = o.p_exp;
    c.apply_settings();
    return c;
}

/// tabular output goes to DIR/name when --out is given, stdout otherwise
struct Sink {
    std::unique_ptr<std::ofstream> file;
    std::ostream* os = &std::cout;

    Sink(const Options& o, const std::string& name)
    {
        if (o.out.empty()) return;
        std::filesystem::create_directories(o.out);
        file = std::make_unique<std::ofstream>(std::filesystem::path(o.out) / name);
        if (!*file) throw UsageError("cannot write to '" + o.out + "'");
        os = file.get();
    }
};

void write_json(const std::filesystem::path& path, const json& j)
{
    std::ofstream f(path);
    if (!f) throw UsageError("cannot write '" + path.string() + "'");
    f << j.dump(2) << "\n";
}

int cmd_melnikov(const Options& o)
{
    RunConfig c = resolve(o);
    if (o.grid < 2) throw UsageError("--grid must be at least 2");
    Sink s(o, "melnikov.csv");
    CsvWriter csv(*s.os, {"phi1", "phi2", "dp", "dA1", "dA2", "detMse"});
    for (int i = 0; i < o.grid; ++i)
        for (int j = 0; j < o.grid; ++j) {
            Vec2 phi(kTwoPi * i / o.grid, kTwoPi * j / o.grid);
            SplittingData d = splitting_matrix_raw(kPi, phi, c.params);
            csv.row({phi[0], phi[1], d.delta_p, d.delta_A[0], d.delta_A[1], d.M_se.determinant()});
        }
    return 0;
}

int cmd_chain(const Options& o)
{
    RunConfig c = resolve(o);
    PipelineConfig pc = c.pipeline();
    HeteroclinicCurve curve(c.params, pc.phi1_0, pc.phi2_0);
    double dh = pc.delta_hat > 0 ? pc.delta_hat : pc.delta_hat_fraction * curve.delta_bar();
    std::vector<int> pattern = pc.pattern.empty() ? std::vector<int>(pc.N - 1, 1) : pc.pattern;
    TransitionChain ch = build_esc(pc.A0, dh, pattern, curve, c.params);
    Sink s(o, "chain.csv");
    CsvWriter csv(*s.os, {"k", "y", "A1", "A2", "delta_k", "E_lo", "E_hi"});
    for (int k = 0; k < ch.size(); ++k) {
        const ChainNode& nd = ch.nodes[k];
        double step = k + 1 < ch.size() ? ch.steps[k] : 0.0;
        csv.row({double(k), nd.y, nd.action[0], nd.action[1], step, nd.y_ref - nd.interval_halfwidth,
                 nd.y_ref + nd.interval_halfwidth});
    }
    return 0;
}

json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw UsageError("'" + path + "' is not valid JSON: " + e.what());
    }
}

int cmd_align(const Options& o)
{
    Window a = window_from_json(read_json(o.w1)), b = window_from_json(read_json(o.w2));
    AlignmentCertificate cert = align_affine(a, b);
    std::cout << "chi_a=" << fmt17(cert.chi_a) << "\n";
    std::cout << "passed=" << (cert.passed ? "true" : "false") << "\n";
    if (!o.out.empty()) {
        std::filesystem::create_directories(o.out);
        write_json(std::filesystem::path(o.out) / "align.json", to_json(cert));
    }
    if (!cert.passed) {
        std::cerr << "alignment: " << cert.reason << "\n";
        return 1;
    }
    return 0;
}

int cmd_torsion(const Options& o)
{
    RunConfig c = resolve(o);
    if (!(c.params.mu > 0)) throw UsageError("torsion needs mu > 0");
    SectionSpec spec = SectionSpec::make(c.params.freq, c.phi2_0);
    HeteroclinicCurve curve(c.params, c.phi1_0, c.phi2_0);
    HeteroclinicRecord rec = heteroclinic_record(0, 0.0, 0.0, c.A0, curve, c.params, spec);
    TransitionJacobian tj = transition_jacobian(rec, c.params, spec);
    TorsionSequence seq = torsion_sequence(c.N, c.params.mu, c.x1, tj.gamma);
    if (c.beta < 6 + 4 * c.p_exp)
        std::cerr << "warning: beta below 6 + 4p, norms are computed with beta = " << 6 + 4 * c.p_exp << "\n";
    TorsionCertificate tc = torsion_certificate(seq, {tj}, c.p_exp, std::max(c.beta, 6.0 + 4 * c.p_exp));
    Sink s(o, "torsion.csv");
    // the last window has no outgoing link, its norm is written as nan
    CsvWriter csv(*s.os, {"k", "x_k", "b4_k", "norm_k"});
    for (int k = 0; k < seq.N; ++k)
        csv.row({double(k + 1), seq.x[k], seq.b4[k], k + 1 < seq.N ? tc.norms[k] : std::nan("")});
    return 0;
}

int cmd_diffuse(const Options& o)
{
    RunConfig c = resolve(o);
    DiffusionReport rep = run_pipeline(c.pipeline());
    std::filesystem::path dir(c.out_dir);
    std::filesystem::create_directories(dir);
    json j = to_json(rep);
    j["config"] = to_json(c);
    j["config"].erase("out");
    write_json(dir / "report.json", j);
    std::ofstream f(dir / "links.csv");
    CsvWriter csv(f, {"k", "chi_a", "chi_c", "n_k", "y_k"});
    for (const LinkReport& L : rep.links)
        csv.row({double(L.k + 1), L.cert.chi_a, L.cert.chi_c, double(L.n), rep.chain.nodes[L.k].y});
    std::cout << "T=" << fmt17(rep.total_time) << " returns=" << fmt17(rep.total_returns)
              << " drift=" << fmt17(rep.drift) << "\n";
    return 0;
}

int cmd_verify(const Options& o)
{
    RunConfig c = resolve(o);
    DiffusionReport rep = run_pipeline(c.pipeline());
    ShadowResult sh = shadow_verify(rep);
    std::filesystem::path dir(c.out_dir);
    std::filesystem::create_directories(dir);
    write_json(dir / "shadow.json", to_json(sh));
    std::cout << "drift=" << fmt17(sh.drift_y) << " expected=" << fmt17(sh.expected_drift)
              << " slack=" << fmt17(sh.slack) << "\n";
    if (std::abs(sh.drift_y - sh.expected_drift) > sh.slack) {
        std::cerr << "shadowing: drift outside the interval slack\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Arnold diffusion by windows: splitting, chains, alignment, torsion, drift"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sc) {
        sc->add_option("--config", o.config, "JSON run configuration");
        sc->add_option("--out", o.out, "output directory");
        sc->add_option("--mu", o.mu, "perturbation size");
    };
    auto* mel = app.add_subcommand("melnikov", "splitting function and matrix on a phase grid");
    common(mel);
    mel->add_option("--grid", o.grid, "grid points per angle");
    auto* chn = app.add_subcommand("chain", "equally spaced transition chain");
    common(chn);
    chn->add_option("--N", o.N, "number of tori");
    auto* aln = app.add_subcommand("align", "affine alignment certificate of two windows");
    aln->add_option("--w1", o.w1, "first window JSON")->required();
    aln->add_option("--w2", o.w2, "second window JSON")->required();
    aln->add_option("--out", o.out, "output directory");
    auto* tor = app.add_subcommand("torsion", "simulated torsion sequence");
    common(tor);
    tor->add_option("--N", o.N, "number of windows");
    tor->add_option("--p", o.p_exp, "window exponent p");
    tor->add_option("--beta", o.beta, "beta");
    auto* dif = app.add_subcommand("diffuse", "full pipeline, report JSON and per-link CSV");
    common(dif);
    dif->add_option("--N", o.N, "number of tori");
    dif->add_option("--p", o.p_exp, "window exponent p");
    dif->add_option("--beta", o.beta, "beta");
    auto* ver = app.add_subcommand("verify", "pipeline plus shadowing witness");
    common(ver);
    ver->add_option("--N", o.N, "number of tori");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    try {
        if (*mel) return cmd_melnikov(o);
        if (*chn) return cmd_chain(o);
        if (*aln) return cmd_align(o);
        if (*tor) return cmd_torsion(o);
        if (*dif) return cmd_diffuse(o);
        if (*ver) return cmd_verify(o);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
