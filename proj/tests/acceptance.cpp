// One PASS/FAIL line per acceptance criterion, followed by the measured numbers.
#include "adw/diffusion.hpp"
#include "adw/errors.hpp"
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <string>

using namespace adw;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail)
{
    std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string f(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string f(const char* fmt, ...)
{
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct LinkData {
    HeteroclinicRecord rec;
    TransitionJacobian tj;
};

LinkData default_link(double mu)
{
    ModelParams prm = ModelParams::defaults(mu);
    SectionSpec spec = SectionSpec::make(prm.freq);
    HeteroclinicCurve curve(prm);
    LinkData d;
    d.rec = heteroclinic_record(0, 0.0, 0.75 * curve.delta_bar(), Vec2::Zero(), curve, prm, spec);
    d.tj = transition_jacobian(d.rec, prm, spec);
    return d;
}

void alignment_soundness()
{
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240611);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> ls(std::log(0.5), std::log(4.0));
    int n_pass = 0, n_fail = 0, sound_pass = 0, sound_fail = 0, band = 0;
    for (int t = 0; t < 1000; ++t) {
        double s = std::exp(ls(rng));
        Mat4 W1 = Vec4(s, s, 1 / s, 1 / s).asDiagonal();
        Mat4 W2 = Mat4::Identity();
        Vec4 c2;
        for (int i = 0; i < 4; ++i) {
            c2[i] = 0.2 * g(rng);
            for (int j = 0; j < 4; ++j) {
                W1(i, j) += 0.15 * g(rng);
                W2(i, j) += 0.15 * g(rng);
            }
        }
        Window w1(Vec4::Zero(), W1), w2(c2, W2);
        AlignmentCertificate c = align_affine(w1, w2);
        if (c.chi_a < 0.95) {
            ++n_pass;
            if (align_oracle(w1, w2, 5).passed) ++sound_pass;
        } else if (c.chi_a > 1.05) {
            ++n_fail;
            if (!align_oracle(w1, w2, 5).passed) ++sound_fail;
        } else {
            ++band;
        }
    }
    double dt = seconds_since(t0);
    bool ok = n_pass > 0 && n_fail > 0 && sound_pass == n_pass && sound_fail == n_fail && dt < 60;
    report(1, ok, f("pass-side %d/%d confirmed, fail-side %d/%d confirmed, %d in the 0.95..1.05 band, %.1f s",
                    sound_pass, n_pass, sound_fail, n_fail, band, dt));
}

void simulated_torsion()
{
    auto t0 = std::chrono::steady_clock::now();
    const int N = 1000;
    const double mu = 1e-3;
    LinkData d = default_link(mu);
    TorsionSequence seq = torsion_sequence(N, mu, 1.0, d.tj.gamma);
    TorsionCertificate tc = torsion_certificate(seq, {d.tj}, 6, 30);
    bool positive = true;
    double err_literal = 0, err_shifted = 0;
    int first_bad = -1;
    for (int k = 1; k <= N; ++k) {
        double x = seq.x[k - 1];
        positive = positive && x > 0;
        double lit = std::cos(k * mu * seq.b_freq / 2), sh = std::cos((k - 1) * seq.alpha);
        double el = std::abs(x - lit) / std::abs(lit), es = std::abs(x - sh) / std::abs(sh);
        if (el > 1e-6 && first_bad < 0) first_bad = k;
        err_literal = std::max(err_literal, el);
        err_shifted = std::max(err_shifted, es);
    }
    double ratio = seq.x[N - 1] / seq.x[0], target = kPi / (2 * N);
    double b2 = seq.b_freq * seq.b_freq;
    double K = tc.K_measured;
    bool norm_ok = tc.max_norm <= 1 - K * mu * mu + 1e-15;
    bool K_ok = std::abs(K / (b2 / 4) - 1) <= 0.10;
    bool ratio_ok = std::abs(ratio / target - 1) <= 0.05;
    double dt = seconds_since(t0);
    bool ok = positive && err_literal <= 1e-6 && ratio_ok && norm_ok && K_ok && dt < 60;
    report(2, ok,
           f("x_k>0 %s; cos(k mu b/2) max rel err %.3g (first above 1e-6 at k=%d), cos((k-1) alpha) max rel err "
             "%.3g; x_N/x_1 %.6g vs pi/2N %.6g; max norm %.12f; K %.6g vs b^2/4 %.6g (b^2/8 %.6g); %.1f s",
             positive ? "yes" : "no", err_literal, first_bad, err_shifted, ratio, target, tc.max_norm, K, b2 / 4,
             b2 / 8, dt));
}

void melnikov_checks()
{
    bool ok = true;
    std::string det;
    for (double a : {0.5, 1.0, 3.0}) {
        auto integrand = [a](double t) { double c = 1 / std::cosh(t); return 4 * c * c * std::cos(a * t); };
        double err_est = 0;
        double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, 60.0, 20, 1e-15,
                                                                                 &err_est);
        double rel = std::abs(q - melnikov_I(a)) / std::abs(melnikov_I(a));
        ok = ok && rel < 1e-8;
        det += f("a=%g rel %.2e; ", a, rel);
    }
    ModelParams prm = ModelParams::defaults(1e-3);
    double dM = 0;
    try {
        dM = splitting_matrix(Vec2::Zero(), prm).M_se.determinant();
    } catch (const DomainError&) {
        dM = -1;
    }
    MelnikovValue m0 = melnikov(Vec2::Zero(), prm);
    double grad = std::max(std::abs(m0.dp), m0.dA.cwiseAbs().maxCoeff());
    ok = ok && dM > 0 && grad < 1e-12;
    report(3, ok, det + f("det M_se %.6g; gradient at phi=0 %.2e", dM, grad));
}

void jacobian_structure()
{
    // mu = 0: homoclinic record of the unperturbed system
    ModelParams p0 = ModelParams::defaults(0.0);
    SectionSpec spec = SectionSpec::make(p0.freq);
    HeteroclinicCurve curve(ModelParams::defaults(1e-3));
    HeteroclinicRecord r0 = heteroclinic_record(0, 0.0, 0.0, Vec2::Zero(), curve, p0, spec);
    TransitionJacobian t0 = transition_jacobian(r0, p0, spec);
    double nA0 = t0.A.cwiseAbs().maxCoeff();
    bool off_ok = t0.offpattern_max < 1e-6 * nA0;
    double prod = t0.A(0, 2) * t0.A(2, 0);
    bool prod_ok = std::abs(prod + 1) < 1e-6;

    double mu = 1e-3;
    ModelParams pm = ModelParams::defaults(mu);
    LinkData d = default_link(mu);
    Mat4 Afd;
    for (int j = 0; j < 4; ++j) {
        Vec4 e = Vec4::Zero();
        e[j] = 1e-6;
        Afd.col(j) = (psi_map(d.rec, d.rec.X_k.vec() + e, pm, spec) - psi_map(d.rec, d.rec.X_k.vec() - e, pm, spec)) / 2e-6;
    }
    double fd = (Afd - d.tj.A).cwiseAbs().maxCoeff() / d.tj.A.cwiseAbs().maxCoeff();
    bool ok = off_ok && prod_ok && d.tj.row2_dev < 1e-6 && d.tj.col4_dev < 1e-6 && d.tj.a11_margin > 0 &&
              d.tj.D_margin > 0 && fd < 1e-4;
    report(4, ok,
           f("mu=0: off-pattern %.3g (limit %.3g, largest is the (3,3) entry %.5g), A13*A31 %.12f; mu=1e-3: row2 dev "
             "%.2e, col4 dev %.2e, a11 %.6g (margin %.3g), D %.6g (margin %.3g), FD rel err %.2e",
             t0.offpattern_max, 1e-6 * nA0, t0.A(2, 2), prod, d.tj.row2_dev, d.tj.col4_dev, d.tj.a_ij(0, 0),
             d.tj.a11_margin, d.tj.D, d.tj.D_margin, fd));
}

void inner_map_checks()
{
    double mu = 1e-2;
    ModelParams prm = ModelParams::defaults(mu);
    SectionSpec spec = SectionSpec::make(prm.freq);
    NormalChart ch = jacobi_chart(Vec2::Zero(), prm);
    int nb = n_of_beta(30, mu, ch);
    bool zero24 = true, rho_ok = true;
    for (double Q : {0.01, 0.1, 0.3})
        for (double P : {-1e-3, 0.0, 2e-3})
            for (int n : {1, 5, nb}) {
                ReducedPoint rp(Q * std::exp(-n * ch.g0 * ch.t_star), 1.3, P, 0.02);
                InnerMapResult im = inner_map(rp, n, ch, spec);
                zero24 = zero24 && im.remainder[1] == 0.0 && im.remainder[3] == 0.0;
                rho_ok = rho_ok && im.image.rho == rp.rho;
            }
    PhasePoint z(0.4, Vec2(0.3, 0.0), 0.1, Vec2(0.05, -0.02));
    FlowResult vf = variational_flow(z, spec.t_star, prm);
    Mat6 Om = symplectic_form();
    double symp = (vf.jacobian.transpose() * Om * vf.jacobian - Om).cwiseAbs().maxCoeff();
    // energy drift over n(beta) returns, from a point near the torus
    PhasePoint zt(0.05, Vec2(0.0, 0.0), 0.02, Vec2::Zero());
    double H0 = eval_hamiltonian(zt, prm);
    Vec6 s;
    s << zt.q, zt.phi[0], zt.phi[1], zt.p, zt.A[0], zt.A[1];
    RawFlow rf = integrate_raw(s, nb * spec.t_star, prm, false, flow_settings());
    PhasePoint ze(rf.z[0], Vec2(rf.z[1], rf.z[2]), rf.z[3], Vec2(rf.z[4], rf.z[5]));
    double drift = std::abs(eval_hamiltonian(ze, prm) - H0);
    bool ok = zero24 && rho_ok && symp < 1e-6 && drift < 1e-9;
    report(5, ok, f("remainder 2,4 zero %s; rho conserved %s; |J^T W J - W| %.2e; energy drift over %d returns %.2e",
                    zero24 ? "yes" : "no", rho_ok ? "yes" : "no", symp, nb, drift));
}

void intermediary_asymptotics()
{
    bool ok = true;
    std::string det;
    for (double mu : {1e-2, 1e-3}) {
        LinkData d = default_link(mu);
        TorsionSequence seq = torsion_sequence(100, mu, 1.0, d.tj.gamma);
        TorsionCertificate tc = torsion_certificate(seq, {d.tj}, 6, 30);
        bool good = tc.det_ratio_dev < 0.10 && tc.inverse_rel_err < mu && tc.third_col_max < 1.0;
        ok = ok && good;
        det += f("mu=%g det dev %.2e, inverse rel err %.2e, third column x mu^7 %.2e; ", mu, tc.det_ratio_dev,
                 tc.inverse_rel_err, tc.third_col_max);
    }
    report(6, ok, det + "p=6 beta=30");
}

void drift_scaling()
{
    auto t0 = std::chrono::steady_clock::now();
    const double mus[3] = {1e-2, 3e-3, 1e-3};
    double ratio[3] = {0, 0, 0}, nmax[3] = {0, 0, 0};
    bool certs = true;
    std::string det;
    for (int i = 0; i < 3; ++i) {
        double mu = mus[i];
        PipelineConfig cfg;
        cfg.params = ModelParams::defaults(mu);
        cfg.N = static_cast<int>(std::ceil(0.1 / mu - 1e-9));
        try {
            DiffusionReport rep = run_pipeline(cfg);
            double L = std::log(1 / mu);
            ratio[i] = rep.total_time / (L / mu);
            for (int n : rep.n_steps()) nmax[i] = std::max(nmax[i], n / L);
            certs = certs && rep.all_passed;
            det += f("mu=%g N=%d T=%.6g T/(ln/mu)=%.4f max n/ln=%.3f; ", mu, cfg.N, rep.total_time, ratio[i], nmax[i]);
        } catch (const DomainError& e) {
            certs = false;
            det += f("mu=%g failed: %s; ", mu, e.what());
        }
    }
    bool ok = certs;
    if (certs) {
        // constant fitted in log space, each run must sit within 25% of it
        double lg = (std::log(ratio[0]) + std::log(ratio[1]) + std::log(ratio[2])) / 3, c = std::exp(lg), dev = 0;
        for (double r : ratio) dev = std::max(dev, std::abs(r / c - 1));
        bool bounded = std::max(nmax[1], nmax[2]) <= 1.25 * nmax[0];
        ok = dev <= 0.25 && bounded;
        det += f("fitted constant %.4f, max deviation %.1f%%, max/min %.3f; n/ln non-growing %s; ", c, 100 * dev,
                 std::max({ratio[0], ratio[1], ratio[2]}) / std::min({ratio[0], ratio[1], ratio[2]}),
                 bounded ? "yes" : "no");
    }
    report(7, ok, det + f("%.1f s", seconds_since(t0)));
}

void shadowing_witness()
{
    PipelineConfig cfg;
    cfg.params = ModelParams::defaults(1e-2);
    cfg.N = 4;
    try {
        DiffusionReport rep = run_pipeline(cfg);
        ShadowResult s = shadow_verify(rep);
        bool inside = static_cast<int>(s.cube_points.size()) == 4;
        for (const Vec4& x : s.cube_points) inside = inside && x.cwiseAbs().maxCoeff() < 1;
        double err = std::abs(s.drift_y - 3 * rep.chain.delta_hat);
        bool ok = inside && err <= s.slack;
        report(8, ok, f("visits 4 windows %s; drift %.10g vs 3 delta_hat %.10g, |diff| %.3g, slack %.3g; seed q=%.6f "
                        "p=%.3g",
                        inside ? "yes" : "no", s.drift_y, 3 * rep.chain.delta_hat, err, s.slack, s.seed.q, s.seed.p));
    } catch (const DomainError& e) {
        report(8, false, e.what());
    }
}

} // namespace

int main()
{
    auto run = [](int id, void (*fn)()) {
        try {
            fn();
        } catch (const std::exception& e) {
            report(id, false, std::string("exception: ") + e.what());
        }
    };
    run(1, alignment_soundness);
    run(2, simulated_torsion);
    run(3, melnikov_checks);
    run(4, jacobian_structure);
    run(5, inner_map_checks);
    run(6, intermediary_asymptotics);
    run(7, drift_scaling);
    run(8, shadowing_witness);
    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
