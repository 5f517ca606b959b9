#include "adw/normal_form.hpp"
#include "adw/errors.hpp"
#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace adw {

ChartSettings& chart_settings()
{
    static ChartSettings s;
    return s;
}

double ChartCore::J1(double eta) const
{
    double v = 0, pw = 1;
    for (size_t j = 1; j < J.size(); ++j) {
        v += j * J[j] * pw;
        pw *= eta;
    }
    return v;
}

double ChartCore::J2(double eta) const
{
    double v = 0, pw = 1;
    for (size_t j = 2; j < J.size(); ++j) {
        v += j * (j - 1.0) * J[j] * pw;
        pw *= eta;
    }
    return v;
}

void ChartCore::chi(double Q, double P, const Vec2& psi, double& v, double& vQ, double& vP, Vec2& vpsi) const
{
    v = vQ = vP = 0.0;
    vpsi.setZero();
    if (!with_mu || params.mu == 0.0) return;
    const int D = degree;
    const double eta = Q * P, j1 = J1(eta), j2 = J2(eta);
    std::vector<double> S(2 * D + 1, 0.0), Sd(2 * D + 1, 0.0);
    std::vector<Vec2> Sp(2 * D + 1, Vec2::Zero());
    const auto& modes = params.pert.modes();
    std::vector<double> c(modes.size()), s(modes.size()), w(modes.size());
    for (size_t m = 0; m < modes.size(); ++m) {
        sincos(modes[m].k1 * psi[0] + modes[m].k2 * psi[1], &s[m], &c[m]);
        w[m] = modes[m].k1 * params.freq.omega[0] + modes[m].k2 * params.freq.omega[1];
    }
    for (int sec = -D; sec <= D; ++sec) {
        double u = sec * j1;
        double a = 0, ad = 0;
        Vec2 ap = Vec2::Zero();
        for (size_t m = 0; m < modes.size(); ++m) {
            double den = u * u + w[m] * w[m];
            double num = u * c[m] + w[m] * s[m];
            double f = modes[m].f;
            a += f * num / den;
            ad += f * (c[m] * den - 2 * u * num) / (den * den);
            ap += f * (w[m] * c[m] - u * s[m]) / den * Vec2(modes[m].k1, modes[m].k2);
        }
        S[sec + D] = a;
        Sd[sec + D] = ad;
        Sp[sec + D] = ap;
    }
    std::vector<double> qp(D + 1, 1.0), pp(D + 1, 1.0);
    for (int i = 1; i <= D; ++i) {
        qp[i] = qp[i - 1] * Q;
        pp[i] = pp[i - 1] * P;
    }
    for (int i = 0; i <= D; ++i)
        for (int j = 0; i + j <= D; ++j) {
            double g = G.at(i, j);
            if (g == 0.0) continue;
            int sec = i - j;
            double mono = qp[i] * pp[j];
            double a = S[sec + D], ad = Sd[sec + D] * sec * j2;
            v += g * mono * a;
            vQ += g * ((i ? i * qp[i - 1] * pp[j] : 0.0) * a + mono * ad * P);
            vP += g * ((j ? j * qp[i] * pp[j - 1] : 0.0) * a + mono * ad * Q);
            vpsi += g * mono * Sp[sec + D];
        }
    double mu = params.mu;
    v *= mu;
    vQ *= mu;
    vP *= mu;
    vpsi *= mu;
}

namespace {

std::shared_ptr<const ChartCore> build_core(const ModelParams& params, int D)
{
    auto core = std::make_shared<ChartCore>();
    core->degree = D;
    core->params = params;
    const double r2 = 1.0 / std::sqrt(2.0);
    Poly2 X = Poly2::monomial(D, 1, 0), Y = Poly2::monomial(D, 0, 1);
    Poly2 qp = (X - Y) * r2, pp = (X + Y) * r2;
    Poly2 H = pp * pp * 0.5 + cos_minus_one(qp);
    Poly2 Xc = X, Yc = Y;
    for (int s = 3; s <= D; ++s) {
        Poly2 chi(D);
        bool any = false;
        for (int i = 0; i <= s; ++i) {
            int j = s - i;
            if (i == j) continue;
            double h = H.at(i, j);
            if (h != 0.0) {
                chi.at(i, j) = h / (i - j);
                any = true;
            }
        }
        if (!any) continue;
        H = lie_exp(H, chi);
        Xc = lie_exp(Xc, chi);
        Yc = lie_exp(Yc, chi);
    }
    core->q_of = (Xc - Yc) * r2;
    core->p_of = (Xc + Yc) * r2;
    core->G = cos_minus_one(core->q_of) * -1.0;
    core->J.assign(D / 2 + 1, 0.0);
    for (int j = 0; 2 * j <= D; ++j) core->J[j] = H.at(j, j);
    return core;
}

std::string params_key(const ModelParams& p, int D)
{
    std::ostringstream os;
    os.precision(17);
    os << D << '|' << p.mu << '|' << p.freq.omega[0] << '|' << p.freq.omega[1];
    for (const Mode& m : p.pert.modes()) os << '|' << m.k1 << ',' << m.k2 << ',' << m.f;
    return os.str();
}

std::mutex cache_mutex;

} // namespace

double saddle_exponent(const ModelParams& params, int returns)
{
    static std::map<std::string, double> cache;
    std::string key = params_key(params, returns);
    {
        std::lock_guard<std::mutex> lk(cache_mutex);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    SectionSpec sec = SectionSpec::make(params.freq);
    Vec6 z = Vec6::Zero();
    Vec6 v = Vec6::Zero();
    v[0] = v[3] = std::sqrt(0.5);
    const int burn = std::min(20, returns / 4);
    double acc = 0;
    for (int r = 0; r < returns + burn; ++r) {
        RawFlow f = integrate_raw(z, sec.t_star, params, true);
        z = f.z;
        v = f.J * v;
        double nv = v.norm();
        if (r >= burn) acc += std::log(nv);
        v /= nv;
    }
    double g0 = acc / (returns * sec.t_star);
    std::lock_guard<std::mutex> lk(cache_mutex);
    cache[key] = g0;
    return g0;
}

PhasePoint NormalChart::to_physical(const Vec6& n) const
{
    double Q = n[0], P = n[3];
    Vec2 psi(n[1], n[2]), I(n[4], n[5]);
    double v, vQ, vP;
    Vec2 vpsi;
    core->chi(Q, P, psi, v, vQ, vP, vpsi);
    double Qt = Q + vP, Pt = P - vQ;
    double q = core->q_of.eval(Qt, Pt), p = core->p_of.eval(Qt, Pt);
    return PhasePoint(wrap_angle(q), Vec2(wrap_angle(psi[0]), wrap_angle(psi[1])), p, I - vpsi);
}

Vec6 NormalChart::to_normal(const PhasePoint& pt) const
{
    double q = wrap_centered(pt.q);
    if (q == -kPi) q = kPi;
    double p = pt.p;
    const double r2 = 1.0 / std::sqrt(2.0);
    double x = (q + p) * r2, y = (p - q) * r2;
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
        double fq, fqQ, fqP, fp, fpQ, fpP;
        core->q_of.eval_grad(x, y, fq, fqQ, fqP);
        core->p_of.eval_grad(x, y, fp, fpQ, fpP);
        double r1 = fq - q, r2v = fp - p;
        double det = fqQ * fpP - fqP * fpQ;
        if (!(std::abs(det) > 1e-12)) break;
        double dx = (fpP * r1 - fqP * r2v) / det;
        double dy = (-fpQ * r1 + fqQ * r2v) / det;
        x -= dx;
        y -= dy;
        if (!std::isfinite(x) || !std::isfinite(y)) break;
        if (std::abs(dx) + std::abs(dy) < 1e-16 * (1 + std::abs(x) + std::abs(y))) {
            ok = true;
            break;
        }
        if (it > 40 && std::abs(dx) + std::abs(dy) < 1e-14) {
            ok = true;
            break;
        }
    }
    if (!ok) throw ChartError("point outside the pendulum chart (q=" + std::to_string(q) + ", p=" + std::to_string(p) + ")");
    Vec2 psi = pt.phi;
    double Q = x, P = y, v, vQ, vP;
    Vec2 vpsi;
    for (int it = 0; it < 200; ++it) {
        core->chi(Q, P, psi, v, vQ, vP, vpsi);
        double Qn = x - vP, Pn = y + vQ;
        double d = std::abs(Qn - Q) + std::abs(Pn - P);
        Q = Qn;
        P = Pn;
        if (d < 1e-17 * (1 + std::abs(Q) + std::abs(P))) break;
        if (it == 199 && d > 1e-13) throw ChartError("first-order chart inversion did not converge");
    }
    core->chi(Q, P, psi, v, vQ, vP, vpsi);
    Vec6 out;
    out << Q, psi[0], psi[1], P, pt.A[0] + vpsi[0], pt.A[1] + vpsi[1];
    return out;
}

NormalChart NormalChart::for_torus(const Vec2& action) const
{
    NormalChart c = *this;
    c.torus_action = action;
    return c;
}

NormalChart jacobi_chart(const Vec2& torus_action, const ModelParams& params)
{
    const ChartSettings& cs = chart_settings();
    static std::map<std::string, std::shared_ptr<const ChartCore>> cores;
    std::string key = params_key(params, cs.degree);
    std::shared_ptr<const ChartCore> core;
    {
        std::lock_guard<std::mutex> lk(cache_mutex);
        auto it = cores.find(key);
        if (it != cores.end()) core = it->second;
    }
    if (!core) {
        core = build_core(params, cs.degree);
        std::lock_guard<std::mutex> lk(cache_mutex);
        cores[key] = core;
    }
    NormalChart c;
    c.torus_action = torus_action;
    c.R = cs.R;
    c.kappa = cs.kappa;
    c.core = core;
    c.g_tilde = core->J.size() > 2 ? 2.0 * core->J[2] : 0.0;
    c.g0 = params.mu == 0.0 ? 1.0 : saddle_exponent(params, cs.g0_returns);
    c.energy_h = params.freq.omega.dot(torus_action);
    c.t_star = SectionSpec::make(params.freq).t_star;
    return c;
}

ReducedPoint to_reduced_raw(const PhasePoint& pt, const NormalChart& chart)
{
    Vec6 n = chart.to_normal(pt);
    return ReducedPoint(n[0], wrap_angle(n[1]), n[3], n[4]);
}

ReducedPoint to_reduced(const PhasePoint& pt, const NormalChart& chart, const SectionSpec& spec)
{
    if (std::abs(wrap_centered(pt.phi[1] - spec.phi2_0)) > 1e-8)
        throw DomainError("to_reduced", "point is not on the section phi2 = phi2_0");
    double H = eval_hamiltonian(pt, chart.core->params);
    if (std::abs(H - chart.energy_h) > 1e-8 * std::max(1.0, std::abs(chart.energy_h)))
        throw DomainError("to_reduced", "point is not on the chart energy level");
    ReducedPoint r = to_reduced_raw(pt, chart);
    double mu = chart.core->params.mu;
    if (std::abs(r.Q) >= chart.R || std::abs(r.P) >= chart.R ||
        std::abs(r.rho - chart.torus_action[0]) >= std::max(mu * chart.kappa, 1e-9))
        throw ChartError("point outside the chart neighbourhood");
    return r;
}

PhasePoint from_reduced(const ReducedPoint& rp, const NormalChart& chart, const SectionSpec& spec)
{
    const ChartCore& core = *chart.core;
    Vec2 psi(rp.theta, spec.phi2_0);
    double v, vQ, vP;
    Vec2 vpsi;
    core.chi(rp.Q, rp.P, psi, v, vQ, vP, vpsi);
    double Qt = rp.Q + vP, Pt = rp.P - vQ;
    double q = core.q_of.eval(Qt, Pt), p = core.p_of.eval(Qt, Pt);
    const ModelParams& prm = core.params;
    const Vec2& w = prm.freq.omega;
    double A1 = rp.rho - vpsi[0];
    double f = perturbation_eval(psi, prm.pert).value;
    double rest = 0.5 * p * p + std::cos(q) - 1.0 + prm.mu * (1.0 - std::cos(q)) * f;
    double A2 = (chart.energy_h - w[0] * A1 - rest) / w[1];
    return PhasePoint(wrap_angle(q), Vec2(wrap_angle(psi[0]), wrap_angle(psi[1])), p, Vec2(A1, A2));
}

InnerMapResult inner_map_raw(const ReducedPoint& rp, int n, const NormalChart& chart, const SectionSpec& spec)
{
    double eta = rp.Q * rp.P;
    double Ln = std::exp(n * chart.g0 * chart.t_star);
    double Lmn = std::exp(-n * chart.g0 * chart.t_star);
    double Fp = std::expm1(n * chart.t_star * chart.g_tilde * eta);
    double Fm = std::expm1(-n * chart.t_star * chart.g_tilde * eta);
    InnerMapResult r;
    double th = wrap_angle(rp.theta + n * spec.nu);
    r.linear_part = ReducedPoint(rp.Q * Ln, th, rp.P * Lmn, rp.rho);
    r.remainder = Vec4(rp.Q * Ln * Fp, 0.0, rp.P * Lmn * Fm, 0.0);
    double gq = std::exp(n * chart.t_star * chart.g(eta));
    double gp = std::exp(-n * chart.t_star * chart.g(eta));
    r.image = ReducedPoint(rp.Q * gq, th, rp.P * gp, rp.rho);
    return r;
}

InnerMapResult inner_map(const ReducedPoint& rp, int n, const NormalChart& chart, const SectionSpec& spec)
{
    InnerMapResult r = inner_map_raw(rp, n, chart, spec);
    for (double v : {rp.Q, rp.P, r.image.Q, r.image.P})
        if (!(std::abs(v) < chart.R)) throw ChartError("inner map leaves the chart");
    return r;
}

double ergodization_gap(int n, const SectionSpec& spec)
{
    if (n < 1) throw UsageError("ergodization_gap: n must be >= 1");
    std::vector<double> pts(n);
    for (int j = 1; j <= n; ++j) pts[j - 1] = wrap_angle(j * spec.nu);
    std::sort(pts.begin(), pts.end());
    double gap = kTwoPi - pts.back() + pts.front();
    for (int j = 1; j < n; ++j) gap = std::max(gap, pts[j] - pts[j - 1]);
    return gap;
}

int n_of_beta(double beta, double mu, const NormalChart& chart)
{
    return static_cast<int>(std::lround(beta * std::log(1.0 / mu) / (chart.g0 * chart.t_star)));
}

} // namespace adw
