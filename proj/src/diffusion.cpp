#include "adw/diffusion.hpp"
#include "adw/errors.hpp"
#include <cmath>
#include <iostream>

namespace adw {

std::vector<int> DiffusionReport::n_steps() const
{
    std::vector<int> v;
    for (const auto& l : links) v.push_back(l.n);
    return v;
}

namespace {

Real expm1_mp(const Real& x)
{
    if (abs(x) > Real(1e-3)) return exp(x) - 1;
    Real term = x, sum = x;
    for (int j = 2; j < 40; ++j) {
        term *= x / j;
        sum += term;
        if (abs(term) < abs(sum) * Real(1e-90)) break;
    }
    return sum;
}

Real L_pow(const NormalChart& chart, int n)
{
    return exp(Real(n) * Real(chart.g0) * Real(chart.t_star));
}

} // namespace

CenterChoice choose_centers(const std::vector<HeteroclinicRecord>& recs, const std::vector<TransitionJacobian>& tjs,
                            const std::vector<int>& n_steps, const NormalChart& chart)
{
    size_t N = recs.size();
    if (tjs.size() != N || n_steps.size() + 1 != N) throw UsageError("choose_centers: inconsistent sizes");
    CenterChoice cc;
    cc.sigma.assign(N, Real(0));
    cc.delta.assign(N, Real(0));
    cc.rule_used.assign(N, "terminal");
    for (int k = static_cast<int>(N) - 2; k >= 0; --k) {
        const TransitionJacobian& A = tjs[k];
        Real rhs = (Real(recs[k + 1].X_k.Q) + cc.sigma[k + 1]) / L_pow(chart, n_steps[k]);
        Real A11 = A.A_proj(0, 0), A13 = A.A_proj(0, 2), A41 = A.A_proj(3, 0), A43 = A.A_proj(3, 2);
        if (std::abs(A.A_proj(3, 0)) > 1e-14) {
            Real denom = A13 * A41 - A11 * A43;
            if (abs(denom) < Real(1e-12) * abs(A41)) throw CenterError("centre denominator vanishes at k = " + std::to_string(k + 1));
            cc.delta[k] = rhs * A41 / denom;
            cc.sigma[k] = -cc.delta[k] * A43 / A41;
            cc.rule_used[k] = "a41_nonzero";
        } else {
            if (abs(A11) < Real(1e-12)) throw CenterError("a11 vanishes at k = " + std::to_string(k + 1));
            cc.delta[k] = 0;
            cc.sigma[k] = rhs / A11;
            cc.rule_used[k] = "a41_zero";
        }
    }
    return cc;
}

Delta2Result nullify_delta2(int k, TransitionChain& chain, const HeteroclinicRecord& next,
                            const HeteroclinicCurve& curve, const ModelParams& params, const SectionSpec& spec,
                            int n_beta, int budget)
{
    const ChainNode nd = chain.nodes.at(k);
    double y_next = chain.nodes.at(k + 1).y;
    RecordSettings coarse;
    coarse.refine = false;
    HeteroclinicRecord rec0 = heteroclinic_record(k, nd.y_ref, y_next, chain.A0, curve, params, spec, coarse);
    int lp = rec0.l_plus, lm = rec0.l_minus;
    auto thp = [&](double y) { return wrap_angle(curve.at(y_next - y).phi1 + lp * spec.nu); };

    double lo = nd.y_ref - nd.e_k, hi = nd.y_ref + nd.e_k;
    double t_lo = thp(lo);
    double width = wrap_centered(thp(hi) - t_lo);
    if (width == 0.0) throw ErgodizationError("image of theta'_k over O_k is a point");
    double theta_next = next.X_k.theta;
    int n = -1;
    double target = 0;
    for (int m = n_beta; m <= budget; ++m) {
        double t = wrap_angle(theta_next - m * spec.nu);
        double s = wrap_centered(t - t_lo) / width;
        if (s > 0.02 && s < 0.98) {
            n = m;
            target = t;
            break;
        }
    }
    if (n < 0)
        throw ErgodizationError("no admissible n in [" + std::to_string(n_beta) + ", " + std::to_string(budget) +
                                "] for link " + std::to_string(k + 1));
    ElasticResult er = elastic_adjust(k, target, chain, thp);

    RecordSettings fine;
    auto F = [&](double y, HeteroclinicRecord* out) {
        HeteroclinicRecord r = heteroclinic_record(k, y, y_next, chain.A0, curve, params, spec, fine);
        if (r.l_plus != lp || r.l_minus != lm) throw ChainError("return counts changed inside E_k");
        if (out) *out = std::move(r);
        return wrap_centered((out ? out->X_k_prime.theta : r.X_k_prime.theta) - target);
    };
    double y = er.y_tilde, slope = er.slope;
    HeteroclinicRecord rec;
    double f = F(y, &rec);
    for (int it = 0; it < 10 && std::abs(f) > 1e-14; ++it) {
        double yn = y - f / slope;
        if (!(std::abs(yn - nd.y_ref) < nd.interval_halfwidth)) break;
        HeteroclinicRecord rn;
        double fn = F(yn, &rn);
        if (!(std::abs(fn) < std::abs(f))) break;
        if (yn != y && fn != f) slope = (fn - f) / (yn - y);
        y = yn;
        f = fn;
        rec = std::move(rn);
    }
    // a sign change around y certifies an exact root of the refined F next to y
    bool bracketed = (f == 0.0);
    double h = std::max(4.0 * std::abs(f / slope), 1e-15 * std::max(1.0, std::abs(y)));
    for (int t = 0; t < 8 && !bracketed; ++t, h *= 4) {
        double fa = F(y - h, nullptr), fb = F(y + h, nullptr);
        bracketed = std::signbit(fa) != std::signbit(fb);
    }
    if (!bracketed) throw ChainError("refined Delta2 root not bracketed at link " + std::to_string(k + 1));
    if (!(std::abs(f) <= 1e-10)) throw ChainError("Delta2 residual above 1e-10 at link " + std::to_string(k + 1));
    chain.set_y(k, y);
    if (!(std::abs(y - nd.y_ref) < nd.interval_halfwidth)) throw ChainError("adjusted node left E_k");
    for (int j : {k - 1, k})
        if (j >= 0 && j < static_cast<int>(chain.steps.size()) && std::abs(chain.steps[j]) > chain.delta_bar)
            throw ChainError("elastic adjustment broke the transition property");
    Delta2Result res;
    res.n = n;
    res.y_tilde = y;
    res.residual = std::abs(f);
    res.record = std::move(rec);
    return res;
}

void remainder_budget(LinkReport& link, const MatR4& B_k, const MatR4& B_k1, const VecR4& p_k1,
                      const VecR4& xi0, const NormalChart& chart_k1, int p_exp, double mu)
{
    (void)p_exp;
    (void)mu;
    Real Ln = L_pow(chart_k1, link.n);
    Real c = Real(link.n) * Real(chart_k1.t_star) * Real(chart_k1.g_tilde);
    Real gam = inf_norm(link.Minv);
    Real normBk = inf_norm(B_k);
    Real C2 = link.C2, C3 = 2 * link.C2;
    Real chi1 = 0, chi2 = 0;
    for (int i0 = -1; i0 <= 1; ++i0)
        for (int i1 = -1; i1 <= 1; ++i1)
            for (int i2 = -1; i2 <= 1; ++i2)
                for (int i3 = -1; i3 <= 1; ++i3) {
                    VecR4 x(Real(2 * i0), Real(2 * i1), Real(2 * i2), Real(2 * i3));
                    VecR4 X = p_k1 + B_k1 * x;
                    Real Q = X[0], P = X[2], eta = Q * P;
                    Real em = expm1_mp(-c * eta), ep = expm1_mp(c * eta);
                    VecR4 R = VecR4::Zero();
                    R[0] = Q / Ln * em;
                    R[2] = P * Ln * ep;
                    MatR4 DR = MatR4::Zero();
                    DR(0, 0) = (em - c * eta * (em + 1)) / Ln;
                    DR(0, 2) = -c * Q * Q * (em + 1) / Ln;
                    DR(2, 0) = c * P * P * (ep + 1) * Ln;
                    DR(2, 2) = (ep + c * eta * (ep + 1)) * Ln;
                    VecR4 v = link.Minv * R;
                    MatR4 dv = link.Minv * (DR * B_k1);
                    Real vn = v.cwiseAbs().maxCoeff();
                    Real dn = inf_norm(dv);
                    VecR4 xi = xi0 + B_k * x;
                    Real xn = xi.cwiseAbs().maxCoeff();
                    chi1 = std::max(chi1, Real(vn + gam * C2 * xn * xn));
                    chi2 = std::max(chi2, Real(dn + gam * C3 * xn * normBk));
                }
    link.chi1 = static_cast<double>(chi1);
    link.chi2 = static_cast<double>(chi2);
    apply_c1(link.cert, std::max(link.chi1, link.chi2));
}

namespace {

double fit_psi_constant(const HeteroclinicRecord& rec, const TransitionJacobian& tj, const ModelParams& params,
                        const SectionSpec& spec)
{
    const Vec4 dirs[3] = {Vec4(1, 1, 1, 0), Vec4(1, -1, 0.5, 0), Vec4(0.3, 1, -1, 0)};
    double best = 0;
    for (const Vec4& d : dirs)
        for (double s : {1e-4, 1e-3}) {
            Vec4 xi = s * d / d.cwiseAbs().maxCoeff();
            TransitionMapValue v = transition_map(rec, tj, xi, params, spec);
            best = std::max(best, v.remainder.cwiseAbs().maxCoeff() / (s * s));
        }
    return 2.0 * best;
}

} // namespace

DiffusionReport run_pipeline(const PipelineConfig& cfg)
{
    if (cfg.N < 2) throw UsageError("N must be at least 2");
    if (!cfg.pattern.empty() && static_cast<int>(cfg.pattern.size()) != cfg.N - 1)
        throw UsageError("pattern length must be N-1");
    if (cfg.p_exp < 1) throw UsageError("p_exp must be at least 1");
    if (!(cfg.params.mu > 0)) throw UsageError("the pipeline needs mu > 0");
    if (cfg.beta < 6 + 4 * cfg.p_exp)
        std::cerr << "warning: beta = " << cfg.beta << " below 6 + 4p = " << 6 + 4 * cfg.p_exp << "\n";
    DiffusionReport rep;
    rep.config = cfg;
    const ModelParams& prm = cfg.params;
    double mu = prm.mu;
    SectionSpec spec = SectionSpec::make(prm.freq, cfg.phi2_0);
    HeteroclinicCurve curve(prm, cfg.phi1_0, cfg.phi2_0);
    rep.delta_bar = curve.delta_bar();
    double dh = cfg.delta_hat > 0 ? cfg.delta_hat : cfg.delta_hat_fraction * rep.delta_bar;
    std::vector<int> pattern = cfg.pattern.empty() ? std::vector<int>(cfg.N - 1, 1) : cfg.pattern;
    rep.chain = build_esc(cfg.A0, dh, pattern, curve, prm);
    NormalChart chart0 = jacobi_chart(cfg.A0, prm);
    rep.g0 = chart0.g0;
    rep.t_star = spec.t_star;
    rep.nu = spec.nu;
    rep.n_beta = n_of_beta(cfg.beta, mu, chart0);
    rep.n_without_elasticity = std::pow(mu, -(cfg.p_exp + 3));
    int budget = cfg.budget_factor * rep.n_beta;
    int N = cfg.N;

    double yN = rep.chain.nodes[N - 1].y;
    rep.terminal = heteroclinic_record(N - 1, yN, yN, cfg.A0, curve, prm, spec);
    rep.terminal_tj = transition_jacobian(rep.terminal, prm, spec);

    rep.links.resize(N - 1);
    const HeteroclinicRecord* next = &rep.terminal;
    for (int k = N - 2; k >= 0; --k) {
        LinkReport& L = rep.links[k];
        Delta2Result d2 = nullify_delta2(k, rep.chain, *next, curve, prm, spec, rep.n_beta, budget);
        L.k = k;
        L.n = d2.n;
        L.record = std::move(d2.record);
        L.delta2_residual = d2.residual;
        L.tj = transition_jacobian(L.record, prm, spec);
        if (L.tj.a11_margin == 0.0 || L.tj.D_margin == 0.0)
            throw ConditionError("a11 or D vanishes at link " + std::to_string(k + 1));
        next = &L.record;
    }

    std::vector<TransitionJacobian> tjs;
    std::vector<HeteroclinicRecord> recs;
    for (const auto& L : rep.links) {
        tjs.push_back(L.tj);
        recs.push_back(L.record);
    }
    tjs.push_back(rep.terminal_tj);
    recs.push_back(rep.terminal);
    rep.torsion = torsion_sequence(N, mu, cfg.x1, tjs);
    rep.centers = choose_centers(recs, tjs, rep.n_steps(), chart0);

    for (int k = 0; k < N; ++k) {
        rep.B.push_back(window_matrix_mp(tjs[k], rep.torsion.window_b(k), cfg.p_exp));
        const ReducedPoint& X = recs[k].X_k;
        rep.p.push_back(VecR4(Real(X.Q) + rep.centers.sigma[k], Real(X.theta), rep.centers.delta[k], Real(X.rho)));
    }

    double Kmu2 = rep.torsion.K_margin * mu * mu;
    for (int k = 0; k + 1 < N; ++k) {
        LinkReport& L = rep.links[k];
        const MatR4 A = to_mp(L.tj.A_proj);
        Real Ln = L_pow(chart0, L.n);
        MatR4 G = MatR4::Identity();
        G(0, 0) = 1 / Ln;
        G(2, 2) = Ln;
        MatR4 W1 = A * rep.B[k];
        MatR4 W2 = G * rep.B[k + 1];
        VecR4 xi0(rep.centers.sigma[k], Real(0), rep.centers.delta[k], Real(0));
        VecR4 Axi = A * xi0;
        const ReducedPoint& Xp = L.record.X_k_prime;
        const ReducedPoint& Xn = recs[k + 1].X_k;
        VecR4 delta;
        delta[0] = (Real(Xn.Q) + rep.centers.sigma[k + 1]) / Ln - Axi[0];
        delta[1] = 0;  // F(y_tilde) = 0 at the bracketed root
        delta[2] = Ln * rep.centers.delta[k + 1] - (Real(Xp.P) + Axi[2]);
        delta[3] = -Axi[3];
        L.Delta1 = static_cast<double>(delta[0]);
        L.Delta3 = static_cast<double>(delta[2]);
        L.Delta4 = static_cast<double>(delta[3]);
        L.cert = certify_affine_mp(W1, W2, delta);
        if (!std::isfinite(L.cert.chi_a)) throw CertificateError("M_k singular at link " + std::to_string(k + 1));
        MatR4 M, Nm;
        intermediary(W1, W2, M, Nm);
        invert_mp(M, L.Minv);
        L.MinvN = L.Minv * Nm;
        L.MinvDelta = L.Minv * delta;
        L.gamma_k = static_cast<double>(inf_norm(L.Minv));
        L.C2 = fit_psi_constant(L.record, L.tj, prm, spec);
        remainder_budget(L, rep.B[k], rep.B[k + 1], rep.p[k + 1], xi0, recs[k + 1].chart_k, cfg.p_exp, mu);
        rep.chi1 = std::max(rep.chi1, L.chi1);
        rep.chi2 = std::max(rep.chi2, L.chi2);
        if (!(L.chi1 < 0.5 * Kmu2 && L.chi2 < 0.5 * Kmu2))
            throw BudgetError("remainder budget exceeded at link " + std::to_string(k + 1) +
                              ": chi1 = " + std::to_string(L.chi1) + ", chi2 = " + std::to_string(L.chi2));
        if (!L.cert.passed)
            throw CertificateError("alignment fails at link " + std::to_string(k + 1) + ": " + L.cert.reason);
        rep.total_returns += L.n + L.record.l_minus + L.record.l_plus;
    }
    rep.total_time = rep.total_returns * spec.t_star;
    rep.drift = std::abs(rep.chain.nodes[N - 1].y - rep.chain.nodes[0].y);
    rep.all_passed = true;
    return rep;
}

ShadowResult shadow_verify(const DiffusionReport& report, int max_nodes)
{
    int N = static_cast<int>(report.B.size());
    if (N < 2) throw UsageError("shadow_verify: needs at least two windows");
    if (N > max_nodes) throw UsageError("shadow_verify: chain longer than " + std::to_string(max_nodes));
    if (!report.all_passed) throw ShadowingError("certificates did not all pass");
    const ModelParams& prm = report.config.params;
    SectionSpec spec = SectionSpec::make(prm.freq, report.config.phi2_0);
    NormalChart chart0 = jacobi_chart(report.config.A0, prm);
    std::vector<VecR4> x(N, VecR4::Zero());
    auto correction = [&](int k, const VecR4& xk1) {
        const LinkReport& L = report.links[k];
        Real Ln = L_pow(chart0, L.n);
        Real c = Real(L.n) * Real(chart0.t_star) * Real(chart0.g_tilde);
        VecR4 X = report.p[k + 1] + report.B[k + 1] * xk1;
        Real eta = X[0] * X[2];
        VecR4 R = VecR4::Zero();
        R[0] = X[0] / Ln * expm1_mp(-c * eta);
        R[2] = X[2] * Ln * expm1_mp(c * eta);
        return VecR4(L.Minv * R);
    };
    ShadowResult res;
    Real change = 1;
    for (int it = 0; it < 60 && change > Real(1e-40); ++it) {
        change = 0;
        for (int k = 0; k + 1 < N; ++k) {
            const LinkReport& L = report.links[k];
            VecR4 y(x[k + 1][0], x[k + 1][1], x[k][2], x[k][3]);
            VecR4 u = -(L.MinvN * y) + L.MinvDelta + correction(k, x[k + 1]);
            for (int i : {0, 1}) {
                change = std::max(change, Real(abs(u[i] - x[k][i])));
                x[k][i] = u[i];
            }
            for (int i : {2, 3}) {
                change = std::max(change, Real(abs(u[i] - x[k + 1][i])));
                x[k + 1][i] = u[i];
            }
        }
        res.iterations = it + 1;
    }
    Real resid = 0;
    for (int k = 0; k + 1 < N; ++k) {
        const LinkReport& L = report.links[k];
        VecR4 y(x[k + 1][0], x[k + 1][1], x[k][2], x[k][3]);
        VecR4 u = -(L.MinvN * y) + L.MinvDelta + correction(k, x[k + 1]);
        VecR4 mine(x[k][0], x[k][1], x[k + 1][2], x[k + 1][3]);
        resid = std::max(resid, Real((u - mine).cwiseAbs().maxCoeff()));
    }
    res.residual = static_cast<double>(resid);
    if (!(res.residual < 1e-12)) throw ShadowingError("crossing iteration did not converge");
    for (int k = 0; k < N; ++k) {
        Vec4 xd = to_double(x[k]);
        if (!(xd.cwiseAbs().maxCoeff() < 1.0))
            throw ShadowingError("shadowing orbit not found: leaves window " + std::to_string(k + 1));
        res.cube_points.push_back(xd);
        res.reduced_points.push_back(to_double(VecR4(report.p[k] + report.B[k] * x[k])));
    }
    Vec4 X0 = res.reduced_points.front();
    res.seed = from_reduced(ReducedPoint::from_vec(X0), report.links.front().record.chart_k, spec);
    double perp1 = prm.freq.perp()[0];
    res.drift_y = (res.reduced_points.back()[3] - res.reduced_points.front()[3]) / perp1;
    double steps = 0;
    for (double d : report.chain.steps) steps += d;
    (void)steps;
    int total = 0;
    for (int s : report.chain.pattern) total += s;
    res.expected_drift = total * report.chain.delta_hat;
    res.slack = report.chain.nodes.front().interval_halfwidth + report.chain.nodes.back().interval_halfwidth;
    return res;
}

} // namespace adw
