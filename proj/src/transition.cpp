#include "adw/transition.hpp"
#include "adw/errors.hpp"
#include <cmath>

namespace adw {

namespace {

constexpr double kFd = 1e-6;

// 6x4 derivative of from_reduced, angles differenced on the circle
Eigen::Matrix<double, 6, 4> d_from_reduced(const Vec4& X, const NormalChart& chart, const SectionSpec& spec)
{
    Eigen::Matrix<double, 6, 4> D;
    for (int j = 0; j < 4; ++j) {
        Vec4 Xp = X, Xm = X;
        Xp[j] += kFd;
        Xm[j] -= kFd;
        Vec6 zp = from_reduced(ReducedPoint::from_vec(Xp), chart, spec).to_vec();
        Vec6 zm = from_reduced(ReducedPoint::from_vec(Xm), chart, spec).to_vec();
        Vec6 d = zp - zm;
        for (int a : {0, 1, 2}) d[a] = wrap_centered(d[a]);
        D.col(j) = d / (2 * kFd);
    }
    return D;
}

Eigen::Matrix<double, 4, 6> d_to_reduced(const Vec6& z, const NormalChart& chart)
{
    Eigen::Matrix<double, 4, 6> D;
    for (int j = 0; j < 6; ++j) {
        Vec6 zp = z, zm = z;
        zp[j] += kFd;
        zm[j] -= kFd;
        Vec4 rp = to_reduced_raw(PhasePoint::from_vec(zp).wrapped(), chart).vec();
        Vec4 rm = to_reduced_raw(PhasePoint::from_vec(zm).wrapped(), chart).vec();
        Vec4 d = rp - rm;
        d[1] = wrap_centered(d[1]);
        D.col(j) = d / (2 * kFd);
    }
    return D;
}

bool near_torus(const PhasePoint& pt)
{
    return std::abs(wrap_centered(pt.q)) < 1.2 && std::abs(pt.p) < 1.2;
}

} // namespace

Vec4 psi_map(const HeteroclinicRecord& rec, const Vec4& X, const ModelParams& params, const SectionSpec& spec)
{
    PhasePoint x = from_reduced(ReducedPoint::from_vec(X), rec.chart_k, spec);
    RawFlow r = integrate_raw(x.to_vec(), rec.flight_time(), params, false);
    Vec4 out = to_reduced_raw(PhasePoint::from_vec(r.z).wrapped(), rec.chart_k1).vec();
    double ref = X[1] + (rec.l_minus + rec.l_plus) * spec.nu;
    out[1] = ref + wrap_centered(out[1] - ref);
    return out;
}

Mat4 psi_jacobian(const HeteroclinicRecord& rec, const Vec4& X, const ModelParams& params, const SectionSpec& spec)
{
    PhasePoint x = from_reduced(ReducedPoint::from_vec(X), rec.chart_k, spec);
    RawFlow r = integrate_raw(x.to_vec(), rec.flight_time(), params, true);
    Vec6 zend = PhasePoint::from_vec(r.z).wrapped().to_vec();
    return d_to_reduced(zend, rec.chart_k1) * r.J * d_from_reduced(X, rec.chart_k, spec);
}

HeteroclinicRecord heteroclinic_record(int k, double y, double y_next, const Vec2& A0,
                                       const HeteroclinicCurve& curve, const ModelParams& params,
                                       const SectionSpec& spec, const RecordSettings& rs)
{
    HeteroclinicRecord rec;
    rec.k = k;
    rec.y = y;
    rec.y_next = y_next;
    rec.delta = y_next - y;
    CurvePoint c = curve.at(rec.delta);
    Vec2 perp = params.freq.perp();
    Vec2 Ak = A0 + y * perp, Ak1 = A0 + y_next * perp;
    rec.chart_k = jacobi_chart(Ak, params);
    rec.chart_k1 = jacobi_chart(Ak1, params);
    rec.z_k = whisker_point(Ak, Side::Unstable, c.q, Vec2(c.phi1, spec.phi2_0), params);
    double R = rec.chart_k.R;

    ReducedPoint back;
    bool found = false;
    PhasePoint zb = rec.z_k;
    for (int l = 1; l <= rs.return_budget && !found; ++l) {
        zb = section_return(zb, spec, -1, params);
        if (!near_torus(zb)) continue;
        back = to_reduced_raw(zb, rec.chart_k);
        if (std::abs(back.Q) < R / 2 && std::abs(back.P) < R / 2) {
            rec.l_minus = l;
            found = true;
        }
    }
    if (!found) throw RecordError("backward orbit never entered the chart of torus " + std::to_string(k));
    found = false;
    PhasePoint zf = rec.z_k;
    for (int l = 1; l <= rs.return_budget && !found; ++l) {
        zf = section_return(zf, spec, 1, params);
        if (!near_torus(zf)) continue;
        ReducedPoint fw = to_reduced_raw(zf, rec.chart_k1);
        if (std::abs(fw.Q) < R / 2 && std::abs(fw.P) < R / 2) {
            rec.l_plus = l;
            found = true;
        }
    }
    if (!found) throw RecordError("forward orbit never entered the chart of torus " + std::to_string(k + 1));

    rec.theta_first = wrap_angle(c.phi1 - rec.l_minus * spec.nu);
    rec.theta_prime_first = wrap_angle(c.phi1 + rec.l_plus * spec.nu);

    double rho_k = rec.chart_k.torus_action[0], rho_k1 = rec.chart_k1.torus_action[0];
    Vec4 X(back.Q, back.theta, 0.0, rho_k);
    Vec4 img = psi_map(rec, X, params, spec);
    auto resid = [&](const Vec4& im) { return Vec2(im[0], im[3] - rho_k1); };
    Vec2 F = resid(img);
    if (rs.refine && params.mu > 0) {
        for (int it = 0; it < 20; ++it) {
            if (F.lpNorm<Eigen::Infinity>() < 1e-15) break;
            Mat4 J = psi_jacobian(rec, X, params, spec);
            Mat2 J2;
            J2 << J(0, 0), J(0, 1), J(3, 0), J(3, 1);
            Vec2 step = J2.fullPivLu().solve(-F);
            Vec4 Xn = X;
            Xn[0] += step[0];
            Xn[1] += step[1];
            Vec4 imn = psi_map(rec, Xn, params, spec);
            Vec2 Fn = resid(imn);
            if (!(Fn.lpNorm<Eigen::Infinity>() < F.lpNorm<Eigen::Infinity>())) break;
            X = Xn;
            img = imn;
            F = Fn;
        }
        rec.refined = true;
        if (std::abs(X[0]) >= R / 2) throw RecordError("refined record left the chart");
    }
    rec.newton_residual = F.lpNorm<Eigen::Infinity>();
    X[1] = wrap_angle(X[1]);
    rec.X_k = ReducedPoint::from_vec(X);
    rec.X_k_prime = ReducedPoint(0.0, wrap_angle(img[1]), img[2], rho_k1);
    if (std::abs(rec.X_k_prime.P) >= R / 2) throw RecordError("P' outside the chart of torus " + std::to_string(k + 1));
    return rec;
}

Mat4 unperturbed_pattern(double a)
{
    Mat4 A0 = Mat4::Zero();
    A0(0, 2) = a;
    A0(1, 1) = 1;
    A0(2, 0) = -1.0 / a;
    A0(3, 3) = 1;
    return A0;
}

TransitionJacobian transition_jacobian(const HeteroclinicRecord& rec, const ModelParams& params,
                                       const SectionSpec& spec)
{
    TransitionJacobian tj;
    tj.mu = params.mu;
    tj.A = psi_jacobian(rec, rec.X_k.vec(), params, spec);
    if (!tj.A.allFinite()) throw IntegrationError("non-finite transition Jacobian");
    tj.A_proj = tj.A;
    Vec4 e2(0, 1, 0, 0), e4(0, 0, 0, 1);
    tj.row2_dev = (tj.A.row(1).transpose() - e2).lpNorm<Eigen::Infinity>();
    tj.col4_dev = (tj.A.col(3) - e4).lpNorm<Eigen::Infinity>();
    tj.A_proj.row(1) = e2.transpose();
    tj.A_proj.col(3) = e4;
    tj.a = tj.A_proj(0, 2);
    if (tj.a == 0.0) throw ConditionError("leading coefficient a vanishes");
    Mat4 A0 = unperturbed_pattern(tj.a);
    Mat4 diff = tj.A - A0;
    diff(0, 2) = diff(2, 0) = 0;
    tj.offpattern_max = diff.cwiseAbs().maxCoeff();
    if (params.mu > 0) {
        tj.a_ij = (tj.A_proj - A0) / params.mu;
        tj.a_ij(0, 2) = 0;
        const Mat4& m = tj.a_ij;
        tj.D = m(0, 0) * m(3, 1) - m(3, 0) * m(0, 1);
        tj.gamma = m(0, 0) != 0 ? m(0, 1) / m(0, 0) : 0.0;
        tj.a11_margin = std::abs(m(0, 0));
        tj.D_margin = std::abs(tj.D);
    }
    return tj;
}

TransitionMapValue transition_map(const HeteroclinicRecord& rec, const TransitionJacobian& tj, const Vec4& xi,
                                  const ModelParams& params, const SectionSpec& spec)
{
    TransitionMapValue v;
    v.image = psi_map(rec, rec.X_k.vec() + xi, params, spec);
    Vec4 lin = tj.A * xi;
    v.remainder = v.image - rec.X_k_prime.vec() - lin;
    v.remainder[1] = wrap_centered(v.image[1] - rec.X_k_prime.theta - lin[1]);
    return v;
}

namespace {

Vec2 graph_solve(const HeteroclinicRecord& rec, const Mat2& Jg, double Q, double theta, Vec2 seed,
                 const ModelParams& params, const SectionSpec& spec)
{
    double rho_k1 = rec.chart_k1.torus_action[0];
    Vec2 u = seed;
    double best = INFINITY;
    Vec2 best_u = u;
    for (int it = 0; it < 40; ++it) {
        Vec4 im = psi_map(rec, Vec4(Q, theta, u[0], u[1]), params, spec);
        Vec2 F(im[0], im[3] - rho_k1);
        double nf = F.lpNorm<Eigen::Infinity>();
        if (nf < best) {
            best = nf;
            best_u = u;
        }
        if (nf < 1e-14) return u;
        if (it > 4 && nf > 0.5 * best && best < 1e-11) return best_u;
        u += Jg.fullPivLu().solve(-F);
        if (!u.allFinite() || std::abs(u[0]) > rec.chart_k.R) break;
    }
    if (best < 1e-11) return best_u;
    throw GraphError("stable graph not single-valued near (" + std::to_string(Q) + ", " + std::to_string(theta) + ")");
}

} // namespace

StableGraph stable_graph(const HeteroclinicRecord& rec, const TransitionJacobian& tj, const ModelParams& params,
                         const SectionSpec& spec, double spacing)
{
    StableGraph g;
    g.Q0 = rec.X_k.Q;
    g.theta0 = rec.X_k.theta;
    g.spacing = spacing;
    Mat2 Jg;
    Jg << tj.A(0, 2), tj.A(0, 3), tj.A(3, 2), tj.A(3, 3);
    Vec2 seed(rec.X_k.P, rec.X_k.rho);
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j) {
            Vec2 u = graph_solve(rec, Jg, g.Q0 + i * spacing, g.theta0 + j * spacing, seed, params, spec);
            g.P_grid[i + 2][j + 2] = u[0];
            g.rho_grid[i + 2][j + 2] = u[1];
        }
    auto d5 = [&](const std::array<std::array<double, 5>, 5>& G, bool alongQ) {
        auto v = [&](int s) { return alongQ ? G[s + 2][2] : G[2][s + 2]; };
        return (-v(2) + 8 * v(1) - 8 * v(-1) + v(-2)) / (12 * spacing);
    };
    g.M_N << d5(g.P_grid, true), d5(g.P_grid, false), d5(g.rho_grid, true), d5(g.rho_grid, false);
    if (params.mu > 0) {
        g.h = g.M_N / params.mu;
        double scale = g.M_N.cwiseAbs().maxCoeff();
        if (g.M_N(0, 0) == 0.0 || std::abs(g.M_N.determinant()) <= 1e-12 * scale * scale)
            throw GraphError("normal splitting matrix is degenerate");
    }
    HeteroclinicRecord r = rec;
    ModelParams prm = params;
    SectionSpec sp = spec;
    g.P_fun = [r, Jg, prm, sp](double Q, double th) {
        return graph_solve(r, Jg, Q, th, Vec2(r.X_k.P, r.X_k.rho), prm, sp)[0];
    };
    g.rho_fun = [r, Jg, prm, sp](double Q, double th) {
        return graph_solve(r, Jg, Q, th, Vec2(r.X_k.P, r.X_k.rho), prm, sp)[1];
    };
    return g;
}

} // namespace adw
