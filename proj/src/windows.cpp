#include "adw/windows.hpp"
#include "adw/errors.hpp"
#include <cmath>

namespace adw {

MatR4 to_mp(const Mat4& m)
{
    MatR4 r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r(i, j) = Real(m(i, j));
    return r;
}

VecR4 to_mp(const Vec4& v)
{
    VecR4 r;
    for (int i = 0; i < 4; ++i) r[i] = Real(v[i]);
    return r;
}

Mat4 to_double(const MatR4& m)
{
    Mat4 r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r(i, j) = static_cast<double>(m(i, j));
    return r;
}

Vec4 to_double(const VecR4& v)
{
    Vec4 r;
    for (int i = 0; i < 4; ++i) r[i] = static_cast<double>(v[i]);
    return r;
}

bool invert_mp(const MatR4& M0, MatR4& inv, Real* det)
{
    // power-of-two row/column equilibration keeps the pivots O(1)
    Real rs[4], cs[4];
    MatR4 M = M0;
    for (int i = 0; i < 4; ++i) {
        Real mx = 0;
        for (int j = 0; j < 4; ++j) mx = std::max(mx, Real(abs(M(i, j))));
        if (mx == 0) return false;
        int e;
        frexp(mx, &e);
        rs[i] = ldexp(Real(1), -e);
        for (int j = 0; j < 4; ++j) M(i, j) *= rs[i];
    }
    for (int j = 0; j < 4; ++j) {
        Real mx = 0;
        for (int i = 0; i < 4; ++i) mx = std::max(mx, Real(abs(M(i, j))));
        if (mx == 0) return false;
        int e;
        frexp(mx, &e);
        cs[j] = ldexp(Real(1), -e);
        for (int i = 0; i < 4; ++i) M(i, j) *= cs[j];
    }
    MatR4 X = MatR4::Identity();
    int colperm[4] = {0, 1, 2, 3};
    Real d = 1;
    for (int k = 0; k < 4; ++k) {
        int pi = k, pj = k;
        Real best = -1;
        for (int i = k; i < 4; ++i)
            for (int j = k; j < 4; ++j)
                if (abs(M(i, j)) > best) {
                    best = abs(M(i, j));
                    pi = i;
                    pj = j;
                }
        if (best == 0) return false;
        if (pi != k) {
            M.row(pi).swap(M.row(k));
            X.row(pi).swap(X.row(k));
            d = -d;
        }
        if (pj != k) {
            M.col(pj).swap(M.col(k));
            std::swap(colperm[pj], colperm[k]);
            d = -d;
        }
        Real piv = M(k, k);
        d *= piv;
        for (int j = 0; j < 4; ++j) {
            M(k, j) /= piv;
            X(k, j) /= piv;
        }
        for (int i = 0; i < 4; ++i) {
            if (i == k || M(i, k) == 0) continue;
            Real f = M(i, k);
            for (int j = 0; j < 4; ++j) {
                M(i, j) -= f * M(k, j);
                X(i, j) -= f * X(k, j);
            }
        }
    }
    // undo the column permutation: rows of X belong to permuted unknowns
    MatR4 Y;
    for (int k = 0; k < 4; ++k) Y.row(colperm[k]) = X.row(k);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) inv(i, j) = cs[i] * Y(i, j) * rs[j];
    if (det) {
        Real s = d;
        for (int i = 0; i < 4; ++i) s /= rs[i] * cs[i];
        *det = s;
    }
    return true;
}

Real inf_norm(const MatR4& m)
{
    Real best = 0;
    for (int i = 0; i < 4; ++i) {
        Real s = 0;
        for (int j = 0; j < 4; ++j) s += abs(m(i, j));
        best = std::max(best, s);
    }
    return best;
}

Vec4 Window::operator()(const Vec4& x) const
{
    Vec4 v = center + matrix * x;
    if (correction) {
        Vec4 c;
        Mat4 J;
        correction(x, c, J);
        v += c;
    }
    return v;
}

void intermediary(const MatR4& W1, const MatR4& W2, MatR4& M, MatR4& N)
{
    M.block<4, 2>(0, 0) = W1.block<4, 2>(0, 0);
    M.block<4, 2>(0, 2) = -W2.block<4, 2>(0, 2);
    N.block<4, 2>(0, 0) = -W2.block<4, 2>(0, 0);
    N.block<4, 2>(0, 2) = W1.block<4, 2>(0, 2);
}

AlignmentCertificate certify_affine_mp(const MatR4& W1, const MatR4& W2, const VecR4& delta)
{
    AlignmentCertificate cert;
    MatR4 M, N, Mi;
    intermediary(W1, W2, M, N);
    cert.M_int = to_double(M);
    cert.N_int = to_double(N);
    if (!invert_mp(M, Mi)) {
        cert.passed = false;
        cert.chi_a = INFINITY;
        cert.margin = -INFINITY;
        cert.reason = "intermediary matrix M is singular";
        return cert;
    }
    cert.M_inv = to_double(Mi);
    MatR4 MN = Mi * N;
    VecR4 off = Mi * delta;
    Real chi = 0;
    for (int i = 0; i < 4; ++i) {
        Real s = abs(off[i]);
        for (int j = 0; j < 4; ++j) s += abs(MN(i, j));
        chi = std::max(chi, s);
    }
    cert.chi_a = static_cast<double>(chi);
    apply_c1(cert, 0.0);
    return cert;
}

void apply_c1(AlignmentCertificate& cert, double chi_c)
{
    cert.chi_c = chi_c;
    double comb = cert.chi_a + chi_c / (1.0 - chi_c);
    cert.margin = 1.0 - comb;
    if (!(cert.chi_a < 1.0)) {
        cert.passed = false;
        cert.reason = "chi_a >= 1";
    } else if (!(chi_c < 0.25)) {
        cert.passed = false;
        cert.reason = "chi_c >= 1/4";
    } else if (!(comb < 1.0)) {
        cert.passed = false;
        cert.reason = "chi_a + chi_c/(1-chi_c) >= 1";
    } else {
        cert.passed = true;
        cert.reason.clear();
    }
}

AlignmentCertificate align_affine(const Window& w1, const Window& w2)
{
    if (std::abs(w1.matrix.determinant()) == 0.0 || std::abs(w2.matrix.determinant()) == 0.0)
        throw AlignmentError("degenerate window matrix");
    AlignmentCertificate c = certify_affine_mp(to_mp(w1.matrix), to_mp(w2.matrix), to_mp(Vec4(w2.center - w1.center)));
    if (!std::isfinite(c.chi_a)) throw AlignmentError("alignment indeterminate: " + c.reason);
    return c;
}

OracleResult align_oracle(const Window& w1, const Window& w2, int grid_n)
{
    if (grid_n < 2) throw UsageError("align_oracle: grid_n must be at least 2");
    OracleResult res;
    Mat4 M, N;
    M << w1.matrix.block<4, 2>(0, 0), -w2.matrix.block<4, 2>(0, 2);
    N << -w2.matrix.block<4, 2>(0, 0), w1.matrix.block<4, 2>(0, 2);
    Vec4 delta = w2.center - w1.center;
    Eigen::FullPivLU<Mat4> lu(M);
    double rc = lu.rcond();
    if (!(rc > 1e-14)) {
        res.passed = false;
        res.reason = "singular crossing system (non-transversal intersection)";
        return res;
    }
    res.passed = true;
    for (int i0 = 0; i0 < grid_n; ++i0)
        for (int i1 = 0; i1 < grid_n; ++i1)
            for (int i2 = 0; i2 < grid_n; ++i2)
                for (int i3 = 0; i3 < grid_n; ++i3) {
                    auto g = [&](int i) { return -1.0 + 2.0 * i / (grid_n - 1); };
                    Vec4 y(g(i0), g(i1), g(i2), g(i3));
                    // W1(x_h, y_v) = W2(y_h, x_v)  <=>  M (x_h, x_v) = delta - N (y_h, y_v)
                    Vec4 u = lu.solve(Vec4(delta - N * y));
                    double m = u.cwiseAbs().maxCoeff();
                    if (m > res.max_abs) {
                        res.max_abs = m;
                        res.location = y;
                    }
                }
    if (!(res.max_abs < 1.0)) {
        res.passed = false;
        res.reason = "crossing point outside the open cube";
    }
    return res;
}

namespace {

double sample_chi_c(const Window& w1, const Window& w2, const Mat4& Mi, int s)
{
    double best = 0;
    Vec4 v1 = Vec4::Zero(), v2 = Vec4::Zero();
    Mat4 J1 = Mat4::Zero(), J2 = Mat4::Zero();
    for (int i0 = 0; i0 < s; ++i0)
        for (int i1 = 0; i1 < s; ++i1)
            for (int i2 = 0; i2 < s; ++i2)
                for (int i3 = 0; i3 < s; ++i3) {
                    auto g = [&](int i) { return -2.0 + 4.0 * (i + 0.5) / s; };
                    Vec4 x(g(i0), g(i1), g(i2), g(i3));
                    if (w1.correction) w1.correction(x, v1, J1);
                    if (w2.correction) w2.correction(x, v2, J2);
                    Vec4 dv = Mi * (v2 - v1);
                    Mat4 dJ = Mi * (J2 - J1);
                    best = std::max(best, dv.cwiseAbs().maxCoeff());
                    best = std::max(best, dJ.cwiseAbs().rowwise().sum().maxCoeff());
                }
    return best;
}

} // namespace

AlignmentCertificate align_c1(const Window& w1, const Window& w2, int samples)
{
    AlignmentCertificate cert = align_affine(w1, w2);
    if (!std::isfinite(cert.chi_a)) return cert;
    if (!w1.correction && !w2.correction) return cert;
    cert.chi_c_coarse = sample_chi_c(w1, w2, cert.M_inv, samples);
    double fine = sample_chi_c(w1, w2, cert.M_inv, 2 * samples);
    apply_c1(cert, std::max(fine, cert.chi_c_coarse));
    return cert;
}

namespace {

struct SigmaSet {
    Real s33, s34, s43, s44, delta;
};

SigmaSet sigmas(const TransitionJacobian& tj)
{
    const Mat4& m = tj.a_ij;
    Real mu = tj.mu, a = tj.a;
    Real f1 = a + mu * m(0, 2), f2 = 1 + mu * Real(m(3, 3));
    Real dl = f1 * f2 - mu * mu * Real(m(0, 3)) * Real(m(2, 3));
    if (dl == 0) throw ConditionError("delta(mu) vanishes");
    SigmaSet s;
    s.delta = dl;
    Real a11 = m(0, 0), a12 = m(0, 1), a13 = m(0, 2), a14 = m(0, 3);
    Real a41 = m(3, 0), a42 = m(3, 1), a43 = m(3, 2), a44 = m(3, 3);
    s.s33 = (-a11 + mu * (a14 * a41 - a11 * a44)) / dl;
    s.s34 = (-a12 + mu * (a14 * a42 - a12 * a44)) / dl;
    s.s43 = (-a * a41 + mu * (a11 * a43 - a13 * a41)) / dl;
    s.s44 = (-a * a42 + mu * (a12 * a43 - a13 * a42)) / dl;
    return s;
}

} // namespace

MatR4 window_matrix_mp(const TransitionJacobian& tj, const Vec4& b, int p)
{
    SigmaSet s = sigmas(tj);
    Real mu = tj.mu;
    Real mp = pow(mu, p);
    MatR4 B = MatR4::Zero();
    B(0, 0) = b[0];
    B(0, 2) = b[2];
    B(1, 1) = b[1];
    B(1, 3) = b[3];
    B(2, 2) = mu * s.s33 * b[2];
    B(2, 3) = mu * s.s34 * b[3];
    B(3, 2) = mu * s.s43 * b[2];
    B(3, 3) = mu * s.s44 * b[3];
    return B * mp;
}

WindowClassB build_window_class(const TransitionJacobian& tj, const Vec4& b, int p_exp)
{
    for (int i = 0; i < 4; ++i)
        if (b[i] == 0.0) throw UsageError("window coefficients b_i must be nonzero");
    if (p_exp < 0) throw UsageError("p_exp must be a natural number");
    WindowClassB w;
    w.b = b;
    w.p_exp = p_exp;
    w.mu = tj.mu;
    SigmaSet s = sigmas(tj);
    w.Sigma33 = static_cast<double>(s.s33);
    w.Sigma34 = static_cast<double>(s.s34);
    w.Sigma43 = static_cast<double>(s.s43);
    w.Sigma44 = static_cast<double>(s.s44);
    w.delta_mu = static_cast<double>(s.delta);
    MatR4 B = window_matrix_mp(tj, b, p_exp);
    w.B = to_double(B);
    Real det;
    MatR4 inv;
    Real mu = tj.mu;
    Real scale = pow(mu, 4 * p_exp);
    if (tj.mu > 0) {
        if (!invert_mp(B, inv, &det)) throw ConditionError("window matrix B is singular");
        Real formula = scale * mu * mu / s.delta * Real(b[0]) * b[1] * b[2] * b[3] * Real(tj.D);
        w.det_B = static_cast<double>(det);
        w.det_formula = static_cast<double>(formula);
    }
    MatR4 AB = to_mp(tj.A_proj) * B;
    Real mx = 0, zmx = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) mx = std::max(mx, Real(abs(AB(i, j))));
    for (int j : {2, 3})
        for (int i : {0, 3}) zmx = std::max(zmx, Real(abs(AB(i, j))));
    w.cond2_residual = mx > 0 ? static_cast<double>(zmx / mx) : 0.0;
    return w;
}

TorsionSequence torsion_sequence(int N, double mu, double x1, double gamma)
{
    if (N < 2) throw UsageError("torsion_sequence: N must be at least 2");
    if (!(mu > 0)) throw UsageError("torsion_sequence: mu must be positive");
    if (!(x1 > 0)) throw UsageError("torsion_sequence: x1 must be positive");
    TorsionSequence s;
    s.N = N;
    s.mu = mu;
    s.b_freq = kPi / (mu * (N + 1));
    double mb = mu * s.b_freq;
    s.C_rec = std::sqrt(4.0 - mb * mb);
    s.alpha = std::atan(std::sqrt(4.0 - s.C_rec * s.C_rec) / s.C_rec);
    s.K_margin = (1.0 - 0.5 * s.C_rec) / (mu * mu);
    s.r.assign(N - 1, 1.0);
    s.x.resize(N);
    s.b4.resize(N);
    s.x[0] = x1;
    s.x[1] = 0.5 * s.C_rec * x1;
    for (int k = 2; k < N; ++k) s.x[k] = s.C_rec * s.x[k - 1] - s.x[k - 2];
    s.b4[0] = 0.5 * s.C_rec * x1;
    for (int k = 1; k < N; ++k) s.b4[k] = s.x[k - 1];
    double g = std::abs(gamma) > 0 ? std::abs(gamma) : 1.0;
    s.b1 = s.b3 = g * x1;
    for (int k = 0; k < N; ++k)
        if (!(s.x[k] > 0) || !(s.b4[k] > 0))
            throw TorsionError("torsion sequence lost positivity at k = " + std::to_string(k + 1));
    return s;
}

std::vector<double> coupling_ratios(const std::vector<TransitionJacobian>& tjs)
{
    std::vector<double> r;
    for (size_t k = 0; k + 1 < tjs.size(); ++k) {
        SigmaSet s1 = sigmas(tjs[k + 1]);
        Real Dt = s1.s33 * s1.s44 - s1.s34 * s1.s43;
        Real v = -Real(tjs[k].D) * s1.s33 / (Real(tjs[k].a_ij(0, 0)) * Dt);
        r.push_back(static_cast<double>(v));
    }
    return r;
}

TorsionSequence torsion_sequence(int N, double mu, double x1, const std::vector<TransitionJacobian>& tjs)
{
    if (static_cast<int>(tjs.size()) != N) throw UsageError("torsion_sequence: need one Jacobian per node");
    TorsionSequence s = torsion_sequence(N, mu, x1, 0.0);
    s.r = coupling_ratios(tjs);
    double C = s.C_rec;
    s.x[0] = x1;
    s.b4[0] = 0.5 * C * x1;
    for (int k = 0; k + 1 < N; ++k) {
        s.x[k + 1] = 0.5 * C * (1.0 + s.r[k]) * s.x[k] - s.b4[k];
        s.b4[k + 1] = s.r[k] * s.x[k];
    }
    double g = 0;
    for (int k = 0; k < N; ++k) {
        SigmaSet sg = sigmas(tjs[k]);
        g = std::max(g, std::abs(tjs[k].gamma));
        g = std::max(g, std::abs(static_cast<double>(sg.s34 / sg.s33)));
    }
    s.b1 = s.b3 = 1.05 * (g > 0 ? g : 1.0) * x1;
    for (int k = 0; k < N; ++k)
        if (!(s.x[k] > 0) || !(s.b4[k] > 0))
            throw TorsionError("torsion sequence lost positivity at k = " + std::to_string(k + 1));
    return s;
}

void link_intermediary(const TransitionJacobian& tj_k, const TransitionJacobian& tj_k1, const Vec4& bk,
                       const Vec4& bk1, int p_exp, const Real& Ln, MatR4& M, MatR4& N)
{
    MatR4 Bk = window_matrix_mp(tj_k, bk, p_exp);
    MatR4 Bk1 = window_matrix_mp(tj_k1, bk1, p_exp);
    MatR4 W1 = to_mp(tj_k.A_proj) * Bk;
    MatR4 G = MatR4::Identity();
    G(0, 0) = 1 / Ln;
    G(2, 2) = Ln;
    MatR4 W2 = G * Bk1;
    intermediary(W1, W2, M, N);
}

TorsionCertificate torsion_certificate(const TorsionSequence& seq, const std::vector<TransitionJacobian>& tjs,
                                       int p_exp, double beta)
{
    if (tjs.empty()) throw UsageError("torsion_certificate: no Jacobians");
    if (beta < 6 + 4 * p_exp) throw UsageError("torsion_certificate: beta below 6 + 4p");
    TorsionCertificate tc;
    Real mu = seq.mu;
    Real Ln = pow(mu, Real(-beta));
    auto tjk = [&](int k) -> const TransitionJacobian& { return tjs[std::min<size_t>(k, tjs.size() - 1)]; };
    Real worst_inv = 0, worst_third = 0, worst_det = 0;
    for (int k = 0; k + 1 < seq.N; ++k) {
        const TransitionJacobian& A = tjk(k);
        Vec4 bk = seq.window_b(k), bk1 = seq.window_b(k + 1);
        MatR4 M, N, Mi;
        link_intermediary(A, tjk(k + 1), bk, bk1, p_exp, Ln, M, N);
        Real det;
        if (!invert_mp(M, Mi, &det)) throw CertificateError("M_k singular at k = " + std::to_string(k + 1));
        double nrm = static_cast<double>(inf_norm(Mi * N));
        tc.norms.push_back(nrm);
        if (nrm > tc.max_norm) {
            tc.max_norm = nrm;
            tc.worst_k = k + 1;
        }
        // leading-order forms, written with the Sigma of window k+1; the (3,4) entry carries a minus sign
        SigmaSet s = sigmas(tjk(k + 1));
        const Mat4& a = A.a_ij;
        Real a11 = a(0, 0), a12 = a(0, 1), a41 = a(3, 0), a42 = a(3, 1);
        Real D = A.D, Dt = D / s.delta;
        Real b1 = bk[0], b2 = bk[1], c3 = bk1[2], c4 = bk1[3];
        Real pref = pow(mu, -p_exp - 1) / (2 * D * s.s33);
        MatR4 F;
        F << -(Dt - a42 * s.s33) / b1, mu * a12 * Dt / b1, 0, -a12 * s.s33 / b1,
            -a41 * s.s33 / b2, -mu * a11 * Dt / b2, 0, a11 * s.s33 / b2,
            a41 * s.s34 / c3, mu * s.s34 * D / c3, 0, -a11 * s.s34 / c3,
            -a41 * s.s33 / c4, -mu * s.s33 * D / c4, 0, a11 * s.s33 / c4;
        F *= pref;
        Real mx = 0, err = 0, third = 0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                mx = std::max(mx, Real(abs(Mi(i, j))));
                err = std::max(err, Real(abs(Mi(i, j) - F(i, j))));
            }
        for (int i = 0; i < 4; ++i) third = std::max(third, Real(abs(Mi(i, 2))));
        worst_inv = std::max(worst_inv, Real(err / mx));
        worst_third = std::max(worst_third, Real(third * pow(mu, p_exp + 1)));
        Real det_form = -2 * pow(mu, 4 * p_exp + 3 - Real(beta)) * b1 * b2 * c3 * c4 * D * s.s33;
        worst_det = std::max(worst_det, Real(abs(det / det_form - 1)));
    }
    tc.inverse_rel_err = static_cast<double>(worst_inv);
    tc.third_col_max = static_cast<double>(worst_third);
    tc.det_ratio_dev = static_cast<double>(worst_det);
    tc.K_measured = (1.0 - tc.max_norm) / (seq.mu * seq.mu);
    if (tc.max_norm > 1.0 - seq.K_margin * seq.mu * seq.mu + 1e-12)
        throw CertificateError("torsion bound violated at k = " + std::to_string(tc.worst_k) +
                               ": |M^-1 N| = " + std::to_string(tc.max_norm));
    return tc;
}

} // namespace adw
