/** \file windows.hpp
    \brief Windows, the intermediary-matrix alignment test, the window class B and simulated torsion.
*/
#pragma once
#include "adw/transition.hpp"
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <functional>
#include <optional>
#include <string>

namespace adw {

/// wide enough for L^n = mu^-beta next to mu^(p+1) entries
using Real = boost::multiprecision::cpp_bin_float_100;
using MatR4 = Eigen::Matrix<Real, 4, 4>;
using VecR4 = Eigen::Matrix<Real, 4, 1>;

MatR4 to_mp(const Mat4& m);
VecR4 to_mp(const Vec4& v);
Mat4 to_double(const MatR4& m);
Vec4 to_double(const VecR4& v);
/// equilibrated Gauss-Jordan with full pivoting; false if singular
bool invert_mp(const MatR4& M, MatR4& inv, Real* det = nullptr);
Real inf_norm(const MatR4& m);

/// value and Jacobian of a C1 correction at a cube point
using Correction = std::function<void(const Vec4& x, Vec4& value, Mat4& jac)>;

struct Window {
    Vec4 center = Vec4::Zero();
    Mat4 matrix = Mat4::Identity();
    Correction correction;  ///< empty for affine windows

    Window() = default;
    Window(const Vec4& c, const Mat4& W, Correction corr = {}) : center(c), matrix(W), correction(std::move(corr)) {}
    Vec4 operator()(const Vec4& x) const;
};

struct AlignmentCertificate {
    Mat4 M_int = Mat4::Zero();
    Mat4 N_int = Mat4::Zero();
    Mat4 M_inv = Mat4::Zero();
    double chi_a = 0;
    double chi_c = 0;
    double chi_c_coarse = 0;  ///< chi_c at half the sample density
    bool passed = false;
    double margin = 0;        ///< 1 - (chi_a + chi_c / (1 - chi_c))
    std::string reason;
};

/// M = [[W1^1, -W2^3], [W1^2, -W2^4]], N = [[-W2^1, W1^3], [-W2^2, W1^4]]
void intermediary(const MatR4& W1, const MatR4& W2, MatR4& M, MatR4& N);

/// affine test with all linear algebra in multiprecision; delta = c2 - c1
AlignmentCertificate certify_affine_mp(const MatR4& W1, const MatR4& W2, const VecR4& delta);

AlignmentCertificate align_affine(const Window& w1, const Window& w2);

struct OracleResult {
    bool passed = false;
    std::string reason;
    Vec4 location = Vec4::Zero();  ///< worst grid point (y_h, y_v)
    double max_abs = 0;            ///< largest |x| component found
};

/// brute force: solves W1(x_h, y_v) = W2(y_h, x_v) on a grid_n^4 grid of [-1, 1]^4
OracleResult align_oracle(const Window& w1, const Window& w2, int grid_n);

/// C1 alignment test; chi_c sampled on a samples^4 grid of (-2, 2)^4 and again at twice the density
AlignmentCertificate align_c1(const Window& w1, const Window& w2, int samples = 8);

/// combine an affine certificate with a chi_c bound
void apply_c1(AlignmentCertificate& cert, double chi_c);

struct WindowClassB {
    Vec4 b = Vec4::Ones();  ///< O(1) coefficients; entries of B carry mu^p
    int p_exp = 6;
    double mu = 0;
    Mat4 B = Mat4::Identity();
    double Sigma33 = 0, Sigma34 = 0, Sigma43 = 0, Sigma44 = 0;
    double delta_mu = 0;
    double det_B = 0, det_formula = 0;
    double cond2_residual = 0;   ///< max zero-claimed entry of A B over max |A B|
};

WindowClassB build_window_class(const TransitionJacobian& tj, const Vec4& b, int p_exp);

/// B in multiprecision (entries down to mu^(p+1))
MatR4 window_matrix_mp(const TransitionJacobian& tj, const Vec4& b, int p_exp);

struct TorsionSequence {
    int N = 0;
    double mu = 0;
    std::vector<double> x;   ///< b2^k
    std::vector<double> b4;  ///< b4^k
    std::vector<double> r;   ///< coupling ratios between consecutive links (1 for identical links)
    double b1 = 0, b3 = 0;
    double C_rec = 2;
    double b_freq = 0;
    double alpha = 0;        ///< recursion angle
    double K_margin = 0;     ///< (1 - C/2) / mu^2

    Vec4 window_b(int k) const { return Vec4(b1, x.at(k), b3, b4.at(k)); }
};

/// identical links: x_{k+2} = C x_{k+1} - x_k, x_2 = (C/2) x_1
TorsionSequence torsion_sequence(int N, double mu, double x1, double gamma);

/// links with different Jacobians: r_k couples link k to window k+1
TorsionSequence torsion_sequence(int N, double mu, double x1, const std::vector<TransitionJacobian>& tjs);

/// r_k = -D_k Sigma33^{k+1} / (a11^k Dtilde^{k+1})
std::vector<double> coupling_ratios(const std::vector<TransitionJacobian>& tjs);

struct TorsionCertificate {
    double max_norm = 0;
    int worst_k = -1;
    double K_measured = 0;          ///< (1 - max_norm) / mu^2
    double det_ratio_dev = 0;       ///< max |det M_k / closed-form determinant - 1|
    double inverse_rel_err = 0;     ///< max |M^-1 - leading form| / max |M^-1|
    double third_col_max = 0;       ///< max |(M^-1)_{i3}| * mu^(p+1)
    std::vector<double> norms;
};

/// L^n = mu^-beta; tjs[k] is the Jacobian of link k (the last one is reused past the end)
TorsionCertificate torsion_certificate(const TorsionSequence& seq, const std::vector<TransitionJacobian>& tjs,
                                       int p_exp, double beta);

/// intermediary pair for link k of a sequence, exposed for diagnostics
void link_intermediary(const TransitionJacobian& tj_k, const TransitionJacobian& tj_k1, const Vec4& bk,
                       const Vec4& bk1, int p_exp, const Real& Ln, MatR4& M, MatR4& N);

} // namespace adw
