/** \file poly.hpp
    \brief Dense bivariate polynomials in (Q, P) truncated at a fixed total degree.
*/
#pragma once
#include <vector>

namespace adw {

class Poly2 {
public:
    Poly2() = default;
    explicit Poly2(int degree) : deg_(degree), c_((degree + 1) * (degree + 1), 0.0) {}

    int degree() const { return deg_; }
    double& at(int i, int j) { return c_[i * (deg_ + 1) + j]; }
    double at(int i, int j) const { return c_[i * (deg_ + 1) + j]; }

    static Poly2 monomial(int degree, int i, int j, double c = 1.0);

    Poly2 operator+(const Poly2& o) const;
    Poly2 operator-(const Poly2& o) const;
    Poly2 operator*(const Poly2& o) const;
    Poly2 operator*(double s) const;
    Poly2& operator+=(const Poly2& o);

    Poly2 dQ() const;
    Poly2 dP() const;
    /// homogeneous part of total degree s
    Poly2 part(int s) const;
    bool is_zero(double tol = 0.0) const;

    double eval(double Q, double P) const;
    /// value, d/dQ, d/dP
    void eval_grad(double Q, double P, double& v, double& vQ, double& vP) const;

private:
    int deg_ = 0;
    std::vector<double> c_;
};

/// {f, g} = f_Q g_P - f_P g_Q
Poly2 poisson(const Poly2& f, const Poly2& g);
/// exp(L_chi) f with L_chi f = {f, chi}, truncated
Poly2 lie_exp(const Poly2& f, const Poly2& chi);
/// sum_{m>=1} (-1)^m x^(2m)/(2m)!, i.e. cos(x) - 1
Poly2 cos_minus_one(const Poly2& x);

} // namespace adw
