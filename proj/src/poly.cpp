#include "adw/poly.hpp"
#include <cmath>
#include <stdexcept>

namespace adw {

Poly2 Poly2::monomial(int degree, int i, int j, double c)
{
    Poly2 p(degree);
    if (i + j <= degree) p.at(i, j) = c;
    return p;
}

Poly2 Poly2::operator+(const Poly2& o) const
{
    Poly2 r = *this;
    r += o;
    return r;
}

Poly2& Poly2::operator+=(const Poly2& o)
{
    if (o.deg_ != deg_) throw std::logic_error("Poly2 degree mismatch");
    for (size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
    return *this;
}

Poly2 Poly2::operator-(const Poly2& o) const
{
    return *this + o * -1.0;
}

Poly2 Poly2::operator*(double s) const
{
    Poly2 r = *this;
    for (double& v : r.c_) v *= s;
    return r;
}

Poly2 Poly2::operator*(const Poly2& o) const
{
    if (o.deg_ != deg_) throw std::logic_error("Poly2 degree mismatch");
    Poly2 r(deg_);
    for (int i = 0; i <= deg_; ++i)
        for (int j = 0; i + j <= deg_; ++j) {
            double a = at(i, j);
            if (a == 0.0) continue;
            for (int k = 0; i + j + k <= deg_; ++k)
                for (int l = 0; i + j + k + l <= deg_; ++l) r.at(i + k, j + l) += a * o.at(k, l);
        }
    return r;
}

Poly2 Poly2::dQ() const
{
    Poly2 r(deg_);
    for (int i = 1; i <= deg_; ++i)
        for (int j = 0; i + j <= deg_; ++j) r.at(i - 1, j) = i * at(i, j);
    return r;
}

Poly2 Poly2::dP() const
{
    Poly2 r(deg_);
    for (int i = 0; i <= deg_; ++i)
        for (int j = 1; i + j <= deg_; ++j) r.at(i, j - 1) = j * at(i, j);
    return r;
}

Poly2 Poly2::part(int s) const
{
    Poly2 r(deg_);
    for (int i = 0; i <= s && i <= deg_; ++i)
        if (s - i <= deg_) r.at(i, s - i) = at(i, s - i);
    return r;
}

bool Poly2::is_zero(double tol) const
{
    for (int i = 0; i <= deg_; ++i)
        for (int j = 0; i + j <= deg_; ++j)
            if (std::abs(at(i, j)) > tol) return false;
    return true;
}

double Poly2::eval(double Q, double P) const
{
    double v, a, b;
    eval_grad(Q, P, v, a, b);
    return v;
}

void Poly2::eval_grad(double Q, double P, double& v, double& vQ, double& vP) const
{
    std::vector<double> qp(deg_ + 1, 1.0), pp(deg_ + 1, 1.0);
    for (int i = 1; i <= deg_; ++i) {
        qp[i] = qp[i - 1] * Q;
        pp[i] = pp[i - 1] * P;
    }
    v = vQ = vP = 0.0;
    for (int i = 0; i <= deg_; ++i)
        for (int j = 0; i + j <= deg_; ++j) {
            double c = at(i, j);
            if (c == 0.0) continue;
            v += c * qp[i] * pp[j];
            if (i) vQ += c * i * qp[i - 1] * pp[j];
            if (j) vP += c * j * qp[i] * pp[j - 1];
        }
}

Poly2 poisson(const Poly2& f, const Poly2& g)
{
    return f.dQ() * g.dP() - f.dP() * g.dQ();
}

Poly2 lie_exp(const Poly2& f, const Poly2& chi)
{
    Poly2 sum = f, term = f;
    for (int n = 1; n <= f.degree(); ++n) {
        term = poisson(term, chi) * (1.0 / n);
        if (term.is_zero()) break;
        sum += term;
    }
    return sum;
}

Poly2 cos_minus_one(const Poly2& x)
{
    Poly2 x2 = x * x, pw = x2, sum(x.degree());
    double fact = 2.0;
    for (int m = 1; 2 * m <= x.degree(); ++m) {
        sum += pw * ((m % 2 ? -1.0 : 1.0) / fact);
        pw = pw * x2;
        fact *= (2 * m + 1) * (2 * m + 2);
    }
    return sum;
}

} // namespace adw
