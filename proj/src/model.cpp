#include "adw/model.hpp"
#include "adw/errors.hpp"
#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace adw {

double wrap_angle(double x)
{
    double r = std::fmod(x, kTwoPi);
    if (r < 0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

double wrap_centered(double x)
{
    double r = wrap_angle(x + kPi) - kPi;
    return r;
}

Frequency::Frequency(Vec2 w, double C, double tau) : omega(w), dioph_C(C), dioph_tau(tau)
{
    if (w.norm() == 0.0) throw UsageError("frequency vector must be non-zero");
    if (!(C > 0)) throw UsageError("dioph_C must be positive");
    if (!(tau >= 1)) throw UsageError("dioph_tau must be >= 1");
}

Perturbation::Perturbation(int gamma_cut, const std::vector<Mode>& modes) : gamma_cut_(gamma_cut)
{
    if (gamma_cut < 1) throw UsageError("gamma_cut must be a positive integer");
    std::map<std::pair<int, int>, double> table;
    for (const Mode& m : modes) {
        if (m.k1 == 0 && m.k2 == 0) throw UsageError("mode k=0 is not allowed");
        if (std::abs(m.k1) + std::abs(m.k2) > gamma_cut)
            throw UsageError("mode (" + std::to_string(m.k1) + "," + std::to_string(m.k2) + ") exceeds gamma_cut");
        if (!(m.f > 0)) throw UsageError("coefficients f_k must be positive");
        for (auto key : {std::make_pair(m.k1, m.k2), std::make_pair(-m.k1, -m.k2)}) {
            auto it = table.find(key);
            if (it != table.end() && it->second != m.f)
                throw UsageError("f_k != f_{-k} for k=(" + std::to_string(m.k1) + "," + std::to_string(m.k2) + ")");
            table[key] = m.f;
        }
    }
    for (const auto& [k, f] : table) modes_.push_back({k.first, k.second, f});
}

Perturbation Perturbation::uniform(int gamma_cut, double fk)
{
    std::vector<Mode> m;
    for (int k1 = -gamma_cut; k1 <= gamma_cut; ++k1)
        for (int k2 = -gamma_cut; k2 <= gamma_cut; ++k2)
            if ((k1 || k2) && std::abs(k1) + std::abs(k2) <= gamma_cut) m.push_back({k1, k2, fk});
    return Perturbation(gamma_cut, m);
}

ModelParams::ModelParams(double mu_, Frequency fr, Perturbation pe) : mu(mu_), freq(fr), pert(std::move(pe))
{
    if (!(mu_ >= 0) || mu_ > mu_max) throw UsageError("mu must lie in [0, " + std::to_string(mu_max) + "]");
}

ModelParams ModelParams::defaults(double mu)
{
    return ModelParams(mu, Frequency(Vec2(1.0, 0.5 * (1.0 + std::sqrt(5.0))), 0.5, 1.0), Perturbation::uniform(3));
}

Vec6 PhasePoint::to_vec() const
{
    Vec6 v;
    v << q, phi[0], phi[1], p, A[0], A[1];
    return v;
}

PhasePoint PhasePoint::from_vec(const Vec6& v)
{
    return PhasePoint(v[0], Vec2(v[1], v[2]), v[3], Vec2(v[4], v[5]));
}

PhasePoint PhasePoint::wrapped() const
{
    return PhasePoint(wrap_angle(q), Vec2(wrap_angle(phi[0]), wrap_angle(phi[1])), p, A);
}

PerturbationValue perturbation_eval(const Vec2& phi, const Perturbation& pert)
{
    PerturbationValue r{0.0, Vec2::Zero(), Mat2::Zero()};
    for (const Mode& m : pert.modes()) {
        double arg = m.k1 * phi[0] + m.k2 * phi[1];
        double c = std::cos(arg), s = std::sin(arg);
        Vec2 k(m.k1, m.k2);
        r.value += m.f * c;
        r.grad -= m.f * s * k;
        r.hess -= m.f * c * (k * k.transpose());
    }
    return r;
}

double eval_hamiltonian(const PhasePoint& pt, const ModelParams& params)
{
    double f = perturbation_eval(pt.phi, params.pert).value;
    double cq = std::cos(pt.q);
    return params.freq.omega.dot(pt.A) + 0.5 * pt.p * pt.p + (cq - 1.0) + params.mu * (1.0 - cq) * f;
}

Vec6 vector_field(const PhasePoint& pt, const ModelParams& params)
{
    PerturbationValue f = perturbation_eval(pt.phi, params.pert);
    double sq = std::sin(pt.q), cq = std::cos(pt.q);
    Vec6 v;
    v[0] = pt.p;
    v[1] = params.freq.omega[0];
    v[2] = params.freq.omega[1];
    v[3] = sq - params.mu * sq * f.value;
    v[4] = -params.mu * (1.0 - cq) * f.grad[0];
    v[5] = -params.mu * (1.0 - cq) * f.grad[1];
    return v;
}

double diophantine_margin(const Frequency& freq, int k_max)
{
    double best = INFINITY;
    for (int k1 = -k_max; k1 <= k_max; ++k1) {
        int rest = k_max - std::abs(k1);
        for (int k2 = -rest; k2 <= rest; ++k2) {
            if (!k1 && !k2) continue;
            double n = std::abs(k1) + std::abs(k2);
            double v = std::abs(freq.omega[0] * k1 + freq.omega[1] * k2) * std::pow(n, freq.dioph_tau);
            best = std::min(best, v);
        }
    }
    return best;
}

} // namespace adw
