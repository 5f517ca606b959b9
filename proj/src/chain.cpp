#include "adw/chain.hpp"
#include "adw/errors.hpp"
#include <cmath>

namespace adw {

void TransitionChain::set_y(int k, double y)
{
    nodes.at(k).y = y;
    nodes[k].action = action(y);
    if (k > 0) steps[k - 1] = nodes[k].y - nodes[k - 1].y;
    if (k + 1 < size()) steps[k] = nodes[k + 1].y - nodes[k].y;
}

TransitionChain build_esc(const Vec2& A0, double delta_hat, const std::vector<int>& pattern,
                          const HeteroclinicCurve& curve, const ModelParams& params)
{
    double dbar = curve.delta_bar();
    if (!(delta_hat > 0)) throw UsageError("delta_hat must be positive");
    if (delta_hat > 0.75 * dbar)
        throw ChainError("delta_hat = " + std::to_string(delta_hat) + " exceeds (3/4) delta_bar = " +
                         std::to_string(0.75 * dbar));
    TransitionChain ch;
    ch.A0 = A0;
    ch.omega_perp = params.freq.perp();
    ch.delta_hat = delta_hat;
    ch.delta_bar = dbar;
    ch.C1 = dbar / (16.0 * params.mu);
    ch.pattern = pattern;
    ch.kind = ChainKind::ESC;
    double y = 0;
    for (size_t k = 0; k <= pattern.size(); ++k) {
        ChainNode nd;
        nd.y = nd.y_ref = y;
        nd.action = ch.action(y);
        nd.interval_halfwidth = ch.C1 * params.mu;
        nd.e_k = 0.5 * nd.interval_halfwidth;
        ch.nodes.push_back(nd);
        if (k < pattern.size()) {
            int s = pattern[k];
            if (s < -1 || s > 1) throw UsageError("pattern entries must be -1, 0 or +1");
            ch.steps.push_back(s * delta_hat);
            y += s * delta_hat;
        }
    }
    for (double d : ch.steps) curve.at(d);
    return ch;
}

ThetaPair theta_functions(double y, int k, const TransitionChain& chain, int l_minus, int l_plus,
                          const HeteroclinicCurve& curve, const SectionSpec& spec)
{
    const ChainNode& nd = chain.nodes.at(k);
    if (!(std::abs(y - nd.y_ref) < nd.interval_halfwidth))
        throw DomainError("theta_functions", "y outside E_k");
    if (k + 1 >= chain.size()) throw DomainError("theta_functions", "k is the last node");
    double delta = chain.nodes[k + 1].y - y;
    double phi1 = curve.at(delta).phi1;
    return ThetaPair{wrap_angle(phi1 - l_minus * spec.nu), wrap_angle(phi1 + l_plus * spec.nu)};
}

bool image_bracket(const std::function<double(double)>& F, double lo, double hi, double y0,
                   double& a, double& b, int samples)
{
    // scan outward from y0 so the bracket nearest to the ESC node wins
    double f0 = F(y0);
    if (f0 == 0.0) {
        a = b = y0;
        return true;
    }
    double best = INFINITY;
    bool found = false;
    for (int dir : {+1, -1}) {
        double end = dir > 0 ? hi : lo;
        double prev_y = y0, prev_f = f0;
        for (int i = 1; i <= samples; ++i) {
            double yy = y0 + (end - y0) * i / (samples + 0.5);
            double ff = F(yy);
            if (std::signbit(ff) != std::signbit(prev_f) && std::abs(ff) < 1.5 && std::abs(prev_f) < 1.5) {
                double dist = std::abs(prev_y - y0);
                if (dist < best) {
                    best = dist;
                    a = std::min(prev_y, yy);
                    b = std::max(prev_y, yy);
                    found = true;
                }
                break;
            }
            prev_y = yy;
            prev_f = ff;
        }
    }
    return found;
}

ElasticResult elastic_adjust(int k, double theta_target, TransitionChain& chain,
                             const std::function<double(double)>& theta_prime)
{
    ChainNode& nd = chain.nodes.at(k);
    auto F = [&](double y) { return wrap_centered(theta_prime(y) - theta_target); };
    double lo = nd.y_ref - nd.e_k, hi = nd.y_ref + nd.e_k;
    double a, b;
    if (!image_bracket(F, lo, hi, nd.y_ref, a, b))
        throw ChainError("target angle not in the image of theta'_k over O_k");
    double fa = F(a);
    for (int it = 0; it < 200 && b - a > 4e-16 * std::max(1.0, std::abs(a)); ++it) {
        double m = 0.5 * (a + b);
        double fm = F(m);
        if (fm == 0.0) {
            a = b = m;
            break;
        }
        if (std::signbit(fm) == std::signbit(fa)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    double y = 0.5 * (a + b);
    double h = std::max(1e-9, 1e-3 * nd.e_k);
    double slope = (F(y + h) - F(y - h)) / (2 * h);
    double fy = F(y);
    if (slope != 0.0) {
        double yn = y - fy / slope;
        if (yn >= a - (b - a) && yn <= b + (b - a) && std::abs(F(yn)) <= std::abs(fy)) {
            y = yn;
            fy = F(y);
        }
    }
    ElasticResult r{y, std::abs(fy), a, b, slope};
    chain.set_y(k, y);
    chain.kind = ChainKind::EEC;
    for (int j : {k - 1, k})
        if (j >= 0 && j < static_cast<int>(chain.steps.size()) && std::abs(chain.steps[j]) > chain.delta_bar)
            throw ChainError("elastic adjustment broke the transition property at link " + std::to_string(j));
    return r;
}

} // namespace adw
