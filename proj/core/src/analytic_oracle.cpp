#include "vortexscore/analytic_oracle.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "vortexscore/error.hpp"

namespace vortexscore::oracle {

PlanarChain planar_chain(const StrainConfig& cfg, const TimeGrid& grid, State x0) {
    if (cfg.kind() != FlowKind::Planar2D) throw PreconditionError("the exact Gaussian chain exists only for Planar2D");
    const double dt = grid.dt();
    const double q = cfg.sigma() * cfg.sigma() * dt;
    const double two_a = 2.0 * cfg.a();
    return {{1.0 - two_a * dt, q, x0.r, grid.L(), dt}, {1.0 + two_a * dt, q, x0.z, grid.L(), dt}};
}

Moments chain_marginal(const GaussianChain& chain, int k) {
    if (k < 0 || k > chain.L - 1) throw PreconditionError("chain index out of range");
    double mean = chain.x0;
    double var = 0.0;
    for (int j = 0; j < k; ++j) {
        mean *= chain.c;
        var = chain.c * chain.c * var + chain.q;
    }
    return {mean, var};
}

double gaussian_score(double mean, double variance, double x) {
    if (!(variance > 0.0)) throw DegenerateError("Gaussian score needs variance > 0");
    return -(x - mean) / variance;
}

namespace {

void require_transition(const GaussianChain& chain, int k) {
    if (k < 0 || k > chain.L - 2)
        throw PreconditionError("transition index " + std::to_string(k) + " out of range");
}

double posterior_gain(const GaussianChain& chain, double prior_var) {
    const double denom = chain.c * chain.c * prior_var + chain.q;
    return denom > 0.0 ? chain.c * prior_var / denom : 1.0 / chain.c;
}

}  // namespace

double posterior_mean_drift(const GaussianChain& chain, int k, double x_next) {
    require_transition(chain, k);
    const Moments prior = chain_marginal(chain, k);
    const double gain = posterior_gain(chain, prior.variance);
    const double x_k = prior.mean + gain * (x_next - chain.c * prior.mean);
    return (x_k - x_next) / chain.dt;
}

double posterior_mean_drift_slope(const GaussianChain& chain, int k) {
    require_transition(chain, k);
    return (posterior_gain(chain, chain_marginal(chain, k).variance) - 1.0) / chain.dt;
}

Vec2 posterior_mean_drift(const PlanarChain& chain, int k, State x_next) {
    return {posterior_mean_drift(chain.r, k, x_next.r), posterior_mean_drift(chain.z, k, x_next.z)};
}

double posterior_mean_drift_divergence(const PlanarChain& chain, int k) {
    return posterior_mean_drift_slope(chain.r, k) + posterior_mean_drift_slope(chain.z, k);
}

DriftField chain_drift(const PlanarChain& chain) {
    return [chain](std::span<const State> x, int k) {
        std::vector<Vec2> out;
        out.reserve(x.size());
        for (const State& s : x) out.push_back(posterior_mean_drift(chain, k, s));
        return out;
    };
}

double frozen_transition_density(const StrainConfig& cfg, State x, State x_tilde, double dt) {
    if (!(dt > 0.0)) throw PreconditionError("dt must be > 0");
    const Vec2 b = drift(cfg, x);
    const double S = reaction(cfg, x);
    const double var = cfg.sigma() * cfg.sigma() * dt;
    if (!(var > 0.0)) throw DegenerateError("transition density needs sigma > 0");
    const double dr = x_tilde.r - x.r - b.r * dt;
    const double dz = x_tilde.z - x.z - b.z * dt;
    const double norm = 1.0 / (2.0 * std::numbers::pi * var);
    return std::exp(S * dt) * norm * std::exp(-(dr * dr + dz * dz) / (2.0 * var));
}

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double h) {
    std::vector<double> point(x.begin(), x.end());
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = point[i];
        point[i] = orig + h;
        const double fp = f(point);
        point[i] = orig - h;
        const double fm = f(point);
        point[i] = orig;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

}  // namespace vortexscore::oracle
