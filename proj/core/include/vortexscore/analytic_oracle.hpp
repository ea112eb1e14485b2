#pragma once

#include <functional>
#include <span>
#include <vector>

#include "vortexscore/backward_flow.hpp"
#include "vortexscore/forward_sim.hpp"
#include "vortexscore/strain_field.hpp"

// Closed-form ground truth for the linear (Planar2D) Gaussian chain and short-time kernels.
// Nothing here touches the network; it is the reference the pipeline is checked against.

namespace vortexscore::oracle {

/// Scalar linear-Gaussian chain x_{k+1} = c x_k + N(0, q), x_0 fixed.
struct GaussianChain {
    double c = 1.0;
    double q = 0.0;
    double x0 = 0.0;
    int L = 2;
    double dt = 1.0;
};

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

/// The Planar2D Euler-Maruyama recursion, one chain per component:
/// c_r = 1 - 2a dt, c_z = 1 + 2a dt, q = sigma^2 dt.
struct PlanarChain {
    GaussianChain r;
    GaussianChain z;
};

PlanarChain planar_chain(const StrainConfig& cfg, const TimeGrid& grid, State x0);

/// mean x0 c^k, variance q sum_{j<k} c^{2j}.
Moments chain_marginal(const GaussianChain& chain, int k);

/// -(x - mean) / variance. Throws DegenerateError for variance <= 0.
double gaussian_score(double mean, double variance, double x);

/// E[(x_k - x_{k+1}) / dt | x_{k+1}] for the chain, by Gaussian conjugacy.
/// Requires 0 <= k <= L - 2; a zero prior variance (k = 0) pulls straight to the mean.
double posterior_mean_drift(const GaussianChain& chain, int k, double x_next);

/// d/dx_next of posterior_mean_drift: (c v_k / (c^2 v_k + q) - 1) / dt.
double posterior_mean_drift_slope(const GaussianChain& chain, int k);

Vec2 posterior_mean_drift(const PlanarChain& chain, int k, State x_next);

/// Spatial divergence of the 2D posterior-mean drift (sum of the two slopes).
double posterior_mean_drift_divergence(const PlanarChain& chain, int k);

/// The posterior-mean drift as a DriftField, for substitution into reconstruct().
DriftField chain_drift(const PlanarChain& chain);

/// Frozen-coefficient short-time kernel with reaction factor:
/// e^{S(x) dt} prod_i (2 pi sigma^2 dt)^{-1/2} exp(-(y_i - x_i - b_i(x) dt)^2 / (2 sigma^2 dt)).
/// The reaction factor is applied once to the product of the two 1D Gaussians.
double frozen_transition_density(const StrainConfig& cfg, State x, State x_tilde, double dt);

/// Central differences, one coordinate at a time.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double h);

}  // namespace vortexscore::oracle
