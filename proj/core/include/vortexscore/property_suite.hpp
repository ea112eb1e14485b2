#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Numerical property checks of the pipeline against the analytic oracle. Shared by the
// `oracle-check` command and the acceptance tests.

namespace vortexscore::checks {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Planar2D (a = 1, nu = 1, L = 200, N = 10^4) empirical mean and variance of Z_k against the
/// exact chain marginal at k = 10, 100, L-1; each within 3 standard errors.
CheckResult forward_moments(std::uint64_t seed = 11);

/// Trapezoidal integral of the frozen-coefficient kernel over R^2 equals e^{S dt} to 1e-6.
CheckResult kernel_normalization();

/// With a point-mass prior the posterior-mean drift has divergence exactly -2/dt.
CheckResult delta_prior_divergence();

/// Posterior-mean drift minus (-(c-1)/dt x + sigma^2 score) shrinks linearly when dt halves.
CheckResult score_drift_identity();

/// Binned Monte Carlo regression of (x_k - x_{k+1}) / dt on x_{k+1} matches the posterior-mean
/// drift within 3 SE in each of 20 bins.
CheckResult tower_property(std::uint64_t seed = 5);

/// 2 nu grad log rho == -sqrt(2 nu / dt) eps for the heat kernel.
CheckResult heat_kernel_identity();

/// Central differences of the log marginal density match gaussian_score to 1e-6.
CheckResult log_density_gradient();

/// Backpropagated gradient of the normalized loss against central differences (h = 1e-5),
/// relative error <= 1e-5 for every parameter.
CheckResult backprop_gradient(std::uint64_t seed = 3);

/// Noise-free Euler global error at T halves (within 20%) each time the step count doubles.
CheckResult euler_convergence();

std::vector<CheckResult> run_all();

}  // namespace vortexscore::checks
