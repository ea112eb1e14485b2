#include "vortexscore/property_suite.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "vortexscore/analytic_oracle.hpp"
#include "vortexscore/forward_sim.hpp"
#include "vortexscore/rng.hpp"
#include "vortexscore/score_net.hpp"

namespace vortexscore::checks {

namespace {

std::string sci(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

}  // namespace

CheckResult forward_moments(std::uint64_t seed) {
    const StrainConfig cfg(FlowKind::Planar2D, 1.0, 1.0);
    const TimeGrid grid(2.0, 200);
    const std::size_t n = 10000;
    const auto batch = generate_batch(cfg, grid, 1.0, n, seed);
    const auto chain = oracle::planar_chain(cfg, grid, initial_state(cfg, grid, 1.0));

    CheckResult res{"forward_moments", true, {}};
    std::ostringstream detail;
    for (int k : {10, 100, grid.L() - 1}) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += batch.state(i, k).z;
        const double mean = sum / n;
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += (batch.state(i, k).z - mean) * (batch.state(i, k).z - mean);
        const double var = ss / (n - 1);

        const auto exact = oracle::chain_marginal(chain.z, k);
        const double se_mean = std::sqrt(exact.variance / n);
        const double se_var = exact.variance * std::sqrt(2.0 / (n - 1));
        const double zm = (mean - exact.mean) / se_mean;
        const double zv = (var - exact.variance) / se_var;
        const bool ok = std::abs(zm) <= 3.0 && std::abs(zv) <= 3.0;
        res.passed = res.passed && ok;
        detail << "k=" << k << " mean z-score " << sci(zm) << ", var z-score " << sci(zv) << "; ";
    }
    res.detail = detail.str();
    return res;
}

CheckResult kernel_normalization() {
    CheckResult res{"kernel_normalization", true, {}};
    std::ostringstream detail;
    const double dt = 0.01;
    const struct {
        StrainConfig cfg;
        State x;
    } cases[] = {{StrainConfig(FlowKind::Axisymmetric3D, 1.0, 1.0), {1.5, 0.5}},
                 {StrainConfig(FlowKind::Axisymmetric3D, 1.0, 0.01), {0.7, -2.0}},
                 {StrainConfig(FlowKind::Planar2D, 1.0, 1.0), {3.0, 1.0}}};
    for (const auto& c : cases) {
        const Vec2 b = drift(c.cfg, c.x);
        const Vec2 centre = c.x + dt * b;
        const double sd = c.cfg.sigma() * std::sqrt(dt);
        const int m = 480;
        const double half = 12.0 * sd;
        const double h = 2.0 * half / m;
        double acc = 0.0;
        for (int i = 0; i <= m; ++i) {
            const double wi = (i == 0 || i == m) ? 0.5 : 1.0;
            for (int j = 0; j <= m; ++j) {
                const double wj = (j == 0 || j == m) ? 0.5 : 1.0;
                const State y{centre.r - half + i * h, centre.z - half + j * h};
                acc += wi * wj * oracle::frozen_transition_density(c.cfg, c.x, y, dt);
            }
        }
        const double integral = acc * h * h;
        const double expected = std::exp(reaction(c.cfg, c.x) * dt);
        const double rel = std::abs(integral - expected) / expected;
        res.passed = res.passed && rel <= 1e-6;
        detail << to_string(c.cfg.kind()) << " nu=" << c.cfg.nu() << ": rel err " << sci(rel) << "; ";
    }
    res.detail = detail.str();
    return res;
}

CheckResult delta_prior_divergence() {
    const StrainConfig cfg(FlowKind::Planar2D, 1.0, 1.0);
    CheckResult res{"delta_prior_divergence", true, {}};
    std::ostringstream detail;
    for (int L : {100, 200}) {
        const TimeGrid grid(2.0, L);
        const auto chain = oracle::planar_chain(cfg, grid, initial_state(cfg, grid, 1.0));
        const double expected = -2.0 / grid.dt();
        const double div = oracle::posterior_mean_drift_divergence(chain, 0);
        const double rel = std::abs(div - expected) / std::abs(expected);

        // independent route: central differences of the drift itself
        const State x{50.0, 1.3};
        const double h = 1e-3;
        const double fd = (oracle::posterior_mean_drift(chain.r, 0, x.r + h) -
                           oracle::posterior_mean_drift(chain.r, 0, x.r - h)) / (2 * h) +
                          (oracle::posterior_mean_drift(chain.z, 0, x.z + h) -
                           oracle::posterior_mean_drift(chain.z, 0, x.z - h)) / (2 * h);
        const double fd_rel = std::abs(fd - expected) / std::abs(expected);
        const bool ok = rel <= 4 * std::numeric_limits<double>::epsilon() && fd_rel <= 1e-8;
        res.passed = res.passed && ok;
        detail << "L=" << L << ": analytic rel err " << sci(rel) << ", finite-difference rel err " << sci(fd_rel)
               << "; ";
    }
    res.detail = detail.str();
    return res;
}

CheckResult score_drift_identity() {
    const StrainConfig cfg(FlowKind::Planar2D, 1.0, 1.0);
    const double t = 1.0;
    double residual[2];
    int idx = 0;
    for (int L : {101, 201}) {
        const TimeGrid grid(2.0, L);
        const auto chain = oracle::planar_chain(cfg, grid, initial_state(cfg, grid, 1.0));
        const int k = static_cast<int>(std::lround(t / grid.dt()));
        const auto next = oracle::chain_marginal(chain.z, k + 1);
        const double x = next.mean + std::sqrt(next.variance);
        const double exact = oracle::posterior_mean_drift(chain.z, k, x);
        const double approx = -(chain.z.c - 1.0) / grid.dt() * x +
                              cfg.sigma() * cfg.sigma() * oracle::gaussian_score(next.mean, next.variance, x);
        residual[idx++] = std::abs(exact - approx);
    }
    const double ratio = residual[0] / residual[1];
    return {"score_drift_identity", ratio >= 1.6 && ratio <= 2.4,
            "residual dt: " + sci(residual[0]) + ", dt/2: " + sci(residual[1]) + ", ratio " + sci(ratio)};
}

CheckResult tower_property(std::uint64_t seed) {
    const StrainConfig cfg(FlowKind::Planar2D, 1.0, 1.0);
    const TimeGrid grid(2.0, 200);
    const auto chain = oracle::planar_chain(cfg, grid, initial_state(cfg, grid, 1.0)).z;
    const int k = 20;
    const auto prior = oracle::chain_marginal(chain, k);
    const auto next = oracle::chain_marginal(chain, k + 1);
    const double dt = grid.dt();

    std::mt19937_64 engine(mix64(seed));
    std::normal_distribution<double> normal;
    const int samples = 100000;
    const int bins = 20;
    const double lo = next.mean - 3.0 * std::sqrt(next.variance);
    const double width = 6.0 * std::sqrt(next.variance) / bins;
    std::vector<double> n(bins), sx(bins), sy(bins), syy(bins);
    for (int i = 0; i < samples; ++i) {
        const double xk = prior.mean + std::sqrt(prior.variance) * normal(engine);
        const double x1 = chain.c * xk + std::sqrt(chain.q) * normal(engine);
        const int b = static_cast<int>(std::floor((x1 - lo) / width));
        if (b < 0 || b >= bins) continue;
        const double y = (xk - x1) / dt;
        n[b] += 1;
        sx[b] += x1;
        sy[b] += y;
        syy[b] += y * y;
    }
    CheckResult res{"tower_property", true, {}};
    double worst = 0.0;
    for (int b = 0; b < bins; ++b) {
        if (n[b] < 2) {
            res.passed = false;
            continue;
        }
        const double mx = sx[b] / n[b];
        const double my = sy[b] / n[b];
        const double var = (syy[b] - n[b] * my * my) / (n[b] - 1);
        const double se = std::sqrt(var / n[b]);
        // The oracle is affine in x_{k+1}, so its bin average is its value at the bin's mean.
        const double z = (my - oracle::posterior_mean_drift(chain, k, mx)) / se;
        worst = std::max(worst, std::abs(z));
    }
    res.passed = res.passed && worst <= 3.0;
    res.detail = "worst bin z-score " + sci(worst);
    return res;
}

CheckResult heat_kernel_identity() {
    const double nu = 1.0, dt = 0.01, eps = 0.7;
    const double x = 0.0;
    const double x_tilde = x + std::sqrt(2.0 * nu * dt) * eps;
    const double lhs = 2.0 * nu * oracle::gaussian_score(x, 2.0 * nu * dt, x_tilde);
    const double rhs = -std::sqrt(2.0 * nu / dt) * eps;
    const double rel = std::abs(lhs - rhs) / std::abs(rhs);
    return {"heat_kernel_identity", rel <= 1e-14, "rel err " + sci(rel)};
}

CheckResult log_density_gradient() {
    const StrainConfig cfg(FlowKind::Planar2D, 1.0, 1.0);
    const TimeGrid grid(2.0, 200);
    const auto chain = oracle::planar_chain(cfg, grid, initial_state(cfg, grid, 1.0));
    double worst = 0.0;
    for (int k : {1, 50, 199}) {
        const auto m = oracle::chain_marginal(chain.z, k);
        auto log_density = [&](std::span<const double> x) {
            const double d = x[0] - m.mean;
            return -0.5 * std::log(2.0 * std::numbers::pi * m.variance) - d * d / (2.0 * m.variance);
        };
        for (double offset : {-1.5, 0.3, 2.0}) {
            const double x = m.mean + offset * std::sqrt(m.variance);
            const double h = 1e-4 * std::sqrt(m.variance);
            const double fd = oracle::finite_diff_grad(log_density, std::vector<double>{x}, h)[0];
            const double exact = oracle::gaussian_score(m.mean, m.variance, x);
            worst = std::max(worst, std::abs(fd - exact) / std::abs(exact));
        }
    }
    return {"log_density_gradient", worst <= 1e-6, "worst rel err " + sci(worst)};
}

CheckResult backprop_gradient(std::uint64_t seed) {
    std::mt19937_64 engine(mix64(seed));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const TimeGrid grid(2.0, 20);
    Architecture arch;
    arch.encoder_width = 5;
    arch.embed_dim = 4;
    arch.hidden_width = 7;
    arch.hidden_layers = 2;

    NormStats norm;
    norm.input_mean = {3.0, -1.0};
    norm.input_std = {2.0, 0.5};
    norm.target_mean = {0.4, 1.5};
    norm.target_std = {1.7, 3.0};
    ScoreModel model = ScoreModel::initialize(arch, grid, norm, seed);
    // non-zero biases so every parameter is exercised
    for (auto& l : model.layers())
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = 0.3 * u(engine);

    std::vector<TrainingPair> pairs;
    std::uniform_int_distribution<int> kd(0, grid.transitions() - 1);
    for (int i = 0; i < 10; ++i)
        pairs.push_back({{3.0 + 2.0 * u(engine), -1.0 + 0.5 * u(engine)}, kd(engine), {3.0 * u(engine), 4.0 * u(engine)}});

    const auto analytic = flatten(loss_gradient(model, pairs));
    auto params = model.parameters();
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double orig = params[i];
        params[i] = orig + h;
        model.set_parameters(params);
        const double fp = normalized_loss(model, pairs);
        params[i] = orig - h;
        model.set_parameters(params);
        const double fm = normalized_loss(model, pairs);
        params[i] = orig;
        const double fd = (fp - fm) / (2 * h);
        // floor keeps round-off on near-zero components from dominating
        const double denom = std::max({std::abs(analytic[i]), std::abs(fd), 1e-4});
        worst = std::max(worst, std::abs(analytic[i] - fd) / denom);
    }
    model.set_parameters(params);
    return {"backprop_gradient", worst <= 1e-5,
            std::to_string(params.size()) + " parameters, worst rel err " + sci(worst)};
}

CheckResult euler_convergence() {
    const StrainConfig cfg(FlowKind::Axisymmetric3D, 1.0, 0.0);
    const State x0{1.0, 1.0};
    const double T = 2.0;
    const double exact = x0.z * std::exp(2.0 * cfg.a() * T);
    std::vector<double> errors;
    for (int steps : {100, 200, 400, 800}) {
        const TimeGrid grid(T, steps + 1);
        auto traj = simulate_trajectory(cfg, grid, x0, [] { return Vec2{0.0, 0.0}; });
        errors.push_back(std::abs(traj->back().z - exact));
    }
    CheckResult res{"euler_convergence", true, {}};
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
        const double ratio = errors[i] / errors[i + 1];
        res.passed = res.passed && ratio >= 1.6 && ratio <= 2.4;
        res.detail += "ratio " + sci(ratio) + "; ";
    }
    return res;
}

std::vector<CheckResult> run_all() {
    return {forward_moments(),      kernel_normalization(), delta_prior_divergence(),
            score_drift_identity(), tower_property(),       heat_kernel_identity(),
            log_density_gradient(), backprop_gradient(),    euler_convergence()};
}

}  // namespace vortexscore::checks
