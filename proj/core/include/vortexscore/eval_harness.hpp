#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vortexscore/forward_sim.hpp"
#include "vortexscore/score_net.hpp"
#include "vortexscore/strain_field.hpp"

namespace vortexscore {

/// Everything a single trial needs besides the scale s and the seed.
struct TrialConfig {
    StrainConfig strain{FlowKind::Axisymmetric3D, 1.0, 1.0};
    TimeGrid grid{2.0, 200};
    std::size_t n_samples = 10000;
    double train_fraction = 0.8;
    Architecture arch;
    TrainConfig train;
};

/// mean_i |x0 - xhat0_i| / sum_k |x_{k+1,i} - x_{k,i}| in one component.
/// Throws DegenerateError if some trajectory has zero total displacement in that component.
double relative_mae(State true_x0, std::span<const State> predicted, const TrajectoryBatch& trajectories,
                    Component component);

struct TrialResult {
    double s = 0.0;
    double nu = 0.0;
    Component component = Component::R;
    double rel_mae = 0.0;
    std::uint64_t seed = 0;
    double runtime_seconds = 0.0;
};

struct TrialOutcome {
    TrialResult r;
    TrialResult z;
    TrainingReport report;
    std::size_t out_of_domain = 0;
};

/// Derived per-trial seeds: data generation, network initialization, minibatch shuffling.
struct TrialSeeds {
    std::uint64_t data;
    std::uint64_t init;
    std::uint64_t shuffle;
    static TrialSeeds derive(std::uint64_t trial_seed);
};

/// generate -> split -> pairs -> train -> reconstruct validation terminals -> relative MAE.
/// Deterministic in (s, cfg, seed).
TrialOutcome run_trial(double s, const TrialConfig& cfg, std::uint64_t seed);

struct ComponentStats {
    int n = 0;
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (n - 1)
    double se = 0.0;
    double rel_se = 0.0;
};

ComponentStats summarize(std::span<const double> values);

struct StoppingRule {
    double target_rel_se = 0.06;
    int max_trials = 80;
    bool require_both = true;  // false: stop once either component reaches the target
};

struct TrialStatistics {
    FlowKind kind = FlowKind::Axisymmetric3D;
    double nu = 0.0;
    double s = 0.0;
    ComponentStats r;
    ComponentStats z;
    bool converged = false;
    std::string error;  // non-empty when the trials for this s failed
    std::vector<double> r_values;
    std::vector<double> z_values;
};

/// Returns (rel_mae R, rel_mae Z) for the trial with the given seed.
using TrialFn = std::function<std::pair<double, double>(std::uint64_t seed)>;

/// Runs seeds base_seed, base_seed + 1, ... until rel_se <= target (see StoppingRule) with at
/// least two trials, or until max_trials. Non-convergence is reported, not thrown.
TrialStatistics run_until_converged(const TrialFn& trial, const StoppingRule& rule, std::uint64_t base_seed);

TrialStatistics run_until_converged(double s, const TrialConfig& cfg, const StoppingRule& rule,
                                    std::uint64_t base_seed);

struct SweepResult {
    std::vector<TrialStatistics> rows;
};

using SweepProgress = std::function<void(const TrialStatistics&)>;

/// run_until_converged for every s, in order. A failing s is recorded and the sweep continues.
SweepResult sweep(std::span<const double> s_values, const TrialConfig& cfg, const StoppingRule& rule,
                  std::uint64_t base_seed, const SweepProgress& progress = {});

}  // namespace vortexscore
