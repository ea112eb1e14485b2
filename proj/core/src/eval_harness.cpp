#include "vortexscore/eval_harness.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "vortexscore/backward_flow.hpp"
#include "vortexscore/error.hpp"
#include "vortexscore/io.hpp"
#include "vortexscore/rng.hpp"

namespace vortexscore {

double relative_mae(State true_x0, std::span<const State> predicted, const TrajectoryBatch& trajectories,
                    Component component) {
    if (predicted.size() != trajectories.size())
        throw PreconditionError("predictions are not aligned with the trajectories");
    if (predicted.empty()) throw PreconditionError("relative MAE over an empty set");
    const double x0 = vortexscore::component(true_x0, component);
    double acc = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const auto path = trajectories.trajectory(i);
        double travel = 0.0;
        for (std::size_t k = 0; k + 1 < path.size(); ++k)
            travel += std::abs(vortexscore::component(path[k + 1], component) - vortexscore::component(path[k], component));
        if (!(travel > 0.0))
            throw DegenerateError("trajectory " + std::to_string(i) + " has zero total displacement in " +
                                  std::string(to_string(component)));
        acc += std::abs(x0 - vortexscore::component(predicted[i], component)) / travel;
    }
    return acc / static_cast<double>(predicted.size());
}

TrialSeeds TrialSeeds::derive(std::uint64_t trial_seed) {
    return {substream_seed(trial_seed, 0), substream_seed(trial_seed, 1), substream_seed(trial_seed, 2)};
}

TrialOutcome run_trial(double s, const TrialConfig& cfg, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    const TrialSeeds seeds = TrialSeeds::derive(seed);

    const TrajectoryBatch batch = generate_batch(cfg.strain, cfg.grid, s, cfg.n_samples, seeds.data);
    const auto [train_batch, val_batch] = split_batch(batch, cfg.train_fraction);
    const auto train_pairs = build_training_pairs(train_batch);
    const auto val_pairs = build_training_pairs(val_batch);

    ScoreModel init = ScoreModel::initialize(cfg.arch, cfg.grid, NormStats::from_pairs(train_pairs), seeds.init);
    init.set_dataset_hash(batch_hash(batch));
    TrainConfig tc = cfg.train;
    tc.seed = seeds.shuffle;
    TrainResult trained = train(train_pairs, val_pairs, tc, init);

    const auto terminals = val_batch.terminals();
    const ReconstructionResult rec = reconstruct(trained.model, terminals, cfg.strain.kind());
    const State x0 = initial_state(cfg.strain, cfg.grid, s);

    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    TrialOutcome out;
    out.r = {s, cfg.strain.nu(), Component::R, relative_mae(x0, rec.predicted_x0, val_batch, Component::R), seed, elapsed};
    out.z = {s, cfg.strain.nu(), Component::Z, relative_mae(x0, rec.predicted_x0, val_batch, Component::Z), seed, elapsed};
    out.report = std::move(trained.report);
    out.out_of_domain = rec.out_of_domain.size();
    return out;
}

ComponentStats summarize(std::span<const double> values) {
    ComponentStats st;
    st.n = static_cast<int>(values.size());
    if (values.empty()) return st;
    double sum = 0.0;
    for (double v : values) sum += v;
    st.mean = sum / st.n;
    if (st.n < 2) {
        st.std = st.se = st.rel_se = std::numeric_limits<double>::quiet_NaN();
        return st;
    }
    double ss = 0.0;
    for (double v : values) ss += (v - st.mean) * (v - st.mean);
    st.std = std::sqrt(ss / (st.n - 1));
    st.se = st.std / std::sqrt(static_cast<double>(st.n));
    if (st.mean > 0.0)
        st.rel_se = st.se / st.mean;
    else
        st.rel_se = st.se == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return st;
}

TrialStatistics run_until_converged(const TrialFn& trial, const StoppingRule& rule, std::uint64_t base_seed) {
    if (rule.max_trials < 2) throw PreconditionError("max_trials must be >= 2");
    TrialStatistics out;
    for (int i = 0; i < rule.max_trials; ++i) {
        const auto [r, z] = trial(base_seed + static_cast<std::uint64_t>(i));
        out.r_values.push_back(r);
        out.z_values.push_back(z);
        out.r = summarize(out.r_values);
        out.z = summarize(out.z_values);
        if (out.r.n < 2) continue;
        const bool r_ok = out.r.rel_se <= rule.target_rel_se;
        const bool z_ok = out.z.rel_se <= rule.target_rel_se;
        if (rule.require_both ? (r_ok && z_ok) : (r_ok || z_ok)) {
            out.converged = true;
            break;
        }
    }
    return out;
}

TrialStatistics run_until_converged(double s, const TrialConfig& cfg, const StoppingRule& rule,
                                    std::uint64_t base_seed) {
    auto stats = run_until_converged(
        [&](std::uint64_t seed) {
            const auto t = run_trial(s, cfg, seed);
            return std::pair{t.r.rel_mae, t.z.rel_mae};
        },
        rule, base_seed);
    stats.kind = cfg.strain.kind();
    stats.nu = cfg.strain.nu();
    stats.s = s;
    return stats;
}

SweepResult sweep(std::span<const double> s_values, const TrialConfig& cfg, const StoppingRule& rule,
                  std::uint64_t base_seed, const SweepProgress& progress) {
    if (s_values.empty()) throw PreconditionError("sweep needs at least one s value");
    for (double s : s_values)
        if (!(s > 0.0)) throw PreconditionError("every s must be > 0");
    SweepResult res;
    for (double s : s_values) {
        TrialStatistics row;
        try {
            row = run_until_converged(s, cfg, rule, base_seed);
        } catch (const Error& e) {
            row.kind = cfg.strain.kind();
            row.nu = cfg.strain.nu();
            row.s = s;
            row.error = e.what();
        }
        if (progress) progress(row);
        res.rows.push_back(std::move(row));
    }
    return res;
}

}  // namespace vortexscore
