#include "vortexscore/forward_sim.hpp"

#include <cmath>
#include <string>

#include "vortexscore/rng.hpp"

namespace vortexscore {

TimeGrid::TimeGrid(double T, int L) : T_(T), L_(L), dt_(0.0) {
    if (!(T > 0.0) || !std::isfinite(T)) throw PreconditionError("terminal time T must be > 0");
    if (L < 2) throw PreconditionError("time grid needs L >= 2 points");
    dt_ = T / static_cast<double>(L - 1);
}

State initial_state(const StrainConfig& cfg, const TimeGrid& grid, double s) {
    return {std::exp(2.0 * cfg.a() * grid.T()) * s, s};
}

State step_forward(const StrainConfig& cfg, const TimeGrid& grid, State s, Vec2 eps) {
    const double dt = grid.dt();
    const Vec2 b = drift(cfg, s);
    const double amp = cfg.sigma() * std::sqrt(dt);
    return {s.r + b.r * dt + amp * eps.r, s.z + b.z * dt + amp * eps.z};
}

std::vector<State> TrajectoryBatch::terminals() const {
    std::vector<State> out;
    out.reserve(size());
    for (std::size_t n = 0; n < size(); ++n) out.push_back(terminal(n));
    return out;
}

TrajectoryBatch generate_batch(const StrainConfig& cfg, const TimeGrid& grid, double s, std::size_t n,
                               std::uint64_t seed) {
    if (n == 0) throw PreconditionError("sample count N must be >= 1");
    if (!(s > 0.0)) throw PreconditionError("scale parameter s must be > 0");

    TrajectoryBatch batch{cfg, grid, s, seed, 0, {}};
    batch.states.reserve(n * static_cast<std::size_t>(grid.L()));
    const State x0 = initial_state(cfg, grid, s);
    const std::uint64_t max_attempts = 100 * static_cast<std::uint64_t>(n);

    std::size_t kept = 0;
    std::uint64_t attempt = 0;
    while (kept < n) {
        if (attempt >= max_attempts)
            throw PreconditionError("rejection rate too high: " + std::to_string(kept) + " of " +
                                    std::to_string(n) + " trajectories kept after " +
                                    std::to_string(attempt) + " attempts");
        auto traj = simulate_trajectory(cfg, grid, x0, NoiseStream(seed, attempt));
        ++attempt;
        if (!traj) continue;
        batch.states.insert(batch.states.end(), traj->begin(), traj->end());
        ++kept;
    }
    batch.attempts = attempt;
    return batch;
}

std::pair<TrajectoryBatch, TrajectoryBatch> split_batch(const TrajectoryBatch& batch, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw PreconditionError("train fraction must lie in (0, 1)");
    const std::size_t n = batch.size();
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
    if (n_train == 0) throw PreconditionError("training split would be empty");
    if (n_train == n) throw PreconditionError("validation split would be empty");

    const auto cut = batch.states.begin() + static_cast<std::ptrdiff_t>(n_train * batch.grid.L());
    TrajectoryBatch train{batch.cfg, batch.grid, batch.scale_s, batch.seed, batch.attempts,
                          std::vector<State>(batch.states.begin(), cut)};
    TrajectoryBatch val{batch.cfg, batch.grid, batch.scale_s, batch.seed, batch.attempts,
                        std::vector<State>(cut, batch.states.end())};
    return {std::move(train), std::move(val)};
}

}  // namespace vortexscore
