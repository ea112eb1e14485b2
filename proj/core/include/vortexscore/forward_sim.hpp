#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "vortexscore/error.hpp"
#include "vortexscore/strain_field.hpp"

namespace vortexscore {

/// Uniform grid on [0, T] with L points; dt = T / (L - 1).
class TimeGrid {
public:
    TimeGrid(double T, int L);

    double T() const { return T_; }
    int L() const { return L_; }
    double dt() const { return dt_; }
    int transitions() const { return L_ - 1; }
    double time(int k) const { return k * dt_; }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    double T_;
    int L_;
    double dt_;
};

using Trajectory = std::vector<State>;

/// Starting point shared by every particle: (e^{2aT} s, s).
State initial_state(const StrainConfig& cfg, const TimeGrid& grid, double s);

/// One Euler-Maruyama step: x + b(x) dt + sigma sqrt(dt) eps.
State step_forward(const StrainConfig& cfg, const TimeGrid& grid, State s, Vec2 eps);

/// True when the state would be discarded (axisymmetric flow with r <= 0).
inline bool is_rejected_state(const StrainConfig& cfg, State s) {
    return cfg.kind() == FlowKind::Axisymmetric3D && !(s.r > 0.0);
}

/// Runs L-1 forward steps, pulling one standard-normal pair per step from `noise`.
/// Returns nullopt if an axisymmetric trajectory reaches r <= 0 at any step.
template <typename Noise>
    requires std::invocable<Noise&> && std::convertible_to<std::invoke_result_t<Noise&>, Vec2>
std::optional<Trajectory> simulate_trajectory(const StrainConfig& cfg, const TimeGrid& grid, State x0,
                                              Noise&& noise) {
    if (is_rejected_state(cfg, x0)) throw DomainError("initial state outside the domain");
    Trajectory traj;
    traj.reserve(static_cast<std::size_t>(grid.L()));
    traj.push_back(x0);
    State x = x0;
    for (int k = 0; k < grid.transitions(); ++k) {
        x = step_forward(cfg, grid, x, noise());
        if (is_rejected_state(cfg, x)) return std::nullopt;
        traj.push_back(x);
    }
    return traj;
}

/// N retained trajectories on a grid, stored row-major as [trajectory][step].
struct TrajectoryBatch {
    StrainConfig cfg;
    TimeGrid grid;
    double scale_s = 1.0;
    std::uint64_t seed = 0;
    std::uint64_t attempts = 0;  // attempts made, including rejected ones
    std::vector<State> states;

    std::size_t size() const { return states.size() / static_cast<std::size_t>(grid.L()); }
    bool empty() const { return states.empty(); }

    State state(std::size_t n, int k) const { return states[n * grid.L() + static_cast<std::size_t>(k)]; }
    std::span<const State> trajectory(std::size_t n) const {
        return std::span<const State>(states).subspan(n * grid.L(), static_cast<std::size_t>(grid.L()));
    }
    State terminal(std::size_t n) const { return state(n, grid.L() - 1); }
    std::vector<State> terminals() const;

    bool operator==(const TrajectoryBatch&) const = default;
};

/// Simulates attempts 0, 1, 2, ... from (e^{2aT} s, s), each with its own noise substream
/// keyed by (seed, attempt), and keeps the first N that are not rejected.
/// Throws PreconditionError when more than 100 N attempts are needed.
TrajectoryBatch generate_batch(const StrainConfig& cfg, const TimeGrid& grid, double s, std::size_t n,
                               std::uint64_t seed);

/// First floor(fraction N) trajectories to train, the rest to validation.
std::pair<TrajectoryBatch, TrajectoryBatch> split_batch(const TrajectoryBatch& batch, double train_fraction);

}  // namespace vortexscore
