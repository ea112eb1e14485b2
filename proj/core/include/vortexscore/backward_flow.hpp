#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vortexscore/forward_sim.hpp"
#include "vortexscore/score_net.hpp"

namespace vortexscore {

/// Batched backward drift v(x_{k+1}, k): one output per input state, all at the same k.
using DriftField = std::function<std::vector<Vec2>(std::span<const State>, int)>;

/// Adapts a trained model to a DriftField.
DriftField model_drift(const ScoreModel& model);

struct ReconstructionResult {
    std::vector<State> predicted_x0;
    std::vector<std::size_t> source_index;
    /// Indices whose prediction left the axisymmetric domain (r <= 0) at some backward step.
    /// They are recorded, never clamped.
    std::vector<std::size_t> out_of_domain;
    std::string model_hash;
    std::string dataset_hash;
};

/// x_k = x_{k+1} + v(x_{k+1}, k) dt.
State backward_step(const ScoreModel& model, State x_next, int k);

/// Applies backward_step for k = L-2 down to 0 to every terminal state. No noise is injected.
/// `domain` selects whether r <= 0 excursions are flagged (Axisymmetric3D only).
ReconstructionResult reconstruct(const ScoreModel& model, std::span<const State> terminals,
                                 FlowKind domain = FlowKind::Planar2D);

/// Same recursion with an arbitrary drift field, e.g. an exact oracle drift.
/// `domain` (optional) is the flow kind used to flag r <= 0 excursions.
ReconstructionResult reconstruct(const DriftField& drift, const TimeGrid& grid, std::span<const State> terminals,
                                 FlowKind domain = FlowKind::Planar2D);

}  // namespace vortexscore
