#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>

#include "vortexscore/backward_flow.hpp"
#include "vortexscore/forward_sim.hpp"
#include "vortexscore/io.hpp"

namespace vortexscore {

/// Relative MAE versus s, one series per component with +-1 std error bars.
/// Rows with several (flow_kind, nu) groups are drawn as separate series. Output is a pure
/// function of the rows. Throws SchemaError on an empty row set.
std::string render_results_svg(std::span<const ResultsRow> rows, const std::string& title = {});

void emit_svg(const std::filesystem::path& results_csv, const std::filesystem::path& out_path,
              const std::string& title = {});

/// Overlay of the first `samples` forward trajectories in the (r, z) plane, with the shared
/// start point and, when given, the matching reconstructed initial positions.
std::string render_trajectories_svg(const TrajectoryBatch& batch, std::size_t samples,
                                    const ReconstructionResult* predictions = nullptr);

}  // namespace vortexscore
