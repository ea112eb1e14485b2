#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vortexscore/backward_flow.hpp"
#include "vortexscore/eval_harness.hpp"
#include "vortexscore/forward_sim.hpp"
#include "vortexscore/score_net.hpp"

namespace vortexscore {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr int kResultsSchemaVersion = 1;

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string to_hex(std::uint64_t h);

/// Hash binding a batch's metadata and payload; the value stored in the dataset sidecar.
std::string batch_hash(const TrajectoryBatch& batch);

/// Hash of a model's architecture, grid, normalization and parameters.
std::string model_hash(const ScoreModel& model);

// ---- datasets: raw little-endian float64 payload at `path`, JSON sidecar at `path`.meta.json

std::filesystem::path sidecar_path(const std::filesystem::path& payload);

void write_dataset(const std::filesystem::path& path, const TrajectoryBatch& batch);

/// Throws CorruptionError (truncated payload, hash mismatch), VersionError, SchemaError, IoError.
TrajectoryBatch read_dataset(const std::filesystem::path& path);

// ---- checkpoints: self-describing JSON text

std::string checkpoint_to_string(const ScoreModel& model);
ScoreModel checkpoint_from_string(const std::string& text);
void write_checkpoint(const std::filesystem::path& path, const ScoreModel& model);
ScoreModel read_checkpoint(const std::filesystem::path& path);

// ---- predictions: "index r z" table

void write_predictions(std::ostream& out, const ReconstructionResult& result);
void write_predictions(const std::filesystem::path& path, const ReconstructionResult& result);
ReconstructionResult read_predictions(const std::filesystem::path& path);

// ---- results CSV

/// Header line of the results CSV (after the "#schema=" comment line).
std::string results_csv_header();
void write_results_csv(std::ostream& out, const SweepResult& result);
void write_results_csv(const std::filesystem::path& path, const SweepResult& result);

/// One parsed row of the results CSV.
struct ResultsRow {
    std::string flow_kind;
    double nu = 0.0;
    double s = 0.0;
    std::string component;
    int n_trials = 0;
    double mean_rel_mae = 0.0;
    double std = 0.0;
    double se = 0.0;
    double rel_se = 0.0;
    bool converged = false;
};

/// Throws SchemaError on an empty file, wrong header, or malformed row.
std::vector<ResultsRow> read_results_csv(std::istream& in);
std::vector<ResultsRow> read_results_csv(const std::filesystem::path& path);

// ---- run manifests

struct TrialManifest {
    TrialConfig config;
    double s = 1.0;
    std::uint64_t seed = 0;
};

std::string manifest_to_string(const TrialManifest& m);
TrialManifest manifest_from_string(const std::string& text);
TrialManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const TrialManifest& m);

/// Per-trial metrics CSV: flow_kind,nu,s,seed,component,rel_mae.
void write_trial_metrics(std::ostream& out, const TrialManifest& m, const TrialOutcome& outcome);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace vortexscore
