#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vortexscore/forward_sim.hpp"
#include "vortexscore/strain_field.hpp"

namespace vortexscore {

/// One regression sample: the successor state x_{k+1}, its step index k, and the
/// backward drift target (x_k - x_{k+1}) / dt.
struct TrainingPair {
    State x_next;
    int k = 0;
    Vec2 target;
};

/// One pair per transition per trajectory, N (L - 1) in total, trajectory-major.
std::vector<TrainingPair> build_training_pairs(const TrajectoryBatch& batch);

/// Sinusoidal embedding of physical time t_k = k dt: [sin(w_j t), cos(w_j t)] for each frequency.
struct TimeEmbeddingSpec {
    std::vector<double> frequencies;

    int dim() const { return 2 * static_cast<int>(frequencies.size()); }

    /// w_j = 10000^(-2j/D) / dt for j = 0 .. D/2 - 1, i.e. the usual positional encoding of the
    /// step index. The fastest frequency turns by one radian per step and the slowest period
    /// is far longer than T.
    static TimeEmbeddingSpec geometric(int dim, const TimeGrid& grid);

    friend bool operator==(const TimeEmbeddingSpec&, const TimeEmbeddingSpec&) = default;
};

/// Throws PreconditionError unless 0 <= k <= L - 2.
std::vector<double> time_embed(const TimeEmbeddingSpec& spec, int k, const TimeGrid& grid);

/// Standardization of inputs (x_next) and targets, per component.
struct NormStats {
    Vec2 input_mean{0.0, 0.0};
    Vec2 input_std{1.0, 1.0};
    Vec2 target_mean{0.0, 0.0};
    Vec2 target_std{1.0, 1.0};

    static NormStats identity() { return {}; }
    /// Population statistics over the given pairs. A component with zero spread gets std 1.
    static NormStats from_pairs(std::span<const TrainingPair> pairs);

    Vec2 normalize_input(Vec2 x) const;
    Vec2 denormalize_input(Vec2 x) const;
    Vec2 normalize_target(Vec2 y) const;
    Vec2 denormalize_target(Vec2 y) const;

    friend bool operator==(const NormStats&, const NormStats&) = default;
};

enum class Activation { SiLU, Tanh };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Layer sizes: state encoder 2 -> encoder_width, then [encoder | time embedding] feeds
/// `hidden_layers` dense layers of `hidden_width`, then a linear 2-wide output.
struct Architecture {
    int encoder_width = 64;
    int embed_dim = 32;
    int hidden_width = 128;
    int hidden_layers = 3;
    Activation activation = Activation::SiLU;

    friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out

    bool operator==(const DenseLayer& o) const { return weight == o.weight && bias == o.bias; }
};

/// Same shapes as the model's layers.
using Gradient = std::vector<DenseLayer>;

class ScoreModel {
public:
    ScoreModel(Architecture arch, TimeGrid grid, NormStats norm, TimeEmbeddingSpec embed,
               std::vector<DenseLayer> layers);

    /// Weights uniform in +-1/sqrt(fan_in), biases zero.
    static ScoreModel initialize(const Architecture& arch, const TimeGrid& grid, const NormStats& norm,
                                 std::uint64_t seed);

    const Architecture& architecture() const { return arch_; }
    const TimeGrid& grid() const { return grid_; }
    const NormStats& norm() const { return norm_; }
    const TimeEmbeddingSpec& embedding() const { return embed_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }

    const std::string& dataset_hash() const { return dataset_hash_; }
    void set_dataset_hash(std::string h) { dataset_hash_ = std::move(h); }

    std::size_t parameter_count() const;
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> flat);

    /// Embedding of every step index 0 .. L-2 as columns.
    const Eigen::MatrixXd& embedding_table() const { return embed_table_; }

    bool operator==(const ScoreModel& o) const {
        return arch_ == o.arch_ && grid_ == o.grid_ && norm_ == o.norm_ && embed_ == o.embed_ &&
               layers_ == o.layers_ && dataset_hash_ == o.dataset_hash_;
    }

private:
    void validate() const;

    Architecture arch_;
    TimeGrid grid_;
    NormStats norm_;
    TimeEmbeddingSpec embed_;
    std::vector<DenseLayer> layers_;
    std::string dataset_hash_;
    Eigen::MatrixXd embed_table_;
};

/// Activations kept from a forward pass for backpropagation.
struct ForwardCache {
    std::vector<Eigen::MatrixXd> inputs;  // input to each layer
    std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
};

/// Forward pass in normalized units. `x` is 2 x B normalized states, `embed` is D x B.
Eigen::MatrixXd forward_normalized(const ScoreModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& embed,
                                   ForwardCache* cache = nullptr);

/// Backpropagates dLoss/dOutput (2 x B) through a cached forward pass.
Gradient backward_normalized(const ScoreModel& model, const ForwardCache& cache, const Eigen::MatrixXd& d_out);

/// Drift v(x_next, k) in physical units. Throws ModelDivergenceError on non-finite output.
Vec2 net_forward(const ScoreModel& model, State x_next, int k);

/// Batched net_forward at a single step index.
std::vector<Vec2> predict(const ScoreModel& model, std::span<const State> x_next, int k);

/// Batched net_forward over pairs (each at its own k).
std::vector<Vec2> predict(const ScoreModel& model, std::span<const TrainingPair> pairs);

/// Mean over pairs of |v(x_{k+1}, k) - target|^2, in physical units.
double loss(const ScoreModel& model, std::span<const TrainingPair> pairs);

/// The same functional with prediction and target both standardized by the model's NormStats.
/// This is what training minimizes.
double normalized_loss(const ScoreModel& model, std::span<const TrainingPair> pairs);

/// Exact gradient of normalized_loss over the minibatch with respect to every weight and bias.
Gradient loss_gradient(const ScoreModel& model, std::span<const TrainingPair> minibatch);

/// Flattened in the same order as ScoreModel::parameters().
std::vector<double> flatten(const Gradient& g);

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 1024;
    int max_epochs = 200;
    int patience = 20;
    std::uint64_t seed = 0;

    void validate() const;
};

struct AdamState {
    std::vector<DenseLayer> m;
    std::vector<DenseLayer> v;
    std::int64_t step = 0;

    static AdamState zeros_like(const ScoreModel& model);
};

/// Bias-corrected Adam update of every parameter in place.
void adam_step(AdamState& state, ScoreModel& model, const Gradient& grad, const TrainConfig& cfg);

struct TrainingReport {
    std::vector<double> train_loss;  // mean minibatch normalized loss per epoch
    std::vector<double> val_loss;    // normalized validation loss per epoch
    int best_epoch = -1;
    int epochs_run = 0;
    bool stopped_early = false;
};

struct TrainResult {
    ScoreModel model;
    TrainingReport report;
};

/// Minibatch Adam on normalized_loss. Shuffles with a per-epoch substream of cfg.seed and keeps
/// the parameters with the lowest validation loss. max_epochs == 0 returns model_init unchanged.
TrainResult train(std::span<const TrainingPair> train_pairs, std::span<const TrainingPair> val_pairs,
                  const TrainConfig& cfg, const ScoreModel& model_init);

}  // namespace vortexscore
