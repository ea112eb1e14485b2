#include "vortexscore/score_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "vortexscore/error.hpp"
#include "vortexscore/rng.hpp"

namespace vortexscore {

std::vector<TrainingPair> build_training_pairs(const TrajectoryBatch& batch) {
    if (batch.empty()) throw PreconditionError("cannot build training pairs from an empty batch");
    const double dt = batch.grid.dt();
    const int steps = batch.grid.transitions();
    std::vector<TrainingPair> pairs;
    pairs.reserve(batch.size() * static_cast<std::size_t>(steps));
    for (std::size_t n = 0; n < batch.size(); ++n) {
        for (int k = 0; k < steps; ++k) {
            const State xk = batch.state(n, k);
            const State x1 = batch.state(n, k + 1);
            pairs.push_back({x1, k, {(xk.r - x1.r) / dt, (xk.z - x1.z) / dt}});
        }
    }
    return pairs;
}

// ---------------------------------------------------------------------------------------------
// time embedding

TimeEmbeddingSpec TimeEmbeddingSpec::geometric(int dim, const TimeGrid& grid) {
    if (dim <= 0 || dim % 2 != 0) throw PreconditionError("time embedding dimension must be even and > 0");
    TimeEmbeddingSpec spec;
    const int half = dim / 2;
    spec.frequencies.reserve(static_cast<std::size_t>(half));
    for (int j = 0; j < half; ++j)
        spec.frequencies.push_back(std::pow(10000.0, -2.0 * j / dim) / grid.dt());
    return spec;
}

std::vector<double> time_embed(const TimeEmbeddingSpec& spec, int k, const TimeGrid& grid) {
    if (k < 0 || k > grid.L() - 2)
        throw PreconditionError("step index " + std::to_string(k) + " outside [0, " +
                                std::to_string(grid.L() - 2) + "]");
    const double t = grid.time(k);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(spec.dim()));
    for (double w : spec.frequencies) out.push_back(std::sin(w * t));
    for (double w : spec.frequencies) out.push_back(std::cos(w * t));
    return out;
}

// ---------------------------------------------------------------------------------------------
// normalization

NormStats NormStats::from_pairs(std::span<const TrainingPair> pairs) {
    if (pairs.empty()) throw PreconditionError("normalization statistics need at least one pair");
    const double n = static_cast<double>(pairs.size());
    Vec2 xm, ym;
    for (const auto& p : pairs) {
        xm = xm + p.x_next;
        ym = ym + p.target;
    }
    xm = (1.0 / n) * xm;
    ym = (1.0 / n) * ym;
    Vec2 xv, yv;
    for (const auto& p : pairs) {
        const Vec2 dx = p.x_next - xm;
        const Vec2 dy = p.target - ym;
        xv = xv + Vec2{dx.r * dx.r, dx.z * dx.z};
        yv = yv + Vec2{dy.r * dy.r, dy.z * dy.z};
    }
    auto spread = [n](double var) {
        const double sd = std::sqrt(var / n);
        return sd > 1e-12 ? sd : 1.0;
    };
    NormStats st;
    st.input_mean = xm;
    st.input_std = {spread(xv.r), spread(xv.z)};
    st.target_mean = ym;
    st.target_std = {spread(yv.r), spread(yv.z)};
    return st;
}

Vec2 NormStats::normalize_input(Vec2 x) const {
    return {(x.r - input_mean.r) / input_std.r, (x.z - input_mean.z) / input_std.z};
}
Vec2 NormStats::denormalize_input(Vec2 x) const {
    return {x.r * input_std.r + input_mean.r, x.z * input_std.z + input_mean.z};
}
Vec2 NormStats::normalize_target(Vec2 y) const {
    return {(y.r - target_mean.r) / target_std.r, (y.z - target_mean.z) / target_std.z};
}
Vec2 NormStats::denormalize_target(Vec2 y) const {
    return {y.r * target_std.r + target_mean.r, y.z * target_std.z + target_mean.z};
}

// ---------------------------------------------------------------------------------------------
// model

std::string_view to_string(Activation a) { return a == Activation::SiLU ? "silu" : "tanh"; }

Activation parse_activation(std::string_view name) {
    if (name == "silu") return Activation::SiLU;
    if (name == "tanh") return Activation::Tanh;
    throw SchemaError("unknown activation '" + std::string(name) + "'");
}

namespace {

std::vector<std::pair<int, int>> layer_shapes(const Architecture& a) {
    std::vector<std::pair<int, int>> shapes;  // (out, in)
    shapes.emplace_back(a.encoder_width, 2);
    int in = a.encoder_width + a.embed_dim;
    for (int i = 0; i < a.hidden_layers; ++i) {
        shapes.emplace_back(a.hidden_width, in);
        in = a.hidden_width;
    }
    shapes.emplace_back(2, in);
    return shapes;
}

Eigen::MatrixXd activate(Activation act, const Eigen::MatrixXd& z) {
    if (act == Activation::Tanh) return z.array().tanh().matrix();
    return (z.array() / (1.0 + (-z.array()).exp())).matrix();
}

Eigen::MatrixXd activate_derivative(Activation act, const Eigen::MatrixXd& z) {
    if (act == Activation::Tanh) return (1.0 - z.array().tanh().square()).matrix();
    const Eigen::ArrayXXd sig = 1.0 / (1.0 + (-z.array()).exp());
    return (sig * (1.0 + z.array() * (1.0 - sig))).matrix();
}

}  // namespace

ScoreModel::ScoreModel(Architecture arch, TimeGrid grid, NormStats norm, TimeEmbeddingSpec embed,
                       std::vector<DenseLayer> layers)
    : arch_(arch), grid_(grid), norm_(norm), embed_(std::move(embed)), layers_(std::move(layers)) {
    validate();
    const int steps = grid_.transitions();
    embed_table_.resize(embed_.dim(), steps);
    for (int k = 0; k < steps; ++k) {
        const auto e = time_embed(embed_, k, grid_);
        for (int i = 0; i < embed_.dim(); ++i) embed_table_(i, k) = e[static_cast<std::size_t>(i)];
    }
}

void ScoreModel::validate() const {
    if (arch_.encoder_width <= 0 || arch_.hidden_width <= 0 || arch_.hidden_layers < 0)
        throw PreconditionError("layer widths must be positive");
    if (embed_.dim() != arch_.embed_dim) throw SchemaError("time embedding dimension does not match architecture");
    const auto shapes = layer_shapes(arch_);
    if (layers_.size() != shapes.size()) throw SchemaError("layer count does not match architecture");
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const auto& l = layers_[i];
        if (l.weight.rows() != shapes[i].first || l.weight.cols() != shapes[i].second ||
            l.bias.size() != shapes[i].first)
            throw SchemaError("layer " + std::to_string(i) + " has the wrong shape");
    }
    for (double sd : {norm_.input_std.r, norm_.input_std.z, norm_.target_std.r, norm_.target_std.z})
        if (!(sd > 0.0)) throw SchemaError("normalization std must be > 0");
}

ScoreModel ScoreModel::initialize(const Architecture& arch, const TimeGrid& grid, const NormStats& norm,
                                  std::uint64_t seed) {
    std::mt19937_64 engine(mix64(seed));
    std::vector<DenseLayer> layers;
    for (auto [out, in] : layer_shapes(arch)) {
        const double limit = 1.0 / std::sqrt(static_cast<double>(in));
        std::uniform_real_distribution<double> u(-limit, limit);
        DenseLayer l{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
        for (int j = 0; j < in; ++j)
            for (int i = 0; i < out; ++i) l.weight(i, j) = u(engine);
        layers.push_back(std::move(l));
    }
    return ScoreModel(arch, grid, norm, TimeEmbeddingSpec::geometric(arch.embed_dim, grid), std::move(layers));
}

std::size_t ScoreModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

namespace {

std::vector<double> flatten_layers(const std::vector<DenseLayer>& layers) {
    std::vector<double> out;
    for (const auto& l : layers) {
        out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
        out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
    }
    return out;
}

}  // namespace

std::vector<double> ScoreModel::parameters() const { return flatten_layers(layers_); }

std::vector<double> flatten(const Gradient& g) { return flatten_layers(g); }

void ScoreModel::set_parameters(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw PreconditionError("parameter vector has the wrong length");
    auto it = flat.begin();
    for (auto& l : layers_) {
        std::copy_n(it, l.weight.size(), l.weight.data());
        it += l.weight.size();
        std::copy_n(it, l.bias.size(), l.bias.data());
        it += l.bias.size();
    }
}

// ---------------------------------------------------------------------------------------------
// forward / backward

Eigen::MatrixXd forward_normalized(const ScoreModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& embed,
                                   ForwardCache* cache) {
    const auto& layers = model.layers();
    const Activation act = model.architecture().activation;
    const Eigen::Index batch = x.cols();
    if (cache) {
        cache->inputs.assign(layers.size(), {});
        cache->pre.assign(layers.size(), {});
    }

    Eigen::MatrixXd h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (i == 1) {
            Eigen::MatrixXd joined(h.rows() + embed.rows(), batch);
            joined << h, embed;
            h = std::move(joined);
        }
        Eigen::MatrixXd z = layers[i].weight * h;
        z.colwise() += layers[i].bias;
        const bool last = i + 1 == layers.size();
        if (cache) {
            cache->inputs[i] = std::move(h);
            if (!last) cache->pre[i] = z;
        }
        h = last ? std::move(z) : activate(act, z);
    }
    return h;
}

Gradient backward_normalized(const ScoreModel& model, const ForwardCache& cache, const Eigen::MatrixXd& d_out) {
    const auto& layers = model.layers();
    const Activation act = model.architecture().activation;
    const int enc = model.architecture().encoder_width;
    Gradient grad(layers.size());

    Eigen::MatrixXd delta = d_out;  // gradient w.r.t. pre-activation of layer i
    for (std::size_t i = layers.size(); i-- > 0;) {
        grad[i].weight.noalias() = delta * cache.inputs[i].transpose();
        grad[i].bias = delta.rowwise().sum();
        if (i == 0) break;
        Eigen::MatrixXd d_in = layers[i].weight.transpose() * delta;
        if (i == 1) d_in.conservativeResize(enc, Eigen::NoChange);
        delta = d_in.cwiseProduct(activate_derivative(act, cache.pre[i - 1]));
    }
    return grad;
}

namespace {

/// Normalized inputs, embeddings and targets for a set of pairs, as matrix columns.
struct PairMatrices {
    Eigen::MatrixXd x;
    Eigen::MatrixXd embed;
    Eigen::MatrixXd y;
};

template <typename IndexFn>
PairMatrices gather(const ScoreModel& model, std::span<const TrainingPair> pairs, Eigen::Index count,
                    IndexFn index) {
    const auto& norm = model.norm();
    const auto& table = model.embedding_table();
    const int steps = model.grid().transitions();
    PairMatrices m{Eigen::MatrixXd(2, count), Eigen::MatrixXd(table.rows(), count), Eigen::MatrixXd(2, count)};
    for (Eigen::Index j = 0; j < count; ++j) {
        const TrainingPair& p = pairs[index(j)];
        if (p.k < 0 || p.k >= steps)
            throw PreconditionError("step index " + std::to_string(p.k) + " outside the model's grid");
        const Vec2 xn = norm.normalize_input(p.x_next);
        const Vec2 yn = norm.normalize_target(p.target);
        m.x(0, j) = xn.r;
        m.x(1, j) = xn.z;
        m.embed.col(j) = table.col(p.k);
        m.y(0, j) = yn.r;
        m.y(1, j) = yn.z;
    }
    return m;
}

constexpr Eigen::Index kEvalChunk = 4096;

void require_finite(const Eigen::MatrixXd& out, std::size_t offset) {
    for (Eigen::Index j = 0; j < out.cols(); ++j)
        if (!std::isfinite(out(0, j)) || !std::isfinite(out(1, j)))
            throw ModelDivergenceError("non-finite network output at sample " +
                                       std::to_string(offset + static_cast<std::size_t>(j)));
}

}  // namespace

std::vector<Vec2> predict(const ScoreModel& model, std::span<const TrainingPair> pairs) {
    std::vector<Vec2> out(pairs.size());
    const auto& norm = model.norm();
    for (std::size_t start = 0; start < pairs.size(); start += kEvalChunk) {
        const auto count = static_cast<Eigen::Index>(std::min<std::size_t>(kEvalChunk, pairs.size() - start));
        const auto m = gather(model, pairs, count, [start](Eigen::Index j) { return start + j; });
        const Eigen::MatrixXd y = forward_normalized(model, m.x, m.embed);
        require_finite(y, start);
        for (Eigen::Index j = 0; j < count; ++j)
            out[start + static_cast<std::size_t>(j)] = norm.denormalize_target({y(0, j), y(1, j)});
    }
    return out;
}

std::vector<Vec2> predict(const ScoreModel& model, std::span<const State> x_next, int k) {
    if (k < 0 || k >= model.grid().transitions())
        throw PreconditionError("step index " + std::to_string(k) + " outside the model's grid");
    std::vector<Vec2> out(x_next.size());
    const auto& norm = model.norm();
    for (std::size_t start = 0; start < x_next.size(); start += kEvalChunk) {
        const auto count = static_cast<Eigen::Index>(std::min<std::size_t>(kEvalChunk, x_next.size() - start));
        Eigen::MatrixXd x(2, count);
        for (Eigen::Index j = 0; j < count; ++j) {
            const Vec2 xn = norm.normalize_input(x_next[start + static_cast<std::size_t>(j)]);
            x(0, j) = xn.r;
            x(1, j) = xn.z;
        }
        const Eigen::MatrixXd embed = model.embedding_table().col(k).replicate(1, count);
        const Eigen::MatrixXd y = forward_normalized(model, x, embed);
        require_finite(y, start);
        for (Eigen::Index j = 0; j < count; ++j)
            out[start + static_cast<std::size_t>(j)] = norm.denormalize_target({y(0, j), y(1, j)});
    }
    return out;
}

Vec2 net_forward(const ScoreModel& model, State x_next, int k) {
    return predict(model, std::span<const State>(&x_next, 1), k).front();
}

double loss(const ScoreModel& model, std::span<const TrainingPair> pairs) {
    if (pairs.empty()) throw PreconditionError("loss over an empty set of pairs");
    const auto pred = predict(model, pairs);
    double acc = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const Vec2 d = pred[i] - pairs[i].target;
        acc += d.r * d.r + d.z * d.z;
    }
    return acc / static_cast<double>(pairs.size());
}

double normalized_loss(const ScoreModel& model, std::span<const TrainingPair> pairs) {
    if (pairs.empty()) throw PreconditionError("loss over an empty set of pairs");
    double acc = 0.0;
    for (std::size_t start = 0; start < pairs.size(); start += kEvalChunk) {
        const auto count = static_cast<Eigen::Index>(std::min<std::size_t>(kEvalChunk, pairs.size() - start));
        const auto m = gather(model, pairs, count, [start](Eigen::Index j) { return start + j; });
        acc += (forward_normalized(model, m.x, m.embed) - m.y).squaredNorm();
    }
    return acc / static_cast<double>(pairs.size());
}

Gradient loss_gradient(const ScoreModel& model, std::span<const TrainingPair> minibatch) {
    if (minibatch.empty()) throw PreconditionError("gradient over an empty minibatch");
    const auto count = static_cast<Eigen::Index>(minibatch.size());
    const auto m = gather(model, minibatch, count, [](Eigen::Index j) { return static_cast<std::size_t>(j); });
    ForwardCache cache;
    const Eigen::MatrixXd y = forward_normalized(model, m.x, m.embed, &cache);
    const Eigen::MatrixXd d_out = (2.0 / static_cast<double>(count)) * (y - m.y);
    return backward_normalized(model, cache, d_out);
}

// ---------------------------------------------------------------------------------------------
// optimizer

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw PreconditionError("learning rate must be > 0");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
        throw PreconditionError("Adam betas must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw PreconditionError("Adam epsilon must be > 0");
    if (batch_size < 1) throw PreconditionError("batch size must be >= 1");
    if (max_epochs < 0 || patience < 0) throw PreconditionError("epoch counts must be >= 0");
}

AdamState AdamState::zeros_like(const ScoreModel& model) {
    AdamState st;
    for (const auto& l : model.layers()) {
        DenseLayer z{Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())};
        st.m.push_back(z);
        st.v.push_back(std::move(z));
    }
    return st;
}

void adam_step(AdamState& state, ScoreModel& model, const Gradient& grad, const TrainConfig& cfg) {
    auto& layers = model.layers();
    if (state.m.size() != layers.size() || grad.size() != layers.size())
        throw PreconditionError("optimizer state does not match the model");
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);

    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        param.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.epsilon);
    };
    for (std::size_t i = 0; i < layers.size(); ++i) {
        update(layers[i].weight, state.m[i].weight, state.v[i].weight, grad[i].weight);
        update(layers[i].bias, state.m[i].bias, state.v[i].bias, grad[i].bias);
    }
}

// ---------------------------------------------------------------------------------------------
// training loop

TrainResult train(std::span<const TrainingPair> train_pairs, std::span<const TrainingPair> val_pairs,
                  const TrainConfig& cfg, const ScoreModel& model_init) {
    cfg.validate();
    if (train_pairs.empty() || val_pairs.empty()) throw PreconditionError("training and validation sets must be non-empty");

    TrainResult result{model_init, {}};
    if (cfg.max_epochs == 0) return result;

    ScoreModel model = model_init;
    AdamState adam = AdamState::zeros_like(model);
    std::vector<std::size_t> order(train_pairs.size());
    double best_val = std::numeric_limits<double>::infinity();
    auto& report = result.report;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 engine(substream_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), engine);

        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const auto count = static_cast<Eigen::Index>(
                std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size() - start));
            const auto m = gather(model, train_pairs, count, [&](Eigen::Index j) { return order[start + static_cast<std::size_t>(j)]; });
            ForwardCache cache;
            const Eigen::MatrixXd resid = forward_normalized(model, m.x, m.embed, &cache) - m.y;
            const double batch_loss = resid.squaredNorm() / static_cast<double>(count);
            if (!std::isfinite(batch_loss))
                throw ModelDivergenceError("training loss became non-finite at epoch " + std::to_string(epoch));
            const Gradient g = backward_normalized(model, cache, (2.0 / static_cast<double>(count)) * resid);
            adam_step(adam, model, g, cfg);
            epoch_loss += batch_loss;
            ++batches;
        }

        const double val = normalized_loss(model, val_pairs);
        if (!std::isfinite(val))
            throw ModelDivergenceError("validation loss became non-finite at epoch " + std::to_string(epoch));
        report.train_loss.push_back(epoch_loss / static_cast<double>(batches));
        report.val_loss.push_back(val);
        report.epochs_run = epoch + 1;

        if (val < best_val) {
            best_val = val;
            report.best_epoch = epoch;
            result.model = model;
        } else if (epoch - report.best_epoch >= cfg.patience) {
            report.stopped_early = true;
            break;
        }
    }
    return result;
}

}  // namespace vortexscore
