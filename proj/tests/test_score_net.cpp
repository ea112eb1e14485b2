#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "vortexscore/error.hpp"
#include "vortexscore/property_suite.hpp"
#include "vortexscore/score_net.hpp"

using namespace vortexscore;

namespace {

const StrainConfig planar(FlowKind::Planar2D, 1.0, 1.0);

Architecture small_arch() {
    Architecture a;
    a.encoder_width = 8;
    a.embed_dim = 4;
    a.hidden_width = 12;
    a.hidden_layers = 2;
    return a;
}

ScoreModel zeroed(ScoreModel m) {
    m.set_parameters(std::vector<double>(m.parameter_count(), 0.0));
    return m;
}

std::vector<TrainingPair> random_pairs(std::size_t n, int steps, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::uniform_int_distribution<int> k(0, steps - 1);
    std::vector<TrainingPair> out(n);
    for (auto& p : out) p = {{g(rng), g(rng)}, k(rng), {g(rng), g(rng)}};
    return out;
}

}  // namespace

TEST_CASE("build_training_pairs") {
    const TimeGrid g(0.01, 2);
    SUBCASE("target is the backward difference quotient") {
        TrajectoryBatch b{planar, g, 1.0, 0, 1, {{1.0, 2.0}, {0.9, 2.1}}};
        const auto p = build_training_pairs(b);
        REQUIRE(p.size() == 1);
        CHECK(p[0].k == 0);
        CHECK(p[0].x_next == State{0.9, 2.1});
        CHECK(p[0].target.r == doctest::Approx(10.0).epsilon(1e-12));
        CHECK(p[0].target.z == doctest::Approx(-10.0).epsilon(1e-12));
    }
    SUBCASE("identity transition") {
        TrajectoryBatch b{planar, g, 1.0, 0, 1, {{1.0, 2.0}, {1.0, 2.0}}};
        CHECK(build_training_pairs(b)[0].target == Vec2{0, 0});
    }
    SUBCASE("count is N (L-1)") {
        const TimeGrid big(2.0, 200);
        TrajectoryBatch b{planar, big, 1.0, 0, 10000, std::vector<State>(10000 * 200, State{1, 1})};
        CHECK(build_training_pairs(b).size() == 1990000);
    }
}

TEST_CASE("time embedding") {
    const TimeGrid g(2.0, 200);
    const auto spec = TimeEmbeddingSpec::geometric(8, g);
    const auto e0 = time_embed(spec, 0, g);
    REQUIRE(e0.size() == 8);
    for (int i = 0; i < 4; ++i) {
        CHECK(e0[i] == 0.0);
        CHECK(e0[4 + i] == 1.0);
    }
    CHECK(time_embed(spec, 37, g).size() == 8);
    CHECK_THROWS_AS(time_embed(spec, 199, g), PreconditionError);
    CHECK_THROWS_AS(time_embed(spec, -1, g), PreconditionError);

    SUBCASE("unit frequency at t = pi/2") {
        const TimeEmbeddingSpec unit{{1.0}};
        const TimeGrid h(std::numbers::pi, 3);  // t_1 = pi/2
        const auto e = time_embed(unit, 1, h);
        CHECK(e[0] == doctest::Approx(1.0));
        CHECK(std::abs(e[1]) < 1e-15);
    }
    SUBCASE("slowest period exceeds T and every step embeds uniquely") {
        const double slowest = spec.frequencies.back();
        CHECK(2 * std::numbers::pi / slowest > g.T());
        const auto s32 = TimeEmbeddingSpec::geometric(32, g);
        for (int k = 0; k + 1 < g.transitions(); ++k) {
            const auto a = time_embed(s32, k, g), b = time_embed(s32, k + 1, g);
            double d = 0;
            for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
            CHECK(d > 1e-6);
        }
    }
}

TEST_CASE("normalization round trip") {
    const auto pairs = random_pairs(500, 10, 2);
    const NormStats st = NormStats::from_pairs(pairs);
    for (const auto& p : pairs) {
        const Vec2 x = st.denormalize_input(st.normalize_input(p.x_next));
        const Vec2 y = st.denormalize_target(st.normalize_target(p.target));
        CHECK(std::abs(x.r - p.x_next.r) <= 1e-14 * (1 + std::abs(p.x_next.r)));
        CHECK(std::abs(y.z - p.target.z) <= 1e-14 * (1 + std::abs(p.target.z)));
    }
    std::vector<TrainingPair> flat(5, TrainingPair{{2, 3}, 0, {1, 1}});
    const NormStats c = NormStats::from_pairs(flat);
    CHECK(c.input_std == Vec2{1, 1});
    CHECK(c.target_std == Vec2{1, 1});
}

TEST_CASE("net_forward") {
    const TimeGrid g(2.0, 20);
    NormStats st;
    st.target_mean = {3.5, -1.25};
    st.target_std = {2.0, 7.0};
    SUBCASE("zero network returns the target mean") {
        const ScoreModel m = zeroed(ScoreModel::initialize(small_arch(), g, st, 1));
        CHECK(net_forward(m, {4, 5}, 3) == Vec2{3.5, -1.25});
    }
    SUBCASE("pure") {
        const ScoreModel m = ScoreModel::initialize(small_arch(), g, st, 1);
        CHECK(net_forward(m, {0.3, -0.2}, 7) == net_forward(m, {0.3, -0.2}, 7));
        const std::vector<State> xs{{0.3, -0.2}, {1, 2}};
        const auto batch = predict(m, xs, 7);
        CHECK(batch[0] == net_forward(m, xs[0], 7));
        CHECK(batch[1] == net_forward(m, xs[1], 7));
    }
    SUBCASE("non-finite output raises") {
        ScoreModel m = ScoreModel::initialize(small_arch(), g, st, 1);
        m.layers().back().bias(0) = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(net_forward(m, {0, 0}, 0), ModelDivergenceError);
    }
    SUBCASE("Lipschitz bound under small perturbations") {
        // SiLU is Lipschitz with constant < 1.1; the state enters through encoder and hidden layers
        const ScoreModel m = ScoreModel::initialize(small_arch(), g, NormStats::identity(), 4);
        double lip = 1.0;
        for (std::size_t i = 0; i < m.layers().size(); ++i) {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.layers()[i].weight);
            lip *= svd.singularValues()(0) * (i + 1 < m.layers().size() ? 1.1 : 1.0);
        }
        CHECK(std::isfinite(lip));
        std::mt19937_64 rng(9);
        std::normal_distribution<double> n;
        const double delta = 1e-6;
        for (int i = 0; i < 100; ++i) {
            const State x{n(rng), n(rng)};
            const double ang = n(rng);
            const State y{x.r + delta * std::cos(ang), x.z + delta * std::sin(ang)};
            const Vec2 d = net_forward(m, y, i % 19) - net_forward(m, x, i % 19);
            CHECK(std::hypot(d.r, d.z) <= lip * delta * (1 + 1e-6));
        }
    }
}

TEST_CASE("loss") {
    const TimeGrid g(2.0, 20);
    const ScoreModel zero = zeroed(ScoreModel::initialize(small_arch(), g, NormStats::identity(), 1));
    const std::vector<TrainingPair> one{{{1, 1}, 0, {3, 4}}};
    CHECK(loss(zero, one) == 25.0);
    CHECK(normalized_loss(zero, one) == 25.0);

    const ScoreModel m = ScoreModel::initialize(small_arch(), g, NormStats::identity(), 2);
    auto pairs = random_pairs(50, 19, 1);
    const auto pred = predict(m, pairs);
    for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].target = pred[i];
    CHECK(loss(m, pairs) == 0.0);
    for (double v : flatten(loss_gradient(m, pairs))) CHECK(v == 0.0);
}

TEST_CASE("output bias gradient has the closed form 2 mean(prediction - target)") {
    const TimeGrid g(2.0, 20);
    NormStats st;
    st.target_mean = {1.0, -2.0};
    st.target_std = {0.5, 4.0};
    ScoreModel m = zeroed(ScoreModel::initialize(small_arch(), g, st, 1));
    m.layers().back().bias << 0.3, -0.7;
    const auto pairs = random_pairs(64, 19, 8);
    const Gradient grad = loss_gradient(m, pairs);
    Vec2 expect{0, 0};
    for (const auto& p : pairs) {
        const Vec2 t = st.normalize_target(p.target);
        expect = expect + Vec2{2 * (0.3 - t.r), 2 * (-0.7 - t.z)};
    }
    expect = (1.0 / pairs.size()) * expect;
    CHECK(grad.back().bias(0) == doctest::Approx(expect.r).epsilon(1e-12));
    CHECK(grad.back().bias(1) == doctest::Approx(expect.z).epsilon(1e-12));
    // all hidden activations are zero, so every other gradient vanishes
    for (std::size_t i = 0; i + 1 < grad.size(); ++i) CHECK(grad[i].bias.norm() == 0.0);
}

TEST_CASE("backprop matches central differences") {
    const auto r = checks::backprop_gradient();
    INFO(r.detail);
    CHECK(r.passed);
}

TEST_CASE("gradient step decreases the loss") {
    const TimeGrid g(2.0, 20);
    int decreased = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        ScoreModel m = ScoreModel::initialize(small_arch(), g, NormStats::identity(), seed);
        const auto pairs = random_pairs(32, 19, 1000 + seed);
        const double before = normalized_loss(m, pairs);
        const auto grad = flatten(loss_gradient(m, pairs));
        auto p = m.parameters();
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= 1e-3 * grad[i];
        m.set_parameters(p);
        if (normalized_loss(m, pairs) < before) ++decreased;
    }
    CHECK(decreased >= 95);
}

TEST_CASE("adam") {
    const TimeGrid g(2.0, 20);
    const ScoreModel init = ScoreModel::initialize(small_arch(), g, NormStats::identity(), 5);
    const auto pairs = random_pairs(40, 19, 3);
    const Gradient grad = loss_gradient(init, pairs);
    TrainConfig cfg;

    SUBCASE("first step moves each parameter by about lr against the gradient sign") {
        ScoreModel m = init;
        AdamState st = AdamState::zeros_like(m);
        adam_step(st, m, grad, cfg);
        const auto before = init.parameters(), after = m.parameters(), gv = flatten(grad);
        for (std::size_t i = 0; i < gv.size(); ++i) {
            const double expect = -cfg.learning_rate * gv[i] / (std::abs(gv[i]) + cfg.epsilon);
            CHECK(after[i] - before[i] == doctest::Approx(expect).epsilon(1e-9).scale(1e-12));
            if (std::abs(gv[i]) > 1e-4) CHECK(std::abs(after[i] - before[i]) == doctest::Approx(cfg.learning_rate).epsilon(1e-3));
        }
    }
    SUBCASE("zero gradient leaves parameters unchanged") {
        ScoreModel m = init;
        AdamState st = AdamState::zeros_like(m);
        Gradient zero = grad;
        for (auto& l : zero) {
            l.weight.setZero();
            l.bias.setZero();
        }
        for (int i = 0; i < 5; ++i) adam_step(st, m, zero, cfg);
        CHECK(m == init);
    }
    SUBCASE("identical gradients give identical trajectories") {
        ScoreModel a = init, b = init;
        AdamState sa = AdamState::zeros_like(a), sb = AdamState::zeros_like(b);
        for (int i = 0; i < 3; ++i) {
            const Gradient ga = loss_gradient(a, pairs);
            adam_step(sa, a, ga, cfg);
            adam_step(sb, b, ga, cfg);
        }
        CHECK(a == b);
    }
}

TEST_CASE("train") {
    const TimeGrid g(2.0, 20);
    SUBCASE("max_epochs = 0 returns the initial model") {
        const ScoreModel init = ScoreModel::initialize(small_arch(), g, NormStats::identity(), 5);
        const auto pairs = random_pairs(40, 19, 3);
        TrainConfig cfg;
        cfg.max_epochs = 0;
        const auto res = train(pairs, pairs, cfg, init);
        CHECK(res.model == init);
        CHECK(res.report.epochs_run == 0);
    }
    SUBCASE("constant target") {
        auto tr = random_pairs(2000, 19, 1), va = random_pairs(400, 19, 2);
        for (auto* set : {&tr, &va})
            for (auto& p : *set) p.target = {2.5, -4.0};
        const ScoreModel init = ScoreModel::initialize(small_arch(), g, NormStats::from_pairs(tr), 7);
        TrainConfig cfg;
        cfg.batch_size = 128;
        cfg.max_epochs = 80;
        cfg.seed = 1;
        const auto res = train(tr, va, cfg, init);
        CHECK(loss(res.model, va) < 1e-6);
        for (const Vec2 v : predict(res.model, std::span<const TrainingPair>(va).first(50))) {
            CHECK(v.r == doctest::Approx(2.5).epsilon(1e-3));
            CHECK(v.z == doctest::Approx(-4.0).epsilon(1e-3));
        }
    }
    SUBCASE("deterministic and keeps the best validation epoch") {
        const auto tr = random_pairs(600, 19, 11), va = random_pairs(200, 19, 12);
        const ScoreModel init = ScoreModel::initialize(small_arch(), g, NormStats::from_pairs(tr), 3);
        TrainConfig cfg;
        cfg.batch_size = 64;
        cfg.max_epochs = 6;
        cfg.seed = 4;
        const auto a = train(tr, va, cfg, init);
        const auto b = train(tr, va, cfg, init);
        CHECK(a.model == b.model);
        CHECK(a.report.val_loss == b.report.val_loss);
        REQUIRE(a.report.best_epoch >= 0);
        CHECK(normalized_loss(a.model, va) ==
              doctest::Approx(a.report.val_loss[static_cast<std::size_t>(a.report.best_epoch)]).epsilon(1e-12));
    }
    SUBCASE("invalid configuration") {
        TrainConfig cfg;
        cfg.batch_size = 0;
        CHECK_THROWS_AS(cfg.validate(), PreconditionError);
    }
}
