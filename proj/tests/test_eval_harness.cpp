#include <doctest.h>

#include <cmath>

#include "support/synthetic.hpp"
#include "vortexscore/analytic_oracle.hpp"
#include "vortexscore/backward_flow.hpp"
#include "vortexscore/error.hpp"
#include "vortexscore/eval_harness.hpp"

using namespace vortexscore;

namespace {

const StrainConfig planar(FlowKind::Planar2D, 1.0, 1.0);

TrajectoryBatch handmade(std::vector<State> states, int L) {
    const std::size_t n = states.size() / static_cast<std::size_t>(L);
    return TrajectoryBatch{planar, TimeGrid(1.0, L), 1.0, 0, n, std::move(states)};
}

TrialConfig tiny_trial() {
    TrialConfig c;
    c.strain = StrainConfig(FlowKind::Axisymmetric3D, 1.0, 1.0);
    c.grid = TimeGrid(0.5, 6);
    c.n_samples = 20;
    c.arch.encoder_width = 4;
    c.arch.embed_dim = 4;
    c.arch.hidden_width = 6;
    c.arch.hidden_layers = 1;
    c.train.batch_size = 16;
    c.train.max_epochs = 2;
    return c;
}

TrialFn from_values(std::vector<double> r, std::vector<double> z) {
    return [r = std::move(r), z = std::move(z)](std::uint64_t seed) {
        return std::pair{r.at(seed % r.size()), z.at(seed % z.size())};
    };
}

}  // namespace

TEST_CASE("relative_mae") {
    SUBCASE("perfect prediction") {
        const auto b = handmade({{2, 1}, {7, 3}}, 2);
        const std::vector<State> pred{{2, 1}};
        CHECK(relative_mae({2, 1}, pred, b, Component::R) == 0.0);
        CHECK(relative_mae({2, 1}, pred, b, Component::Z) == 0.0);
    }
    SUBCASE("single trajectory") {
        const auto b = handmade({{2, 0}, {4, 1}, {7, 2}}, 3);  // |dR| sum = 5
        const std::vector<State> pred{{1.5, 0}};
        CHECK(relative_mae({2, 0}, pred, b, Component::R) == doctest::Approx(0.1).epsilon(1e-15));
    }
    SUBCASE("mean of ratios") {
        const auto b = handmade({{0, 0}, {1, 1}, {0, 0}, {-1, 1}}, 2);
        const std::vector<State> pred{{0.1, 0}, {-0.3, 0}};
        CHECK(relative_mae({0, 0}, pred, b, Component::R) == doctest::Approx(0.2).epsilon(1e-15));
    }
    SUBCASE("zero displacement is degenerate") {
        const auto b = handmade({{1, 0}, {1, 1}}, 2);
        const std::vector<State> pred{{1, 0}};
        CHECK_THROWS_AS(relative_mae({1, 0}, pred, b, Component::R), DegenerateError);
    }
    SUBCASE("invariant under a common rescaling") {
        const auto b = handmade({{3, 1}, {2, 2}, {4, 0.5}, {3, 1}, {1, 4}, {0.5, 3}}, 3);
        const std::vector<State> pred{{2.5, 1.2}, {3.3, 0.7}};
        auto scaled_states = b.states;
        for (auto& s : scaled_states) s = 7.5 * s;
        const auto bs = handmade(scaled_states, 3);
        const std::vector<State> ps{7.5 * pred[0], 7.5 * pred[1]};
        for (Component c : {Component::R, Component::Z})
            CHECK(relative_mae(7.5 * State{3, 1}, ps, bs, c) ==
                  doctest::Approx(relative_mae({3, 1}, pred, b, c)).epsilon(1e-14));
    }
}

TEST_CASE("summarize") {
    const std::vector<double> v{1, 2, 3, 4};
    const auto st = summarize(v);
    CHECK(st.n == 4);
    CHECK(st.mean == 2.5);
    CHECK(st.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(st.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2));
    CHECK(st.rel_se == doctest::Approx(std::sqrt(5.0 / 3.0) / 5));
    // two-pass: a large common offset does not destroy the variance
    const std::vector<double> w{1e9 + 1, 1e9 + 2, 1e9 + 3, 1e9 + 4};
    CHECK(summarize(w).std == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-6));
}

TEST_CASE("stopping rule") {
    StoppingRule rule;
    SUBCASE("std / mean = 0.2 stops at exactly 12") {
        const auto vals = testing::constant_ratio_sequence(0.5, 0.2, 80);
        const auto st = run_until_converged(from_values(vals, vals), rule, 0);
        CHECK(st.converged);
        CHECK(st.r.n == 12);
        CHECK(st.r.std / st.r.mean == doctest::Approx(0.2).epsilon(1e-10));
    }
    SUBCASE("identical values stop at 2") {
        const auto st = run_until_converged(from_values({0.3}, {0.1}), rule, 0);
        CHECK(st.converged);
        CHECK(st.r.n == 2);
        CHECK(st.r.rel_se == 0.0);
    }
    SUBCASE("heavy tails hit max_trials unconverged") {
        const auto st = run_until_converged(from_values({1, 10, 100, 1000}, {1, 10, 100, 1000}), rule, 0);
        CHECK_FALSE(st.converged);
        CHECK(st.r.n == 80);
    }
    SUBCASE("both components must converge unless told otherwise") {
        const TrialFn f = from_values({0.3}, {1, 10, 100, 1000});
        CHECK_FALSE(run_until_converged(f, rule, 0).converged);
        rule.require_both = false;
        const auto st = run_until_converged(f, rule, 0);
        CHECK(st.converged);
        CHECK(st.z.n == 2);
    }
    SUBCASE("seeds are base_seed + i") {
        std::vector<std::uint64_t> seen;
        rule.max_trials = 4;
        run_until_converged(
            [&](std::uint64_t s) {
                seen.push_back(s);
                return std::pair{s % 2 ? 1.0 : 100.0, 1.0};
            },
            rule, 100);
        CHECK(seen == std::vector<std::uint64_t>{100, 101, 102, 103});
    }
}

TEST_CASE("run_trial") {
    const TrialConfig cfg = tiny_trial();
    const auto a = run_trial(2.0, cfg, 17);
    const auto b = run_trial(2.0, cfg, 17);
    CHECK(a.r.rel_mae == b.r.rel_mae);
    CHECK(a.z.rel_mae == b.z.rel_mae);
    CHECK(a.report.val_loss == b.report.val_loss);
    CHECK(std::isfinite(a.r.rel_mae));
    CHECK(run_trial(2.0, cfg, 18).r.rel_mae != a.r.rel_mae);
}

TEST_CASE("noise-free exact inverse reconstructs exactly") {
    const StrainConfig cfg(FlowKind::Planar2D, 1.0, 0.0);
    const TimeGrid g(2.0, 100);
    const auto batch = generate_batch(cfg, g, 3.0, 5, 1);
    const State x0 = initial_state(cfg, g, 3.0);
    const auto res = reconstruct(oracle::chain_drift(oracle::planar_chain(cfg, g, x0)), g, batch.terminals());
    CHECK(relative_mae(x0, res.predicted_x0, batch, Component::R) <= 1e-6);
    CHECK(relative_mae(x0, res.predicted_x0, batch, Component::Z) <= 1e-6);
}

TEST_CASE("sweep") {
    const TrialConfig cfg = tiny_trial();
    StoppingRule rule;
    rule.max_trials = 2;
    const std::vector<double> s{1.0, 2.0};
    int calls = 0;
    const auto res = sweep(s, cfg, rule, 5, [&](const TrialStatistics&) { ++calls; });
    REQUIRE(res.rows.size() == 2);
    CHECK(calls == 2);
    CHECK(res.rows[1].s == 2.0);
    CHECK(res.rows[0].r.n == 2);

    const std::vector<double> one{2.0};
    const auto single = sweep(one, cfg, rule, 5);
    const auto direct = run_until_converged(2.0, cfg, rule, 5);
    CHECK(single.rows[0].r_values == direct.r_values);
    CHECK(single.rows[0].z_values == direct.z_values);

    // failures are recorded per s
    const std::vector<double> bad{1e-5};
    const auto failed = sweep(bad, cfg, rule, 5);
    CHECK_FALSE(failed.rows[0].error.empty());
    CHECK_THROWS_AS(sweep(std::vector<double>{}, cfg, rule, 5), PreconditionError);
}
