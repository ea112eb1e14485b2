#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "vortexscore/analytic_oracle.hpp"
#include "vortexscore/backward_flow.hpp"
#include "vortexscore/error.hpp"
#include "vortexscore/eval_harness.hpp"
#include "vortexscore/forward_sim.hpp"
#include "vortexscore/io.hpp"
#include "vortexscore/plot.hpp"
#include "vortexscore/property_suite.hpp"
#include "vortexscore/score_net.hpp"

namespace vortexscore::cli {

namespace {

struct StrainOptions {
    std::string kind = "axisymmetric3d";
    double a = 1.0;
    double nu = 1.0;
    double T = 2.0;
    int L = 200;

    void add(CLI::App* app, bool with_nu = true) {
        app->add_option("--kind", kind, "flow kind: axisymmetric3d | planar2d")->capture_default_str();
        app->add_option("--a", a, "strain rate")->capture_default_str();
        if (with_nu) app->add_option("--nu", nu, "kinematic viscosity")->capture_default_str();
        app->add_option("--T", T, "terminal time")->capture_default_str();
        app->add_option("--L", L, "number of time points")->capture_default_str();
    }
    StrainConfig strain() const { return StrainConfig(parse_flow_kind(kind), a, nu); }
    TimeGrid grid() const { return TimeGrid(T, L); }
};

struct ModelOptions {
    Architecture arch;
    TrainConfig train;
    std::string activation = "silu";

    void add(CLI::App* app) {
        app->add_option("--encoder-width", arch.encoder_width)->capture_default_str();
        app->add_option("--embed-dim", arch.embed_dim)->capture_default_str();
        app->add_option("--hidden-width", arch.hidden_width)->capture_default_str();
        app->add_option("--hidden-layers", arch.hidden_layers)->capture_default_str();
        app->add_option("--activation", activation, "silu | tanh")->capture_default_str();
        app->add_option("--lr", train.learning_rate)->capture_default_str();
        app->add_option("--batch-size", train.batch_size)->capture_default_str();
        app->add_option("--epochs", train.max_epochs, "maximum epochs")->capture_default_str();
        app->add_option("--patience", train.patience, "early-stop patience in epochs")->capture_default_str();
    }
    Architecture architecture() const {
        Architecture a = arch;
        a.activation = parse_activation(activation);
        return a;
    }
};

/// "1..12", "1,4,8,12" or a mix such as "1..3,8".
std::vector<double> parse_s_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto dots = item.find("..");
        try {
            if (dots == std::string::npos) {
                out.push_back(std::stod(item));
            } else {
                const double lo = std::stod(item.substr(0, dots));
                const double hi = std::stod(item.substr(dots + 2));
                for (double v = lo; v <= hi + 1e-9; v += 1.0) out.push_back(v);
            }
        } catch (const std::logic_error&) {
            throw PreconditionError("bad s list '" + text + "'");
        }
    }
    if (out.empty()) throw PreconditionError("empty s list");
    return out;
}

std::pair<TrajectoryBatch, TrajectoryBatch> split_or_throw(const TrajectoryBatch& batch, double fraction) {
    return split_batch(batch, fraction);
}

/// Trajectories whose terminals are reconstructed and evaluated: the validation split or all.
TrajectoryBatch evaluation_set(const TrajectoryBatch& batch, const std::string& which, double fraction) {
    if (which == "all") return batch;
    if (which == "val") return split_or_throw(batch, fraction).second;
    throw PreconditionError("--split must be 'val' or 'all'");
}

int run(CLI::App& app, std::ostream& out, std::ostream& err, const std::vector<std::string>& argv) {
    app.require_subcommand(1);

    // generate -------------------------------------------------------------------------------
    auto* gen = app.add_subcommand("generate", "simulate forward trajectories into a dataset");
    StrainOptions gen_strain;
    gen_strain.add(gen);
    double gen_s = 1.0;
    std::size_t gen_n = 10000;
    std::uint64_t gen_seed = 0;
    std::string gen_out = "dataset.bin";
    gen->add_option("--s", gen_s, "scale parameter")->capture_default_str();
    gen->add_option("--N", gen_n, "retained trajectories")->capture_default_str();
    gen->add_option("--seed", gen_seed)->capture_default_str();
    gen->add_option("-o,--out", gen_out, "payload path; sidecar is <out>.meta.json")->capture_default_str();

    // train ----------------------------------------------------------------------------------
    auto* tr = app.add_subcommand("train", "fit the score network on a dataset");
    ModelOptions tr_model;
    tr_model.add(tr);
    std::string tr_data, tr_out = "model.ckpt.json";
    double tr_fraction = 0.8;
    std::uint64_t tr_seed = 0;
    tr->add_option("--data", tr_data, "dataset payload")->required();
    tr->add_option("-o,--out", tr_out)->capture_default_str();
    tr->add_option("--train-fraction", tr_fraction)->capture_default_str();
    tr->add_option("--seed", tr_seed, "initialization / shuffling seed")->capture_default_str();

    // reconstruct ----------------------------------------------------------------------------
    auto* rec = app.add_subcommand("reconstruct", "run the learned backward flow from terminal states");
    std::string rec_ckpt, rec_data, rec_out = "predictions.txt", rec_split = "val";
    double rec_fraction = 0.8;
    rec->add_option("--checkpoint", rec_ckpt)->required();
    rec->add_option("--data", rec_data)->required();
    rec->add_option("-o,--out", rec_out)->capture_default_str();
    rec->add_option("--split", rec_split, "val | all")->capture_default_str();
    rec->add_option("--train-fraction", rec_fraction)->capture_default_str();

    // evaluate -------------------------------------------------------------------------------
    auto* ev = app.add_subcommand("evaluate", "relative MAE of predicted initial positions");
    std::string ev_pred, ev_data, ev_split = "val";
    double ev_fraction = 0.8;
    ev->add_option("--predictions", ev_pred)->required();
    ev->add_option("--data", ev_data)->required();
    ev->add_option("--split", ev_split, "val | all")->capture_default_str();
    ev->add_option("--train-fraction", ev_fraction)->capture_default_str();

    // trial ----------------------------------------------------------------------------------
    auto* trial = app.add_subcommand("trial", "one end-to-end trial for a single seed");
    StrainOptions trial_strain;
    trial_strain.add(trial);
    ModelOptions trial_model;
    trial_model.add(trial);
    double trial_s = 1.0, trial_fraction = 0.8;
    std::size_t trial_n = 10000;
    std::uint64_t trial_seed = 0;
    std::string trial_manifest, trial_write_manifest, trial_out;
    trial->add_option("--s", trial_s)->capture_default_str();
    trial->add_option("--N", trial_n)->capture_default_str();
    trial->add_option("--train-fraction", trial_fraction)->capture_default_str();
    trial->add_option("--seed", trial_seed)->capture_default_str();
    trial->add_option("--manifest", trial_manifest, "replay a trial manifest (overrides other flags)");
    trial->add_option("--write-manifest", trial_write_manifest, "save the effective manifest");
    trial->add_option("-o,--out", trial_out, "metrics CSV (default: stdout)");

    // sweep ----------------------------------------------------------------------------------
    auto* sw = app.add_subcommand("sweep", "repeated trials over s until the relative SE target is met");
    StrainOptions sw_strain;
    sw_strain.add(sw, false);
    ModelOptions sw_model;
    sw_model.add(sw);
    std::vector<double> sw_nu{1.0, 0.01};
    std::string sw_s = "1..12", sw_out = "results.csv";
    std::size_t sw_n = 10000;
    double sw_fraction = 0.8;
    StoppingRule sw_rule;
    bool sw_either = false;
    std::uint64_t sw_seed = 0;
    sw->add_option("--nu", sw_nu, "viscosities")->capture_default_str();
    sw->add_option("--s", sw_s, "s values, e.g. 1..12 or 1,4,8")->capture_default_str();
    sw->add_option("--N", sw_n)->capture_default_str();
    sw->add_option("--train-fraction", sw_fraction)->capture_default_str();
    sw->add_option("--target-rel-se", sw_rule.target_rel_se)->capture_default_str();
    sw->add_option("--max-trials", sw_rule.max_trials)->capture_default_str();
    sw->add_flag("--either-component", sw_either, "stop when either component meets the target");
    sw->add_option("--base-seed", sw_seed)->capture_default_str();
    sw->add_option("-o,--out", sw_out)->capture_default_str();

    // oracle-check ---------------------------------------------------------------------------
    auto* oc = app.add_subcommand("oracle-check", "run the analytic-oracle property suite");

    // plot -----------------------------------------------------------------------------------
    auto* pl = app.add_subcommand("plot", "render a results CSV (or trajectories) as SVG");
    std::string pl_csv, pl_out = "results.svg", pl_title, pl_traj, pl_pred;
    std::size_t pl_samples = 20;
    pl->add_option("results", pl_csv, "results CSV from sweep");
    pl->add_option("-o,--out", pl_out)->capture_default_str();
    pl->add_option("--title", pl_title);
    pl->add_option("--trajectories", pl_traj, "dataset payload: draw a trajectory overlay instead");
    pl->add_option("--predictions", pl_pred, "predictions table to overlay on --trajectories");
    pl->add_option("--samples", pl_samples, "trajectories drawn in overlay mode")->capture_default_str();

    std::vector<const char*> cargv;
    for (const auto& a : argv) cargv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    if (gen->parsed()) {
        const auto batch = generate_batch(gen_strain.strain(), gen_strain.grid(), gen_s, gen_n, gen_seed);
        write_dataset(gen_out, batch);
        out << "wrote " << batch.size() << " trajectories (" << batch.attempts << " attempts) to " << gen_out
            << " hash " << batch_hash(batch) << "\n";
        return kOk;
    }

    if (tr->parsed()) {
        const auto batch = read_dataset(tr_data);
        const auto [train_b, val_b] = split_or_throw(batch, tr_fraction);
        const auto train_pairs = build_training_pairs(train_b);
        const auto val_pairs = build_training_pairs(val_b);
        const TrialSeeds seeds = TrialSeeds::derive(tr_seed);
        ScoreModel init = ScoreModel::initialize(tr_model.architecture(), batch.grid,
                                                 NormStats::from_pairs(train_pairs), seeds.init);
        init.set_dataset_hash(batch_hash(batch));
        TrainConfig tc = tr_model.train;
        tc.seed = seeds.shuffle;
        const auto result = train(train_pairs, val_pairs, tc, init);
        write_checkpoint(tr_out, result.model);
        out << "epochs " << result.report.epochs_run << ", best epoch " << result.report.best_epoch;
        if (!result.report.val_loss.empty())
            out << ", best validation loss " << result.report.val_loss[static_cast<std::size_t>(result.report.best_epoch)];
        out << "\nwrote " << tr_out << "\n";
        return kOk;
    }

    if (rec->parsed()) {
        const auto model = read_checkpoint(rec_ckpt);
        const auto batch = read_dataset(rec_data);
        if (!(batch.grid == model.grid())) throw PreconditionError("dataset grid does not match the checkpoint");
        const auto eval = evaluation_set(batch, rec_split, rec_fraction);
        const auto terminals = eval.terminals();
        const auto result = reconstruct(model, terminals, batch.cfg.kind());
        write_predictions(rec_out, result);
        out << "reconstructed " << result.predicted_x0.size() << " initial positions";
        if (!result.out_of_domain.empty()) out << " (" << result.out_of_domain.size() << " left r > 0)";
        out << "; wrote " << rec_out << "\n";
        return kOk;
    }

    if (ev->parsed()) {
        const auto pred = read_predictions(ev_pred);
        const auto batch = read_dataset(ev_data);
        const auto eval = evaluation_set(batch, ev_split, ev_fraction);
        const State x0 = initial_state(batch.cfg, batch.grid, batch.scale_s);
        out << "component,rel_mae\n";
        for (Component c : {Component::R, Component::Z}) {
            std::ostringstream v;
            v << std::setprecision(17) << relative_mae(x0, pred.predicted_x0, eval, c);
            out << to_string(c) << "," << v.str() << "\n";
        }
        return kOk;
    }

    if (trial->parsed()) {
        TrialManifest m;
        if (!trial_manifest.empty()) {
            m = read_manifest(trial_manifest);
        } else {
            m.config = TrialConfig{trial_strain.strain(), trial_strain.grid(), trial_n, trial_fraction,
                                   trial_model.architecture(), trial_model.train};
            m.s = trial_s;
            m.seed = trial_seed;
        }
        if (!trial_write_manifest.empty()) write_manifest(trial_write_manifest, m);
        const auto outcome = run_trial(m.s, m.config, m.seed);
        std::ostringstream metrics;
        write_trial_metrics(metrics, m, outcome);
        if (trial_out.empty())
            out << metrics.str();
        else
            write_text_file(trial_out, metrics.str());
        err << "trial: " << outcome.report.epochs_run << " epochs (best " << outcome.report.best_epoch << "), "
            << std::fixed << std::setprecision(1) << outcome.r.runtime_seconds << " s\n";
        return kOk;
    }

    if (sw->parsed()) {
        const auto s_values = parse_s_list(sw_s);
        sw_rule.require_both = !sw_either;
        SweepResult all;
        for (double nu : sw_nu) {
            StrainOptions so = sw_strain;
            so.nu = nu;
            const TrialConfig cfg{so.strain(), so.grid(), sw_n, sw_fraction, sw_model.architecture(), sw_model.train};
            auto res = sweep(s_values, cfg, sw_rule, sw_seed, [&](const TrialStatistics& row) {
                err << "nu=" << row.nu << " s=" << row.s << ": ";
                if (!row.error.empty())
                    err << "failed: " << row.error << "\n";
                else
                    err << row.r.n << " trials, R " << row.r.mean << " +- " << row.r.std << ", Z " << row.z.mean
                        << " +- " << row.z.std << (row.converged ? "" : " (not converged)") << "\n";
            });
            for (auto& row : res.rows) all.rows.push_back(std::move(row));
        }
        write_results_csv(sw_out, all);
        out << "wrote " << all.rows.size() * 2 << " rows to " << sw_out << "\n";
        for (const auto& row : all.rows)
            if (!row.error.empty()) return kCheckFailed;
        return kOk;
    }

    if (oc->parsed()) {
        bool all_ok = true;
        for (const auto& r : checks::run_all()) {
            out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
            all_ok = all_ok && r.passed;
        }
        return all_ok ? kOk : kCheckFailed;
    }

    if (pl->parsed()) {
        if (!pl_traj.empty()) {
            const auto batch = read_dataset(pl_traj);
            std::optional<ReconstructionResult> pred;
            if (!pl_pred.empty()) pred = read_predictions(pl_pred);
            write_text_file(pl_out, render_trajectories_svg(batch, pl_samples, pred ? &*pred : nullptr));
        } else {
            if (pl_csv.empty()) throw PreconditionError("plot needs a results CSV or --trajectories");
            emit_svg(pl_csv, pl_out, pl_title);
        }
        out << "wrote " << pl_out << "\n";
        return kOk;
    }
    return kUsage;
}

}  // namespace

int dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Reverse-time score-based reconstruction of particles in strain flows", "vortexscore"};
    try {
        return run(app, out, err, argv);
    } catch (const DomainError& e) {
        err << "domain error: " << e.what() << "\n";
        return kDomain;
    } catch (const PreconditionError& e) {
        err << "invalid argument: " << e.what() << "\n";
        return kPrecondition;
    } catch (const ModelDivergenceError& e) {
        err << "model divergence: " << e.what() << "\n";
        return kModelDivergence;
    } catch (const DegenerateError& e) {
        err << "degenerate input: " << e.what() << "\n";
        return kDegenerate;
    } catch (const CorruptionError& e) {
        err << "corrupt file: " << e.what() << "\n";
        return kCorruption;
    } catch (const VersionError& e) {
        err << "version mismatch: " << e.what() << "\n";
        return kVersion;
    } catch (const SchemaError& e) {
        err << "schema error: " << e.what() << "\n";
        return kSchema;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}

}  // namespace vortexscore::cli
