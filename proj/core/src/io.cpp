#include "vortexscore/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "vortexscore/error.hpp"

namespace vortexscore {

using nlohmann::json;

namespace {

/// Shortest decimal that round-trips.
std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

double parse_num(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw SchemaError("not a number: '" + s + "'");
    return v;
}

void put_le(std::vector<unsigned char>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

double get_le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

std::vector<unsigned char> encode_payload(const TrajectoryBatch& batch) {
    std::vector<unsigned char> out;
    out.reserve(batch.states.size() * 16);
    for (const State& s : batch.states) {
        put_le(out, s.r);
        put_le(out, s.z);
    }
    return out;
}

std::string canonical_metadata(FlowKind kind, double a, double nu, double T, int L, double s, std::size_t n,
                               std::uint64_t seed, std::uint64_t attempts) {
    std::ostringstream os;
    os << "v" << kDatasetFormatVersion << "|" << to_string(kind) << "|" << num(a) << "|" << num(nu) << "|"
       << num(T) << "|" << L << "|" << num(s) << "|" << n << "|" << seed << "|" << attempts;
    return os.str();
}

std::string hash_dataset(const std::string& meta, std::span<const unsigned char> payload) {
    const auto* m = reinterpret_cast<const unsigned char*>(meta.data());
    std::uint64_t h = fnv1a64(std::span<const unsigned char>(m, meta.size()));
    return to_hex(fnv1a64(payload, h));
}

json to_json(const StrainConfig& c) { return {{"kind", to_string(c.kind())}, {"a", c.a()}, {"nu", c.nu()}}; }

StrainConfig strain_from_json(const json& j) {
    return StrainConfig(parse_flow_kind(j.at("kind").get<std::string>()), j.at("a").get<double>(),
                        j.at("nu").get<double>());
}

json to_json(Vec2 v) { return json::array({v.r, v.z}); }
Vec2 vec2_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json to_json(const Architecture& a) {
    return {{"encoder_width", a.encoder_width}, {"embed_dim", a.embed_dim}, {"hidden_width", a.hidden_width},
            {"hidden_layers", a.hidden_layers}, {"activation", to_string(a.activation)}};
}

Architecture arch_from_json(const json& j) {
    Architecture a;
    a.encoder_width = j.at("encoder_width").get<int>();
    a.embed_dim = j.at("embed_dim").get<int>();
    a.hidden_width = j.at("hidden_width").get<int>();
    a.hidden_layers = j.at("hidden_layers").get<int>();
    a.activation = parse_activation(j.at("activation").get<std::string>());
    return a;
}

json to_json(const TrainConfig& t) {
    return {{"learning_rate", t.learning_rate}, {"beta1", t.beta1}, {"beta2", t.beta2}, {"epsilon", t.epsilon},
            {"batch_size", t.batch_size}, {"max_epochs", t.max_epochs}, {"patience", t.patience}, {"seed", t.seed}};
}

TrainConfig train_from_json(const json& j) {
    TrainConfig t;
    t.learning_rate = j.value("learning_rate", t.learning_rate);
    t.beta1 = j.value("beta1", t.beta1);
    t.beta2 = j.value("beta2", t.beta2);
    t.epsilon = j.value("epsilon", t.epsilon);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.max_epochs = j.value("max_epochs", t.max_epochs);
    t.patience = j.value("patience", t.patience);
    t.seed = j.value("seed", t.seed);
    return t;
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(what + ": " + e.what());
    }
}

}  // namespace

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t h) {
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

std::string batch_hash(const TrajectoryBatch& b) {
    const auto meta = canonical_metadata(b.cfg.kind(), b.cfg.a(), b.cfg.nu(), b.grid.T(), b.grid.L(), b.scale_s,
                                         b.size(), b.seed, b.attempts);
    return hash_dataset(meta, encode_payload(b));
}

std::string model_hash(const ScoreModel& model) {
    const std::string text = checkpoint_to_string(model);
    return to_hex(fnv1a64(std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size())));
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------------------------
// datasets

std::filesystem::path sidecar_path(const std::filesystem::path& payload) {
    return std::filesystem::path(payload.string() + ".meta.json");
}

void write_dataset(const std::filesystem::path& path, const TrajectoryBatch& batch) {
    const auto payload = encode_payload(batch);
    const auto meta = canonical_metadata(batch.cfg.kind(), batch.cfg.a(), batch.cfg.nu(), batch.grid.T(),
                                         batch.grid.L(), batch.scale_s, batch.size(), batch.seed, batch.attempts);
    json side = {{"format_version", kDatasetFormatVersion},
                 {"kind", to_string(batch.cfg.kind())},
                 {"a", batch.cfg.a()},
                 {"nu", batch.cfg.nu()},
                 {"T", batch.grid.T()},
                 {"L", batch.grid.L()},
                 {"s", batch.scale_s},
                 {"N", batch.size()},
                 {"seed", batch.seed},
                 {"attempts", batch.attempts},
                 {"content_hash", hash_dataset(meta, payload)}};

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("write failed for " + path.string());
    write_text_file(sidecar_path(path), side.dump(2) + "\n");
}

TrajectoryBatch read_dataset(const std::filesystem::path& path) {
    const json side = parse_json(read_text_file(sidecar_path(path)), "dataset sidecar");
    try {
        const int version = side.at("format_version").get<int>();
        if (version != kDatasetFormatVersion)
            throw VersionError("dataset format version " + std::to_string(version) + ", expected " +
                               std::to_string(kDatasetFormatVersion));
        const FlowKind kind = parse_flow_kind(side.at("kind").get<std::string>());
        const double a = side.at("a").get<double>();
        const double nu = side.at("nu").get<double>();
        const double T = side.at("T").get<double>();
        const int L = side.at("L").get<int>();
        const double s = side.at("s").get<double>();
        const auto n = side.at("N").get<std::size_t>();
        const auto seed = side.at("seed").get<std::uint64_t>();
        const auto attempts = side.at("attempts").get<std::uint64_t>();
        const auto stored_hash = side.at("content_hash").get<std::string>();

        const std::string raw = read_text_file(path);
        const std::size_t expected = n * static_cast<std::size_t>(L) * 2 * 8;
        if (raw.size() != expected)
            throw CorruptionError("dataset payload has " + std::to_string(raw.size()) + " bytes, expected " +
                                  std::to_string(expected));
        const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
        const auto meta = canonical_metadata(kind, a, nu, T, L, s, n, seed, attempts);
        if (hash_dataset(meta, std::span(bytes, raw.size())) != stored_hash)
            throw CorruptionError("dataset hash mismatch for " + path.string());

        TrajectoryBatch batch{StrainConfig(kind, a, nu), TimeGrid(T, L), s, seed, attempts, {}};
        batch.states.resize(n * static_cast<std::size_t>(L));
        for (std::size_t i = 0; i < batch.states.size(); ++i)
            batch.states[i] = {get_le(bytes + 16 * i), get_le(bytes + 16 * i + 8)};
        return batch;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("dataset sidecar: ") + e.what());
    }
}

// ---------------------------------------------------------------------------------------------
// checkpoints

std::string checkpoint_to_string(const ScoreModel& model) {
    json layers = json::array();
    for (const auto& l : model.layers()) {
        // column-major, matching Eigen's storage
        std::vector<double> w(l.weight.data(), l.weight.data() + l.weight.size());
        std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
        layers.push_back({{"rows", l.weight.rows()}, {"cols", l.weight.cols()}, {"weight", w}, {"bias", b}});
    }
    const auto& n = model.norm();
    json j = {{"format", "vortexscore-checkpoint"},
              {"format_version", kCheckpointFormatVersion},
              {"architecture", to_json(model.architecture())},
              {"embedding", {{"dim", model.embedding().dim()}, {"frequencies", model.embedding().frequencies}}},
              {"normalization",
               {{"input_mean", to_json(n.input_mean)},
                {"input_std", to_json(n.input_std)},
                {"target_mean", to_json(n.target_mean)},
                {"target_std", to_json(n.target_std)}}},
              {"grid", {{"T", model.grid().T()}, {"L", model.grid().L()}, {"dt", model.grid().dt()}}},
              {"dataset_hash", model.dataset_hash()},
              {"layers", layers}};
    return j.dump(1) + "\n";
}

ScoreModel checkpoint_from_string(const std::string& text) {
    const json j = parse_json(text, "checkpoint");
    try {
        if (j.at("format").get<std::string>() != "vortexscore-checkpoint") throw SchemaError("not a checkpoint");
        const int version = j.at("format_version").get<int>();
        if (version != kCheckpointFormatVersion)
            throw VersionError("checkpoint format version " + std::to_string(version));
        const Architecture arch = arch_from_json(j.at("architecture"));
        TimeEmbeddingSpec embed{j.at("embedding").at("frequencies").get<std::vector<double>>()};
        const auto& jn = j.at("normalization");
        NormStats norm{vec2_from_json(jn.at("input_mean")), vec2_from_json(jn.at("input_std")),
                       vec2_from_json(jn.at("target_mean")), vec2_from_json(jn.at("target_std"))};
        const TimeGrid grid(j.at("grid").at("T").get<double>(), j.at("grid").at("L").get<int>());
        std::vector<DenseLayer> layers;
        for (const auto& jl : j.at("layers")) {
            const auto rows = jl.at("rows").get<Eigen::Index>();
            const auto cols = jl.at("cols").get<Eigen::Index>();
            const auto w = jl.at("weight").get<std::vector<double>>();
            const auto b = jl.at("bias").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows)
                throw SchemaError("checkpoint layer size mismatch");
            layers.push_back({Eigen::Map<const Eigen::MatrixXd>(w.data(), rows, cols),
                              Eigen::Map<const Eigen::VectorXd>(b.data(), rows)});
        }
        ScoreModel model(arch, grid, norm, std::move(embed), std::move(layers));
        model.set_dataset_hash(j.value("dataset_hash", std::string{}));
        return model;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("checkpoint: ") + e.what());
    }
}

void write_checkpoint(const std::filesystem::path& path, const ScoreModel& model) {
    write_text_file(path, checkpoint_to_string(model));
}

ScoreModel read_checkpoint(const std::filesystem::path& path) { return checkpoint_from_string(read_text_file(path)); }

// ---------------------------------------------------------------------------------------------
// predictions

void write_predictions(std::ostream& out, const ReconstructionResult& result) {
    out << "# model_hash=" << result.model_hash << " dataset_hash=" << result.dataset_hash << "\n";
    out << "index r z\n";
    for (std::size_t i = 0; i < result.predicted_x0.size(); ++i)
        out << result.source_index[i] << " " << num(result.predicted_x0[i].r) << " " << num(result.predicted_x0[i].z)
            << "\n";
}

void write_predictions(const std::filesystem::path& path, const ReconstructionResult& result) {
    std::ostringstream os;
    write_predictions(os, result);
    write_text_file(path, os.str());
}

ReconstructionResult read_predictions(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    ReconstructionResult res;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.front() == '#') {
            std::istringstream ls(line.substr(1));
            std::string tok;
            while (ls >> tok) {
                if (tok.rfind("model_hash=", 0) == 0) res.model_hash = tok.substr(11);
                if (tok.rfind("dataset_hash=", 0) == 0) res.dataset_hash = tok.substr(13);
            }
            continue;
        }
        if (!header) {
            if (line != "index r z") throw SchemaError("predictions table: unexpected header '" + line + "'");
            header = true;
            continue;
        }
        std::istringstream ls(line);
        std::string idx, r, z;
        if (!(ls >> idx >> r >> z)) throw SchemaError("predictions table: malformed row '" + line + "'");
        res.source_index.push_back(static_cast<std::size_t>(parse_num(idx)));
        res.predicted_x0.push_back({parse_num(r), parse_num(z)});
    }
    if (!header) throw SchemaError("predictions table is empty");
    return res;
}

// ---------------------------------------------------------------------------------------------
// results CSV

std::string results_csv_header() { return "flow_kind,nu,s,component,n_trials,mean_rel_mae,std,se,rel_se,converged"; }

void write_results_csv(std::ostream& out, const SweepResult& result) {
    out << "#schema=" << kResultsSchemaVersion << "\n" << results_csv_header() << "\n";
    for (const auto& row : result.rows) {
        for (Component c : {Component::R, Component::Z}) {
            const ComponentStats& st = c == Component::R ? row.r : row.z;
            out << to_string(row.kind) << "," << num(row.nu) << "," << num(row.s) << "," << to_string(c) << ","
                << st.n << "," << num(st.mean) << "," << num(st.std) << "," << num(st.se) << "," << num(st.rel_se)
                << "," << (row.converged ? 1 : 0) << "\n";
        }
    }
}

void write_results_csv(const std::filesystem::path& path, const SweepResult& result) {
    std::ostringstream os;
    write_results_csv(os, result);
    write_text_file(path, os.str());
}

std::vector<ResultsRow> read_results_csv(std::istream& in) {
    std::string line;
    bool header = false;
    std::vector<ResultsRow> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (line.rfind("#schema=", 0) == 0 && line.substr(8) != std::to_string(kResultsSchemaVersion))
                throw VersionError("results CSV schema " + line.substr(8));
            continue;
        }
        if (!header) {
            if (line != results_csv_header()) throw SchemaError("results CSV: unexpected header '" + line + "'");
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 10) throw SchemaError("results CSV: expected 10 columns in '" + line + "'");
        ResultsRow r;
        r.flow_kind = f[0];
        r.nu = parse_num(f[1]);
        r.s = parse_num(f[2]);
        r.component = f[3];
        if (r.component != "R" && r.component != "Z") throw SchemaError("results CSV: bad component '" + f[3] + "'");
        r.n_trials = static_cast<int>(parse_num(f[4]));
        r.mean_rel_mae = parse_num(f[5]);
        r.std = parse_num(f[6]);
        r.se = parse_num(f[7]);
        r.rel_se = parse_num(f[8]);
        r.converged = f[9] == "1";
        rows.push_back(std::move(r));
    }
    if (!header) throw SchemaError("results CSV is empty");
    if (rows.empty()) throw SchemaError("results CSV has no data rows");
    return rows;
}

std::vector<ResultsRow> read_results_csv(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    return read_results_csv(in);
}

// ---------------------------------------------------------------------------------------------
// manifests

std::string manifest_to_string(const TrialManifest& m) {
    const auto& c = m.config;
    json j = {{"format", "vortexscore-trial-manifest"},
              {"format_version", 1},
              {"s", m.s},
              {"seed", m.seed},
              {"strain", to_json(c.strain)},
              {"grid", {{"T", c.grid.T()}, {"L", c.grid.L()}}},
              {"n_samples", c.n_samples},
              {"train_fraction", c.train_fraction},
              {"architecture", to_json(c.arch)},
              {"train", to_json(c.train)}};
    return j.dump(2) + "\n";
}

TrialManifest manifest_from_string(const std::string& text) {
    const json j = parse_json(text, "manifest");
    try {
        if (j.value("format", std::string{}) != "vortexscore-trial-manifest") throw SchemaError("not a trial manifest");
        if (j.at("format_version").get<int>() != 1) throw VersionError("unsupported manifest version");
        TrialManifest m{TrialConfig{strain_from_json(j.at("strain")),
                                    TimeGrid(j.at("grid").at("T").get<double>(), j.at("grid").at("L").get<int>()),
                                    j.at("n_samples").get<std::size_t>(), j.at("train_fraction").get<double>(),
                                    arch_from_json(j.at("architecture")), train_from_json(j.at("train"))},
                        j.at("s").get<double>(), j.at("seed").get<std::uint64_t>()};
        return m;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("manifest: ") + e.what());
    }
}

TrialManifest read_manifest(const std::filesystem::path& path) { return manifest_from_string(read_text_file(path)); }

void write_manifest(const std::filesystem::path& path, const TrialManifest& m) {
    write_text_file(path, manifest_to_string(m));
}

void write_trial_metrics(std::ostream& out, const TrialManifest& m, const TrialOutcome& outcome) {
    out << "flow_kind,nu,s,seed,component,rel_mae\n";
    for (const TrialResult* r : {&outcome.r, &outcome.z})
        out << to_string(m.config.strain.kind()) << "," << num(m.config.strain.nu()) << "," << num(m.s) << ","
            << m.seed << "," << to_string(r->component) << "," << num(r->rel_mae) << "\n";
}

}  // namespace vortexscore
