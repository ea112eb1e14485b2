#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "vortexscore/error.hpp"
#include "vortexscore/io.hpp"
#include "vortexscore/plot.hpp"

using namespace vortexscore;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("vortexscore_io_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

TrajectoryBatch sample_batch() {
    return generate_batch(StrainConfig(FlowKind::Axisymmetric3D, 1.0, 0.01), TimeGrid(2.0, 12), 3.0, 10, 42);
}

void edit_sidecar(const fs::path& data, const std::string& key, const nlohmann::json& value) {
    auto j = nlohmann::json::parse(read_text_file(sidecar_path(data)));
    j[key] = value;
    write_text_file(sidecar_path(data), j.dump(2));
}

}  // namespace

TEST_CASE("fnv1a64 reference values") {
    CHECK(fnv1a64({}) == 0xcbf29ce484222325ULL);
    const std::string a = "a";
    CHECK(fnv1a64(std::span(reinterpret_cast<const unsigned char*>(a.data()), a.size())) == 0xaf63dc4c8601ec8cULL);
    CHECK(to_hex(0xaf63dc4c8601ec8cULL) == "af63dc4c8601ec8c");
}

TEST_CASE("dataset round trip and validation") {
    TempDir tmp;
    const fs::path p = tmp.path / "batch.bin";
    const auto batch = sample_batch();
    write_dataset(p, batch);
    CHECK(fs::file_size(p) == batch.size() * 12 * 2 * sizeof(double));
    CHECK(read_dataset(p) == batch);

    SUBCASE("truncated payload") {
        fs::resize_file(p, fs::file_size(p) - sizeof(double));
        CHECK_THROWS_AS(read_dataset(p), CorruptionError);
    }
    SUBCASE("edited metadata breaks the hash") {
        edit_sidecar(p, "nu", 1.0);
        CHECK_THROWS_AS(read_dataset(p), CorruptionError);
    }
    SUBCASE("flipped payload byte") {
        std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(17);
        f.put('\x7f');
        f.close();
        CHECK_THROWS_AS(read_dataset(p), CorruptionError);
    }
    SUBCASE("unknown version") {
        edit_sidecar(p, "format_version", 99);
        CHECK_THROWS_AS(read_dataset(p), VersionError);
    }
    SUBCASE("malformed sidecar") {
        write_text_file(sidecar_path(p), "{ not json");
        CHECK_THROWS_AS(read_dataset(p), SchemaError);
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(read_dataset(tmp.path / "nope.bin"), IoError); }
}

TEST_CASE("checkpoint reload is bit exact") {
    TempDir tmp;
    NormStats st;
    st.input_mean = {54.1, 1.0 / 3.0};
    st.input_std = {0.1 + 1e-17, 7.0};
    st.target_mean = {-1e-300, 2.5};
    Architecture arch;
    arch.encoder_width = 5;
    arch.embed_dim = 6;
    arch.hidden_width = 7;
    arch.hidden_layers = 2;
    arch.activation = Activation::Tanh;
    ScoreModel m = ScoreModel::initialize(arch, TimeGrid(2.0, 33), st, 99);
    m.set_dataset_hash("0123456789abcdef");
    write_checkpoint(tmp.path / "m.json", m);
    const ScoreModel back = read_checkpoint(tmp.path / "m.json");
    CHECK(back == m);
    CHECK(model_hash(back) == model_hash(m));
    CHECK(net_forward(back, {1.5, -0.5}, 4) == net_forward(m, {1.5, -0.5}, 4));

    std::string text = checkpoint_to_string(m);
    text.replace(text.find("\"format_version\": 1"), 19, "\"format_version\": 7");
    CHECK_THROWS_AS(checkpoint_from_string(text), VersionError);
    CHECK_THROWS_AS(checkpoint_from_string("[]"), SchemaError);
}

TEST_CASE("predictions round trip") {
    TempDir tmp;
    ReconstructionResult r;
    r.predicted_x0 = {{1.0 / 3.0, -2e-9}, {54.59815003314423, 1.0}};
    r.source_index = {0, 1};
    r.model_hash = "aaaa";
    r.dataset_hash = "bbbb";
    write_predictions(tmp.path / "p.txt", r);
    const auto back = read_predictions(tmp.path / "p.txt");
    CHECK(back.predicted_x0 == r.predicted_x0);
    CHECK(back.source_index == r.source_index);
    CHECK(back.model_hash == "aaaa");
    CHECK(back.dataset_hash == "bbbb");
}

TEST_CASE("results CSV") {
    SweepResult sw;
    TrialStatistics row;
    row.kind = FlowKind::Planar2D;
    row.nu = 0.01;
    row.s = 3;
    row.r = {12, 0.1 / 3, 0.02, 0.005, 0.05};
    row.z = {12, 0.01, 0.002, 0.0005, 0.05};
    row.converged = true;
    sw.rows = {row};
    std::stringstream ss;
    write_results_csv(ss, sw);
    const auto rows = read_results_csv(ss);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].flow_kind == "planar2d");
    CHECK(rows[0].component == "R");
    CHECK(rows[0].mean_rel_mae == 0.1 / 3);
    CHECK(rows[1].component == "Z");
    CHECK(rows[1].n_trials == 12);
    CHECK(rows[1].converged);

    std::stringstream empty;
    CHECK_THROWS_AS(read_results_csv(empty), SchemaError);
    std::stringstream header_only("#schema=1\n" + results_csv_header() + "\n");
    CHECK_THROWS_AS(read_results_csv(header_only), SchemaError);
    std::stringstream future("#schema=9\n" + results_csv_header() + "\n");
    CHECK_THROWS_AS(read_results_csv(future), VersionError);
}

TEST_CASE("manifest round trip") {
    TrialManifest m;
    m.s = 4;
    m.seed = 123456789012345ULL;
    m.config.strain = StrainConfig(FlowKind::Planar2D, 1.5, 0.01);
    m.config.grid = TimeGrid(2.0, 100);
    m.config.n_samples = 4000;
    m.config.train.max_epochs = 7;
    m.config.arch.hidden_layers = 2;
    const std::string text = manifest_to_string(m);
    const TrialManifest back = manifest_from_string(text);
    CHECK(manifest_to_string(back) == text);
    CHECK(back.config.grid == m.config.grid);
    CHECK(back.config.strain == m.config.strain);
    CHECK(back.seed == m.seed);
    CHECK_THROWS_AS(manifest_from_string("{\"format\": \"other\"}"), SchemaError);
}

TEST_CASE("results chart") {
    const fs::path data = VORTEXSCORE_TEST_DATA;
    const auto rows = read_results_csv(data / "results_fixture.csv");
    const std::string svg = render_results_svg(rows, "fixture");
    CHECK(svg == render_results_svg(rows, "fixture"));
    CHECK(svg == read_text_file(data / "results_fixture.svg"));

    const auto single = read_results_csv(data / "single_row.csv");
    const std::string one = render_results_svg(single);
    CHECK(one.find("<svg") == 0);
    CHECK(one.find("<circle") != std::string::npos);

    CHECK_THROWS_AS(render_results_svg(std::vector<ResultsRow>{}), SchemaError);
    TempDir tmp;
    write_text_file(tmp.path / "empty.csv", "");
    CHECK_THROWS_AS(emit_svg(tmp.path / "empty.csv", tmp.path / "out.svg"), SchemaError);
}
