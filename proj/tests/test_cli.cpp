#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "vortexscore/io.hpp"
#include "vortexscore/plot.hpp"

using namespace vortexscore;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("vortexscore_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Run {
    int status;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "vortexscore");
    std::ostringstream out, err;
    const int status = cli::dispatch(args, out, err);
    return {status, out.str(), err.str()};
}

const std::vector<std::string> kSmallNet{"--encoder-width", "4", "--embed-dim", "4", "--hidden-width", "6",
                                         "--hidden-layers", "1",  "--batch-size", "32", "--epochs", "2"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

TEST_CASE("generate is deterministic") {
    TempDir tmp;
    for (const char* name : {"a.bin", "b.bin"}) {
        const auto r = run({"generate", "--nu", "1", "--s", "1", "--seed", "7", "--N", "50", "--L", "20", "-o", tmp / name});
        REQUIRE(r.status == 0);
    }
    CHECK(read_text_file(tmp / "a.bin") == read_text_file(tmp / "b.bin"));
    CHECK(read_text_file(tmp / "a.bin.meta.json") == read_text_file(tmp / "b.bin.meta.json"));
}

TEST_CASE("usage errors") {
    CHECK(run({"generate", "--bogus"}).status == cli::kUsage);
    CHECK(run({"frobnicate"}).status == cli::kUsage);
    CHECK(run({"--help"}).status == 0);
    const auto r = run({"train"});
    CHECK(r.status == cli::kUsage);
}

TEST_CASE("runtime errors map to distinct statuses") {
    TempDir tmp;
    CHECK(run({"train", "--data", tmp / "missing.bin"}).status == cli::kIo);
    CHECK(run({"generate", "--a", "-1", "-o", tmp / "x.bin"}).status == cli::kPrecondition);
    REQUIRE(run({"generate", "--N", "10", "--L", "5", "-o", tmp / "d.bin"}).status == 0);
    write_text_file(tmp / "d.bin.meta.json", "{}");
    CHECK(run({"train", "--data", tmp / "d.bin"}).status == cli::kSchema);
}

TEST_CASE("generate, train, reconstruct, evaluate") {
    TempDir tmp;
    REQUIRE(run({"generate", "--kind", "planar2d", "--N", "60", "--L", "12", "--seed", "3", "-o", tmp / "d.bin"}).status == 0);
    const auto tr = run(with({"train", "--data", tmp / "d.bin", "-o", tmp / "m.json"}, kSmallNet));
    INFO(tr.err);
    REQUIRE(tr.status == 0);
    const auto rec = run({"reconstruct", "--checkpoint", tmp / "m.json", "--data", tmp / "d.bin", "-o", tmp / "p.txt"});
    INFO(rec.err);
    REQUIRE(rec.status == 0);
    const auto pred = read_predictions(tmp / "p.txt");
    CHECK(pred.predicted_x0.size() == 12);
    CHECK(pred.model_hash == model_hash(read_checkpoint(tmp / "m.json")));
    CHECK(pred.dataset_hash == batch_hash(read_dataset(tmp / "d.bin")));

    const auto ev = run({"evaluate", "--predictions", tmp / "p.txt", "--data", tmp / "d.bin"});
    REQUIRE(ev.status == 0);
    CHECK(ev.out.rfind("component,rel_mae\nR,", 0) == 0);
    CHECK(ev.out.find("\nZ,") != std::string::npos);

    // predictions for the validation split do not line up with the full dataset
    CHECK(run({"evaluate", "--predictions", tmp / "p.txt", "--data", tmp / "d.bin", "--split", "all"}).status ==
          cli::kPrecondition);
}

TEST_CASE("trial manifest replay is bit identical") {
    TempDir tmp;
    const auto first = run(with({"trial", "--N", "30", "--L", "8", "--s", "2", "--seed", "9", "--write-manifest",
                                 tmp / "m.json", "-o", tmp / "a.csv"},
                                kSmallNet));
    INFO(first.err);
    REQUIRE(first.status == 0);
    REQUIRE(run({"trial", "--manifest", tmp / "m.json", "-o", tmp / "b.csv"}).status == 0);
    const auto third = run({"trial", "--manifest", tmp / "m.json"});
    const std::string a = read_text_file(tmp / "a.csv");
    CHECK(a == read_text_file(tmp / "b.csv"));
    CHECK(a == third.out);
    CHECK(a.rfind("flow_kind,nu,s,seed,component,rel_mae\n", 0) == 0);
}

TEST_CASE("sweep over twelve s values") {
    TempDir tmp;
    const auto r = run(with({"sweep", "--nu", "0.01", "--s", "1..12", "--N", "10", "--L", "4", "--max-trials", "2",
                             "-o", tmp / "results.csv"},
                            kSmallNet));
    INFO(r.err);
    REQUIRE(r.status == 0);
    const auto rows = read_results_csv(fs::path(tmp / "results.csv"));
    CHECK(rows.size() == 24);
    CHECK(rows.front().s == 1.0);
    CHECK(rows.back().s == 12.0);
    CHECK(rows.back().component == "Z");
}

TEST_CASE("oracle-check") {
    const auto r = run({"oracle-check"});
    CHECK(r.status == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("plot") {
    TempDir tmp;
    const std::string fixture = std::string(VORTEXSCORE_TEST_DATA) + "/results_fixture.csv";
    REQUIRE(run({"plot", fixture, "-o", tmp / "a.svg", "--title", "fixture"}).status == 0);
    CHECK(read_text_file(tmp / "a.svg") == render_results_svg(read_results_csv(fs::path(fixture)), "fixture"));

    write_text_file(tmp / "empty.csv", "");
    CHECK(run({"plot", tmp / "empty.csv", "-o", tmp / "b.svg"}).status == cli::kSchema);

    REQUIRE(run({"generate", "--N", "10", "--L", "6", "-o", tmp / "d.bin"}).status == 0);
    REQUIRE(run({"plot", "--trajectories", tmp / "d.bin", "--samples", "3", "-o", tmp / "t.svg"}).status == 0);
    CHECK(read_text_file(tmp / "t.svg").find("<svg") == 0);
}
