#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "nslf/cli/commands.hpp"
#include "nslf/core/errors.hpp"
#include "nslf/ingest/png_io.hpp"
#include "test_util.hpp"

using namespace nslf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NSLF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunConfig tiny_synth(const fs::path& out) {
  RunConfig c;
  c.scene = "sphere";
  c.poses = 5;
  c.width = 40;
  c.height = 30;
  c.focal = 40;
  c.out = out;
  c.seed = 2;
  return c;
}

RunConfig tiny_train(const fs::path& dataset, const fs::path& out) {
  RunConfig c;
  c.dataset = dataset;
  c.out = out;
  c.skip = 1;
  c.pixel_stride = 1;
  c.deterministic = true;
  c.quota = 40;
  c.batch_size = 64;
  c.bbox_min = {-2, -2, -2};
  c.bbox_max = {2, 2, 2};
  c.grid.levels = 4;
  c.grid.log2_table_size = 10;
  return c;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config: defaults follow the experimental setup") {
    const RunConfig c;
    CHECK(c.skip == 20);
    CHECK(c.cell_edge == 4.0);
    CHECK(c.lr == 1e-3);
    CHECK(c.grid.max_resolution == 512);
    CHECK(c.model == ModelKind::NslfSh);
    CHECK(c.mana_config().adam.learning_rate == 1e-3);
  }

  TEST_CASE("config: keys, file, environment and precedence") {
    test::TempDir dir("cfg");
    std::ofstream(dir / "run.cfg") << "# comment\nskip = 5\nmodel = hg\n\nlr=0.01  # trailing\nbbox_min = -1, -2, -3\n";
    RunConfig c;
    c.apply_file(dir / "run.cfg");
    CHECK(c.skip == 5);
    CHECK(c.model == ModelKind::Hg);
    CHECK(c.lr == 0.01);
    CHECK(c.bbox_min == Vec3d{-1, -2, -3});
    c.apply_env({{"NSLFOL_SKIP", "7"}, {"NSLFOL_CELL_EDGE", "2.5"}, {"HOME", "/x"}});
    CHECK(c.skip == 7);
    CHECK(c.cell_edge == 2.5);
    c.set("skip", "9");
    CHECK(c.skip == 9);
    c.set("thresholds", "10,20");
    CHECK(c.thresholds == std::vector<double>{10, 20});
    c.set("deterministic", "true");
    CHECK(c.deterministic);

    CHECK_THROWS_AS(c.set("no_such_key", "1"), UsageError);
    CHECK_THROWS_AS(c.set("skip", "many"), UsageError);
    CHECK_THROWS_AS(c.set("model", "nerf"), UsageError);
    CHECK_NOTHROW(c.apply_env({{"NSLFOL_BOGUS", "1"}}));
    CHECK_THROWS_AS(c.apply_env({{"NSLFOL_SKIP", "x"}}), UsageError);
    std::ofstream(dir / "bad.cfg") << "skip 5\n";
    CHECK_THROWS_AS(c.apply_file(dir / "bad.cfg"), UsageError);
    CHECK_THROWS_AS(c.apply_file(dir / "missing.cfg"), DataError);
  }

  TEST_CASE("config: dump round-trips through apply_file") {
    test::TempDir dir("dump");
    RunConfig a;
    a.set("skip", "3");
    a.set("model", "hg");
    a.set("bbox_max", "4,5,6");
    a.set("match_radius", "0.05");
    a.set("dataset", (dir / "data").string());
    std::ofstream(dir / "dump.cfg") << a.dump();
    RunConfig b;
    b.apply_file(dir / "dump.cfg");
    CHECK(b.dump() == a.dump());
    for (const auto& k : RunConfig::keys()) CHECK(a.dump().find(k + " = ") != std::string::npos);
  }

  TEST_CASE("config: validation of values and paths") {
    RunConfig c;
    c.skip = 0;
    CHECK_THROWS_AS(c.validate(Command::Verify), UsageError);
    c = RunConfig{};
    CHECK_THROWS_AS(c.validate(Command::Train), UsageError);  // dataset missing
    c.dataset = "/definitely/not/here";
    CHECK_THROWS_AS(c.validate(Command::Train), DataError);
    c = RunConfig{};
    c.cell_edge = -1;
    CHECK_THROWS_AS(c.validate(Command::Verify), UsageError);
  }

  TEST_CASE("metrics report: aggregates, JSON round trip and schema version") {
    MetricsReport r;
    r.model = "nslf_sh";
    r.frames.push_back({0, 0.0, 30.0, 0.9, 100, 2, 0.5});
    r.frames.push_back({1, 0.1, 20.0, 0.7, 90, 0, 1.5});
    r.frames.push_back({2, 0.2, std::nullopt, std::nullopt, 0, 0, 1.0});
    r.buckets.push_back({15.0, 10, 0.5, 25.0});
    r.buckets.push_back({30.0, 0, 0.0, std::nullopt});
    r.finalize();
    CHECK(*r.mean_psnr == doctest::Approx(25.0));
    CHECK(*r.mean_ssim == doctest::Approx(0.8));
    CHECK(r.mean_render_seconds == doctest::Approx(1.0));

    const auto j = r.to_json();
    CHECK(j["schema_version"] == kMetricsSchemaVersion);
    CHECK(j["aggregate"]["frame_count"] == 3);
    const MetricsReport back = MetricsReport::from_json(j);
    CHECK(back.to_json() == j);
    CHECK(!back.frames[2].psnr.has_value());
    CHECK(!back.buckets[1].psnr.has_value());
    CHECK(r.to_text().find("25") != std::string::npos);

    auto wrong = j;
    wrong["schema_version"] = 99;
    CHECK_THROWS_AS(MetricsReport::from_json(wrong), DataError);
    auto missing = j;
    missing.erase("frames");
    CHECK_THROWS_AS(MetricsReport::from_json(missing), DataError);
  }

  TEST_CASE("exit codes") {
    CHECK(exit_code_for(UsageError("x")) == kExitUsage);
    CHECK(exit_code_for(DataError("x")) == kExitData);
    CHECK(exit_code_for(std::runtime_error("x")) == kExitData);
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("--no-such-flag verify sh") == kExitUsage);
    CHECK(run_cli("") == kExitUsage);
    CHECK(run_cli("verify nonsense") == kExitUsage);
    CHECK(run_cli("--skip 0 verify partition") == kExitUsage);
    CHECK(run_cli("train --dataset /definitely/not/here") == kExitData);
    CHECK(run_cli("verify partition") == kExitOk);
  }

  TEST_CASE("verify command prints one line per check") {
    std::ostringstream os;
    CHECK(cmd_verify({"partition"}, os) == kExitOk);
    const std::string out = os.str();
    CHECK(out.find("[partition] PASS") != std::string::npos);
    CHECK(out.find("FAIL") == std::string::npos);
    CHECK_THROWS_AS(cmd_verify({"bogus"}, os), UsageError);
  }

  TEST_CASE("integration: synth, train, render, eval") {
    test::TempDir dir("pipeline");
    const fs::path data = dir / "data";
    cmd_synth(tiny_synth(data));
    for (const char* f : {"associations.txt", "groundtruth.txt", "intrinsics.txt", "mesh.obj", "oracle.json"})
      CHECK(fs::exists(data / f));
    std::size_t depth_files = 0, rgb_files = 0;
    for (const auto& e : fs::directory_iterator(data / "depth")) depth_files += e.path().extension() == ".png";
    for (const auto& e : fs::directory_iterator(data / "rgb")) rgb_files += e.path().extension() == ".png";
    CHECK(depth_files == 5);
    CHECK(rgb_files == 5);

    const TrainSummary s = cmd_train(tiny_train(data, dir / "train"));
    CHECK(s.frames == 5);
    CHECK(s.points > 0);
    CHECK(s.agents >= 1);
    CHECK(s.granted == 5 * 40);
    CHECK(fs::exists(dir / "train" / "checkpoint" / "manifest.json"));
    CHECK(fs::exists(dir / "train" / "config.txt"));
    const auto log = nlohmann::json::parse(slurp(dir / "train" / "train_log.json"));
    CHECK(log["frames"].size() == 5);
    CHECK(log["summary"]["agents"] == s.agents);

    // deterministic retraining reproduces the checkpoint byte for byte
    cmd_train(tiny_train(data, dir / "train2"));
    for (const auto& e : fs::directory_iterator(dir / "train" / "checkpoint"))
      CHECK(slurp(e.path()) == slurp(dir / "train2" / "checkpoint" / e.path().filename()));

    RunConfig r = tiny_train(data, dir / "render");
    r.checkpoint = dir / "train" / "checkpoint";
    r.mesh = data / "mesh.obj";
    r.trajectory = data / "groundtruth.txt";
    CHECK(cmd_render(r) == 5);
    const Image f0 = read_png_rgb((dir / "render" / "frame_000000.png").string());
    CHECK(f0.width == 40);
    CHECK(f0.height == 30);
    CHECK(fs::exists(dir / "render" / "render_log.json"));

    RunConfig e = tiny_train(data, dir / "eval");
    e.checkpoint = r.checkpoint;
    e.mesh = r.mesh;
    e.match_radius = 0.05;
    const MetricsReport m = cmd_eval(e);
    CHECK(m.frames.size() == 5);
    REQUIRE(m.mean_psnr.has_value());
    CHECK(*m.mean_psnr > 15.0);
    CHECK(m.buckets.size() == 3);
    const auto mj = nlohmann::json::parse(slurp(dir / "eval" / "metrics.json"));
    CHECK(MetricsReport::from_json(mj).frames.size() == 5);
    CHECK(fs::exists(dir / "eval" / "metrics.txt"));
  }

  TEST_CASE("integration: an empty sequence still yields an empty checkpoint") {
    test::TempDir dir("empty");
    const fs::path data = dir / "data";
    fs::create_directories(data);
    std::ofstream(data / "associations.txt") << "# none\n";
    std::ofstream(data / "groundtruth.txt") << "# none\n";
    const TrainSummary s = cmd_train(tiny_train(data, dir / "out"));
    CHECK(s.frames == 0);
    CHECK(s.agents == 0);
    const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "checkpoint" / "manifest.json"));
    CHECK(manifest["agents"].empty());
  }
}
