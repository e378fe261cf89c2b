#include "nslf/cli/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "nslf/ingest/mesh_io.hpp"
#include "nslf/ingest/png_io.hpp"
#include "nslf/ingest/synth.hpp"
#include "nslf/ingest/unproject.hpp"
#include "nslf/render/metrics.hpp"
#include "nslf/render/render.hpp"
#include "nslf/verify/suites.hpp"

namespace nslf {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

nlohmann::json vec_json(const Vec3d& v) { return {v.x, v.y, v.z}; }

nlohmann::json intrinsics_json(const CameraIntrinsics& K) {
  return {{"fx", K.fx},       {"fy", K.fy},         {"cx", K.cx},
          {"cy", K.cy},       {"width", K.width},   {"height", K.height},
          {"depth_scale", K.depth_scale}};
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return kExitUsage;
  return kExitData;
}

CameraIntrinsics resolve_intrinsics(const RunConfig& c) {
  if (!c.intrinsics.empty()) return read_intrinsics(c.intrinsics);
  if (!c.dataset.empty() && fs::is_regular_file(c.dataset / "intrinsics.txt"))
    return read_intrinsics(c.dataset / "intrinsics.txt");
  CameraIntrinsics K;
  K.width = c.width;
  K.height = c.height;
  K.fx = K.fy = c.focal;
  K.cx = (c.width - 1) / 2.0;
  K.cy = (c.height - 1) / 2.0;
  K.validate();
  return K;
}

TrainSummary cmd_train(const RunConfig& c) {
  c.validate(Command::Train);
  const ManaConfig mana = c.mana_config();
  fs::create_directories(c.out);
  write_text(c.out / "config.txt", c.dump());

  SequenceReader reader(c.dataset, c.sequence_options(c.skip));
  TrainSummary summary;
  nlohmann::json log;
  log["frames"] = nlohmann::json::array();
  if (reader.size() == 0) spdlog::warn("train: sequence '{}' yields no frames", c.dataset.string());
  spdlog::info("train: {} frame(s) of {} after skip {}", reader.size(), reader.total_entries(), c.skip);

  ManaRuntime runtime(mana);
  double feed_total = 0;
  while (auto frame = reader.next()) {
    const ColoredPointBatch batch =
        unproject_frame(frame->depth, frame->color, frame->intrinsics, frame->pose, c.pixel_stride);
    const FeedAck ack = runtime.feed_frame(batch);
    double loss_sum = 0;
    std::size_t loss_n = 0;
    for (const auto& s : runtime.stats())
      if (s.trained_iters > 0) {
        loss_sum += s.last_loss;
        ++loss_n;
      }
    log["frames"].push_back({{"index", frame->index},
                             {"timestamp", frame->timestamp},
                             {"points", ack.points},
                             {"routed", ack.routed},
                             {"rejected", ack.rejected.size()},
                             {"regions_touched", ack.regions_touched},
                             {"agents_spawned", ack.agents_spawned},
                             {"granted", ack.granted},
                             {"feed_seconds", ack.seconds},
                             {"mean_last_loss", loss_n ? nlohmann::json(loss_sum / loss_n) : nlohmann::json(nullptr)}});
    spdlog::debug("frame {}: {} points, {} regions, feed {:.2f} ms", frame->index, ack.points, ack.regions_touched,
                  1e3 * ack.seconds);
    ++summary.frames;
    summary.points += ack.points;
    summary.granted += ack.granted;
    feed_total += ack.seconds;
    summary.max_feed_seconds = std::max(summary.max_feed_seconds, ack.seconds);
  }

  const auto t_drain = Clock::now();
  const Snapshot snapshot = runtime.quiesce_and_snapshot(DrainPolicy::Drain);
  const double drain_seconds = seconds_since(t_drain);
  save_snapshot(c.out / "checkpoint", snapshot);

  summary.agents = snapshot.models.size();
  summary.mean_feed_seconds = summary.frames ? feed_total / static_cast<double>(summary.frames) : 0.0;
  auto& agents = log["agents"] = nlohmann::json::array();
  for (const auto& s : runtime.stats())
    agents.push_back({{"region", to_string(s.region)},
                      {"trained_iters", s.trained_iters},
                      {"granted", s.granted},
                      {"consumed", s.consumed},
                      {"skipped", s.skipped},
                      {"slices", s.slices},
                      {"samples", s.samples},
                      {"last_loss", s.last_loss}});
  log["summary"] = {{"frames", summary.frames},
                    {"points", summary.points},
                    {"agents", summary.agents},
                    {"granted", summary.granted},
                    {"mean_feed_seconds", summary.mean_feed_seconds},
                    {"max_feed_seconds", summary.max_feed_seconds},
                    {"drain_seconds", drain_seconds}};
  write_text(c.out / "train_log.json", log.dump(2) + "\n");
  spdlog::info("train: {} frame(s), {} point(s), {} agent(s), mean feed {:.2f} ms; checkpoint in '{}'",
               summary.frames, summary.points, summary.agents, 1e3 * summary.mean_feed_seconds,
               (c.out / "checkpoint").string());
  return summary;
}

std::size_t cmd_render(const RunConfig& c) {
  c.validate(Command::Render);
  const Snapshot snapshot = load_snapshot(c.checkpoint);
  const TriangleMesh mesh = load_mesh(c.mesh);
  const Bvh bvh = Bvh::build(mesh);
  const CameraIntrinsics K = resolve_intrinsics(c);
  const auto poses = read_tum_trajectory(c.trajectory);
  if (snapshot.models.empty()) spdlog::warn("render: checkpoint has no agents, output will be uncovered gray");
  fs::create_directories(c.out);

  nlohmann::json log;
  log["intrinsics"] = intrinsics_json(K);
  auto& frames = log["frames"] = nlohmann::json::array();
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const auto t0 = Clock::now();
    const RenderResult r = render_view(snapshot, mesh, bvh, K, poses[i].pose);
    const double seconds = seconds_since(t0);
    const std::string name = fmt::format("frame_{:06d}.png", i);
    write_png_rgb((c.out / name).string(), r.image);
    frames.push_back({{"file", name},
                      {"timestamp", poses[i].timestamp},
                      {"hits", r.hits},
                      {"uncovered", r.uncovered},
                      {"render_seconds", seconds}});
    if (r.uncovered > 0) spdlog::info("render: frame {} has {} uncovered pixel(s)", i, r.uncovered);
  }
  write_text(c.out / "render_log.json", log.dump(2) + "\n");
  spdlog::info("render: wrote {} frame(s) to '{}'", poses.size(), c.out.string());
  return poses.size();
}

MetricsReport cmd_eval(const RunConfig& c) {
  c.validate(Command::Eval);
  const Snapshot snapshot = load_snapshot(c.checkpoint);
  const TriangleMesh mesh = load_mesh(c.mesh);
  const Bvh bvh = Bvh::build(mesh);

  // the view directions the agents saw, rebuilt from the training frames
  TrainedDirections trained(c.match_radius);
  {
    SequenceReader train_frames(c.dataset, c.sequence_options(c.skip));
    while (auto f = train_frames.next()) {
      trained.add(unproject_frame(f->depth, f->color, f->intrinsics, f->pose, c.pixel_stride));
      trained.add_camera(f->pose);
    }
  }

  MetricsReport report;
  report.model = snapshot.models.empty() ? "none" : to_string(kind_of(snapshot.models.begin()->second));
  AngleEvalOptions angle_options;
  angle_options.thresholds_deg = c.thresholds;
  AngleEvalResult angles;
  SequenceReader eval_frames(c.dataset, c.sequence_options(c.eval_skip));
  while (auto f = eval_frames.next()) {
    FrameMetrics m;
    m.index = f->index;
    m.timestamp = f->timestamp;
    const auto t0 = Clock::now();
    const RaycastResult rays = raycast(bvh, mesh, f->intrinsics, f->pose);
    const RenderResult rendered = render_from_raycast(snapshot, rays, f->pose);
    m.render_seconds = seconds_since(t0);
    m.covered_pixels = rendered.hits - rendered.uncovered;
    m.uncovered_pixels = rendered.uncovered;
    try {
      m.psnr = psnr(rendered.image, f->color);
      m.ssim = ssim(rendered.image, f->color);
    } catch (const DomainError&) {
      spdlog::warn("eval: frame {} has no pixel covered by the model", f->index);
    }
    accumulate_angle_eval(angles, rays, rendered.image, f->color, f->pose, trained, angle_options);
    report.frames.push_back(m);
  }
  if (report.frames.empty()) spdlog::warn("eval: sequence '{}' yields no frames", c.dataset.string());
  if (angles.buckets.empty())
    for (double t : c.thresholds) angles.buckets.push_back({t, 0, 0.0, std::nullopt});
  report.buckets = angles.buckets;
  report.angle_evaluated_pixels = angles.evaluated_pixels;
  report.angle_unmatched_pixels = angles.unmatched_pixels;
  report.finalize();

  fs::create_directories(c.out);
  write_text(c.out / "metrics.json", report.to_json().dump(2) + "\n");
  write_text(c.out / "metrics.txt", report.to_text());
  return report;
}

void cmd_synth(const RunConfig& c) {
  c.validate(Command::Synth);
  SynthScene scene;
  if (c.scene == "plane") {
    scene = SynthScene::textured_plane({0, 0, 0}, {0, 0, 1}, 1.0);
  } else {
    scene = SynthScene::shiny_sphere({0, 0, 0}, 1.0, c.specular);
    scene.light_dir = {0.3, -0.4, 0.85};
  }
  scene.texture_seed = c.seed;
  scene.validate();

  CameraIntrinsics K;
  K.width = c.width;
  K.height = c.height;
  K.fx = K.fy = c.focal;
  K.cx = (c.width - 1) / 2.0;
  K.cy = (c.height - 1) / 2.0;
  K.validate();

  const Vec3d axis{0, 0, 1};
  const std::vector<Pose> poses = c.synth_path == "cone"
                                      ? cone_trajectory({0, 0, 0}, axis, c.distance, c.view_angle, c.poses, c.seed)
                                      : ring_trajectory({0, 0, 0}, axis, c.distance, c.view_angle, c.poses);
  const SynthSequence seq = synth_scene_frames(scene, poses, K);
  std::vector<DepthImage> depths;
  std::vector<Image> colors;
  for (const auto& f : seq.frames) {
    depths.push_back(f.depth);
    colors.push_back(f.color);
  }
  fs::create_directories(c.out);
  write_tum_sequence(c.out, depths, colors, poses, K);
  write_obj(c.out / "mesh.obj", seq.oracle.mesh());

  const auto& s = scene;
  nlohmann::json oracle = {
      {"format_version", 1},
      {"scene",
       {{"surface", s.surface == SynthSurface::Plane ? "plane" : "sphere"},
        {"center", vec_json(s.center)},
        {"radius", s.radius},
        {"normal", vec_json(s.normal)},
        {"half_size", s.half_size},
        {"texture_seed", s.texture_seed},
        {"texture_frequency", s.texture_frequency},
        {"texture_amplitude", s.texture_amplitude},
        {"base_albedo", vec_json(s.base_albedo)},
        {"light_dir", vec_json(s.light_dir)},
        {"ambient", s.ambient},
        {"diffuse", s.diffuse},
        {"specular_strength", s.specular_strength},
        {"specular_exponent", s.specular_exponent}}},
      {"trajectory",
       {{"kind", c.synth_path},
        {"axis", vec_json(axis)},
        {"distance", c.distance},
        {"view_angle_deg", c.view_angle},
        {"poses", c.poses},
        {"seed", c.seed}}},
      {"intrinsics", intrinsics_json(K)}};
  write_text(c.out / "oracle.json", oracle.dump(2) + "\n");
  spdlog::info("synth: {} {} frame(s) written to '{}'", poses.size(), c.scene, c.out.string());
}

int cmd_verify(const std::vector<std::string>& suites, std::ostream& out) {
  std::vector<std::string> names;
  for (const auto& s : suites) {
    if (s == "all") {
      for (const auto& n : verify::suite_names()) names.push_back(n);
      continue;
    }
    const auto known = verify::suite_names();
    if (std::find(known.begin(), known.end(), s) == known.end())
      throw UsageError(fmt::format("unknown suite '{}' (expected grad, sh, partition, async or all)", s));
    names.push_back(s);
  }
  if (names.empty()) throw UsageError("verify: no suite named");
  bool ok = true;
  for (const auto& name : names) {
    const verify::SuiteReport rep = verify::run_suite(name);
    for (const auto& check : rep.checks)
      out << fmt::format("[{}] {} {}: {}\n", rep.suite, check.passed ? "PASS" : "FAIL", check.name, check.detail);
    out << fmt::format("[{}] {} in {:.1f} s\n", rep.suite, rep.passed() ? "passed" : "FAILED", rep.seconds);
    ok = ok && rep.passed();
  }
  return ok ? kExitOk : kExitVerifyFailed;
}

}  // namespace nslf
