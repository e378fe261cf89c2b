#include "nslf/cli/metrics_report.hpp"

#include <fmt/format.h>

#include "nslf/core/errors.hpp"

namespace nslf {

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> opt_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string opt_text(const nlohmann::json& j, const char* fmt_spec) {
  return j.is_null() ? std::string("n/a") : fmt::format(fmt::runtime(fmt_spec), j.get<double>());
}

}  // namespace

void MetricsReport::finalize() {
  double psnr_sum = 0, ssim_sum = 0, seconds = 0;
  std::size_t psnr_n = 0, ssim_n = 0;
  for (const auto& f : frames) {
    if (f.psnr) {
      psnr_sum += *f.psnr;
      ++psnr_n;
    }
    if (f.ssim) {
      ssim_sum += *f.ssim;
      ++ssim_n;
    }
    seconds += f.render_seconds;
  }
  mean_psnr = psnr_n ? std::optional(psnr_sum / static_cast<double>(psnr_n)) : std::nullopt;
  mean_ssim = ssim_n ? std::optional(ssim_sum / static_cast<double>(ssim_n)) : std::nullopt;
  mean_render_seconds = frames.empty() ? 0.0 : seconds / static_cast<double>(frames.size());
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["schema_version"] = schema_version;
  j["model"] = model;
  auto& fr = j["frames"] = nlohmann::json::array();
  for (const auto& f : frames)
    fr.push_back({{"index", f.index},
                  {"timestamp", f.timestamp},
                  {"psnr", opt(f.psnr)},
                  {"ssim", opt(f.ssim)},
                  {"covered_pixels", f.covered_pixels},
                  {"uncovered_pixels", f.uncovered_pixels},
                  {"render_seconds", f.render_seconds}});
  auto& ab = j["angle_buckets"] = nlohmann::json::array();
  for (const auto& b : buckets)
    ab.push_back({{"threshold_deg", b.threshold_deg}, {"pixels", b.pixels}, {"psnr", opt(b.psnr)}});
  j["angle_evaluated_pixels"] = angle_evaluated_pixels;
  j["angle_unmatched_pixels"] = angle_unmatched_pixels;
  j["aggregate"] = {{"mean_psnr", opt(mean_psnr)},
                    {"mean_ssim", opt(mean_ssim)},
                    {"mean_render_seconds", mean_render_seconds},
                    {"frame_count", frames.size()}};
  return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  try {
    MetricsReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kMetricsSchemaVersion)
      throw DataError(fmt::format("metrics report: unsupported schema version {}", r.schema_version));
    r.model = j.at("model").get<std::string>();
    for (const auto& f : j.at("frames")) {
      FrameMetrics m;
      m.index = f.at("index").get<std::size_t>();
      m.timestamp = f.at("timestamp").get<double>();
      m.psnr = opt_from(f.at("psnr"));
      m.ssim = opt_from(f.at("ssim"));
      m.covered_pixels = f.at("covered_pixels").get<std::size_t>();
      m.uncovered_pixels = f.at("uncovered_pixels").get<std::size_t>();
      m.render_seconds = f.at("render_seconds").get<double>();
      r.frames.push_back(m);
    }
    for (const auto& b : j.at("angle_buckets")) {
      AngleBucket a;
      a.threshold_deg = b.at("threshold_deg").get<double>();
      a.pixels = b.at("pixels").get<std::size_t>();
      a.psnr = opt_from(b.at("psnr"));
      r.buckets.push_back(a);
    }
    r.angle_evaluated_pixels = j.at("angle_evaluated_pixels").get<std::size_t>();
    r.angle_unmatched_pixels = j.at("angle_unmatched_pixels").get<std::size_t>();
    const auto& agg = j.at("aggregate");
    r.mean_psnr = opt_from(agg.at("mean_psnr"));
    r.mean_ssim = opt_from(agg.at("mean_ssim"));
    r.mean_render_seconds = agg.at("mean_render_seconds").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("metrics report: {}", e.what()));
  }
}

std::string MetricsReport::to_text() const {
  const nlohmann::json j = to_json();
  std::string out = fmt::format("metrics report v{} (model {})\n", j["schema_version"].get<int>(),
                                j["model"].get<std::string>());
  out += fmt::format("{:>8} {:>12} {:>9} {:>8} {:>9} {:>10} {:>10}\n", "frame", "timestamp", "psnr", "ssim", "covered",
                     "uncovered", "render_s");
  for (const auto& f : j["frames"])
    out += fmt::format("{:>8} {:>12.6f} {:>9} {:>8} {:>9} {:>10} {:>10.4f}\n", f["index"].get<std::size_t>(),
                       f["timestamp"].get<double>(), opt_text(f["psnr"], "{:.3f}"), opt_text(f["ssim"], "{:.4f}"),
                       f["covered_pixels"].get<std::size_t>(), f["uncovered_pixels"].get<std::size_t>(),
                       f["render_seconds"].get<double>());
  const auto& agg = j["aggregate"];
  out += fmt::format("mean psnr {}  mean ssim {}  mean render {:.4f} s over {} frame(s)\n",
                     opt_text(agg["mean_psnr"], "{:.3f}"), opt_text(agg["mean_ssim"], "{:.4f}"),
                     agg["mean_render_seconds"].get<double>(), agg["frame_count"].get<std::size_t>());
  out += fmt::format("angle buckets ({} px evaluated, {} px without a trained sample nearby)\n",
                     j["angle_evaluated_pixels"].get<std::size_t>(), j["angle_unmatched_pixels"].get<std::size_t>());
  for (const auto& b : j["angle_buckets"])
    out += fmt::format("  <= {:>5.1f} deg  {:>9} px  psnr {}\n", b["threshold_deg"].get<double>(),
                       b["pixels"].get<std::size_t>(), opt_text(b["psnr"], "{:.3f}"));
  return out;
}

}  // namespace nslf
