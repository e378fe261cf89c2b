#include "nslf/mana/snapshot.hpp"

#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "nslf/core/errors.hpp"

namespace fs = std::filesystem;

namespace nslf {

namespace {

struct Routed {
  const AnyModel* model;
  Vec3f unit;
};

// nullptr model = uncovered; throws or flags outside points.
Routed route(const Snapshot& s, const Vec3d& p, const PredictOptions& opt, bool& outside) {
  RegionIndex r;
  outside = false;
  if (!try_region_of(p, s.grid, r)) {
    if (!opt.outside_as_uncovered)
      throw RoutingError(fmt::format("point ({}, {}, {}) is outside the region grid", p.x, p.y, p.z));
    outside = true;
    return {nullptr, {}};
  }
  auto it = s.models.find(r);
  if (it == s.models.end()) return {nullptr, {}};
  return {&it->second, to_region_unit(p, r, s.grid)};
}

void check_lengths(std::span<const Vec3d> points, std::span<const Vec3f> dirs) {
  if (points.size() != dirs.size()) throw ShapeError("predict_batch: points and directions differ in length");
}

std::string agent_file_name(const RegionIndex& r) { return fmt::format("agent_{}_{}_{}.nslf", r.ix, r.iy, r.iz); }

}  // namespace

Prediction predict_batch_serial(const Snapshot& snapshot, std::span<const Vec3d> points,
                                std::span<const Vec3f> dirs, const PredictOptions& options) {
  check_lengths(points, dirs);
  Prediction out;
  out.colors.resize(points.size());
  out.covered.resize(points.size());
  AnyCache cache;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool outside;
    const Routed r = route(snapshot, points[i], options, outside);
    out.outside += outside;
    if (!r.model) {
      out.colors[i] = kUncoveredColor;
      ++out.uncovered;
      continue;
    }
    out.colors[i] = predict(*r.model, r.unit, dirs[i], cache);
    out.covered[i] = 1;
  }
  return out;
}

Prediction predict_batch(const Snapshot& snapshot, std::span<const Vec3d> points, std::span<const Vec3f> dirs,
                         const PredictOptions& options) {
  check_lengths(points, dirs);
  Prediction out;
  const auto n = static_cast<std::ptrdiff_t>(points.size());
  out.colors.resize(points.size());
  out.covered.resize(points.size());
  std::size_t uncovered = 0, outside_count = 0;
  bool routing_failed = false;
  std::string routing_message;
#pragma omp parallel reduction(+ : uncovered, outside_count)
  {
    AnyCache cache;
#pragma omp for schedule(static, 256)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      bool outside = false;
      Routed r{nullptr, {}};
      try {
        r = route(snapshot, points[i], options, outside);
      } catch (const RoutingError& e) {
#pragma omp critical(nslf_predict_error)
        {
          if (!routing_failed) routing_message = e.what();
          routing_failed = true;
        }
        outside = true;
      }
      outside_count += outside;
      if (!r.model) {
        out.colors[i] = kUncoveredColor;
        ++uncovered;
        continue;
      }
      out.colors[i] = predict(*r.model, r.unit, dirs[i], cache);
      out.covered[i] = 1;
    }
  }
  if (routing_failed) throw RoutingError(routing_message);
  out.uncovered = uncovered;
  out.outside = outside_count;
  return out;
}

void save_snapshot(const fs::path& dir, const Snapshot& snapshot) {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["format_version"] = kRuntimeCheckpointVersion;
  const auto& g = snapshot.grid;
  manifest["grid"] = {{"b_min", {g.b_min.x, g.b_min.y, g.b_min.z}},
                      {"b_max", {g.b_max.x, g.b_max.y, g.b_max.z}},
                      {"cell_edge", g.cell_edge}};
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& [region, model] : snapshot.models) {
    const std::string file = agent_file_name(region);
    save_model((dir / file).string(), model);
    auto it = snapshot.trained_iters.find(region);
    agents.push_back({{"region", {region.ix, region.iy, region.iz}},
                      {"file", file},
                      {"model", to_string(kind_of(model))},
                      {"trained_iters", it == snapshot.trained_iters.end() ? 0 : it->second}});
  }
  manifest["agents"] = agents;
  std::ofstream os(dir / "manifest.json");
  if (!os) throw DataError("cannot write " + (dir / "manifest.json").string());
  os << manifest.dump(2) << "\n";
}

Snapshot load_snapshot(const fs::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw DataError("checkpoint: missing " + (dir / "manifest.json").string());
  Snapshot s;
  try {
    const auto manifest = nlohmann::json::parse(is);
    const int version = manifest.at("format_version").get<int>();
    if (version != kRuntimeCheckpointVersion)
      throw DataError("checkpoint: unsupported manifest version " + std::to_string(version));
    const auto& g = manifest.at("grid");
    for (int a = 0; a < 3; ++a) {
      s.grid.b_min[a] = g.at("b_min").at(a).get<double>();
      s.grid.b_max[a] = g.at("b_max").at(a).get<double>();
    }
    s.grid.cell_edge = g.at("cell_edge").get<double>();
    s.grid.validate();
    for (const auto& a : manifest.at("agents")) {
      const RegionIndex r{a.at("region").at(0).get<int>(), a.at("region").at(1).get<int>(),
                          a.at("region").at(2).get<int>()};
      s.models.emplace(r, load_model((dir / a.at("file").get<std::string>()).string()));
      s.trained_iters[r] = a.value("trained_iters", std::uint64_t{0});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: malformed manifest: ") + e.what());
  } catch (const DomainError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  return s;
}

}  // namespace nslf
