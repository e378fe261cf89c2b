#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nslf/core/camera.hpp"
#include "nslf/ingest/sequence.hpp"
#include "nslf/mana/runtime.hpp"

namespace nslf {

/// Invalid option value or missing required input; maps to exit code 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

enum class Command { Train, Render, Eval, Synth, Verify };

std::string to_string(Command command);

/// Every setting of a command run. Defaults follow the published experimental setup
/// (skip 20, 4 m regions, lr 1e-3, N_max 512).
///
/// Precedence, lowest first: defaults, config file, NSLFOL_* environment variables, flags.
struct RunConfig {
  // dataset
  std::filesystem::path dataset;
  SequenceFormat format = SequenceFormat::TumAssoc;
  int skip = 20;
  int eval_skip = 1;
  double max_time_diff = 0.02;
  double pacing_seconds = 0.0;
  int pixel_stride = 2;

  // model
  ModelKind model = ModelKind::NslfSh;
  HashGridConfig grid;
  int sh_degree = 3;

  // distribution and training
  double cell_edge = 4.0;
  Vec3d bbox_min{-50.0, -50.0, -50.0};
  Vec3d bbox_max{50.0, 50.0, 50.0};
  std::uint64_t quota = 200;
  std::size_t batch_size = 256;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  bool deterministic = false;
  int executors = 0;
  std::size_t memory_cap = 0;

  // outputs and render/eval inputs
  std::filesystem::path out = "nslfol_out";
  std::filesystem::path checkpoint;
  std::filesystem::path mesh;
  std::filesystem::path trajectory;
  std::filesystem::path intrinsics;
  std::vector<double> thresholds{15.0, 30.0, 60.0};
  double match_radius = 0.01;

  // synth
  std::string scene = "plane";          // plane | sphere
  std::string synth_path = "cone";      // cone | ring
  int poses = 5;
  double view_angle = 15.0;             // cone half-angle or ring offset, degrees
  double distance = 3.0;
  double specular = 0.15;
  int width = 160;
  int height = 120;
  double focal = 160.0;

  /// Sets one option from its textual key and value. Throws UsageError for unknown keys or
  /// unparsable values.
  void set(const std::string& key, const std::string& value);
  /// `key = value` lines; '#' starts a comment.
  void apply_file(const std::filesystem::path& path);
  /// Applies NSLFOL_<KEY> variables found in `env` (key upper-cased).
  void apply_env(const std::map<std::string, std::string>& env);
  /// Reads the process environment.
  static std::map<std::string, std::string> process_env();

  /// Checks values and that every input path needed by `command` exists.
  void validate(Command command) const;

  ManaConfig mana_config() const;
  SequenceOptions sequence_options(int frame_skip) const;

  /// Resolved options in `key = value` form, readable by apply_file.
  std::string dump() const;

  static const std::vector<std::string>& keys();
};

}  // namespace nslf
