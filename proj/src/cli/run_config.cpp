#include "nslf/cli/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

extern char** environ;

namespace nslf {

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw UsageError(fmt::format("option '{}': cannot parse '{}' as a number", key, text));
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  std::string v = trim(text);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw UsageError(fmt::format("option '{}': expected a boolean, got '{}'", key, text));
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<double>(key, item));
  return out;
}

Vec3d parse_vec3(const std::string& key, const std::string& text) {
  const auto v = parse_list(key, text);
  if (v.size() != 3) throw UsageError(fmt::format("option '{}': expected x,y,z, got '{}'", key, text));
  return {v[0], v[1], v[2]};
}

std::string fmt_vec3(const Vec3d& v) { return fmt::format("{},{},{}", v.x, v.y, v.z); }

struct Field {
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field number(T RunConfig::*member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) { c.*member = parse_number<T>(k, v); },
          [member](const RunConfig& c) { return fmt::format("{}", c.*member); }};
}

Field grid_int(int HashGridConfig::*member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) { c.grid.*member = parse_number<int>(k, v); },
          [member](const RunConfig& c) { return fmt::format("{}", c.grid.*member); }};
}

Field path(std::filesystem::path RunConfig::*member) {
  return {[member](RunConfig& c, const std::string&, const std::string& v) { c.*member = trim(v); },
          [member](const RunConfig& c) { return (c.*member).string(); }};
}

Field text(std::string RunConfig::*member) {
  return {[member](RunConfig& c, const std::string&, const std::string& v) { c.*member = trim(v); },
          [member](const RunConfig& c) { return c.*member; }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    f["dataset"] = path(&RunConfig::dataset);
    f["format"] = {[](RunConfig& c, const std::string&, const std::string& v) {
                     try {
                       c.format = parse_sequence_format(trim(v));
                     } catch (const Error& e) {
                       throw UsageError(e.what());
                     }
                   },
                   [](const RunConfig& c) { return to_string(c.format); }};
    f["skip"] = number(&RunConfig::skip);
    f["eval_skip"] = number(&RunConfig::eval_skip);
    f["max_time_diff"] = number(&RunConfig::max_time_diff);
    f["pacing_seconds"] = number(&RunConfig::pacing_seconds);
    f["pixel_stride"] = number(&RunConfig::pixel_stride);
    f["model"] = {[](RunConfig& c, const std::string&, const std::string& v) {
                    try {
                      c.model = parse_model_kind(trim(v));
                    } catch (const Error& e) {
                      throw UsageError(e.what());
                    }
                  },
                  [](const RunConfig& c) { return to_string(c.model); }};
    f["levels"] = grid_int(&HashGridConfig::levels);
    f["features"] = grid_int(&HashGridConfig::features);
    f["log2_table_size"] = grid_int(&HashGridConfig::log2_table_size);
    f["n_min"] = grid_int(&HashGridConfig::base_resolution);
    f["n_max"] = grid_int(&HashGridConfig::max_resolution);
    f["sh_degree"] = number(&RunConfig::sh_degree);
    f["cell_edge"] = number(&RunConfig::cell_edge);
    f["bbox_min"] = {[](RunConfig& c, const std::string&, const std::string& v) { c.bbox_min = parse_vec3("bbox_min", v); },
                     [](const RunConfig& c) { return fmt_vec3(c.bbox_min); }};
    f["bbox_max"] = {[](RunConfig& c, const std::string&, const std::string& v) { c.bbox_max = parse_vec3("bbox_max", v); },
                     [](const RunConfig& c) { return fmt_vec3(c.bbox_max); }};
    f["quota"] = number(&RunConfig::quota);
    f["batch_size"] = number(&RunConfig::batch_size);
    f["lr"] = number(&RunConfig::lr);
    f["seed"] = number(&RunConfig::seed);
    f["deterministic"] = {[](RunConfig& c, const std::string&, const std::string& v) { c.deterministic = parse_bool("deterministic", v); },
                          [](const RunConfig& c) { return std::string(c.deterministic ? "true" : "false"); }};
    f["executors"] = number(&RunConfig::executors);
    f["memory_cap"] = number(&RunConfig::memory_cap);
    f["out"] = path(&RunConfig::out);
    f["checkpoint"] = path(&RunConfig::checkpoint);
    f["mesh"] = path(&RunConfig::mesh);
    f["trajectory"] = path(&RunConfig::trajectory);
    f["intrinsics"] = path(&RunConfig::intrinsics);
    f["thresholds"] = {[](RunConfig& c, const std::string&, const std::string& v) { c.thresholds = parse_list("thresholds", v); },
                       [](const RunConfig& c) { return fmt::format("{}", fmt::join(c.thresholds, ",")); }};
    f["match_radius"] = number(&RunConfig::match_radius);
    f["scene"] = text(&RunConfig::scene);
    f["synth_path"] = text(&RunConfig::synth_path);
    f["poses"] = number(&RunConfig::poses);
    f["view_angle"] = number(&RunConfig::view_angle);
    f["distance"] = number(&RunConfig::distance);
    f["specular"] = number(&RunConfig::specular);
    f["width"] = number(&RunConfig::width);
    f["height"] = number(&RunConfig::height);
    f["focal"] = number(&RunConfig::focal);
    return f;
  }();
  return table;
}

void require_dir(const std::filesystem::path& p, const char* what) {
  if (p.empty()) throw UsageError(fmt::format("{} is required", what));
  if (!std::filesystem::is_directory(p)) throw DataError(fmt::format("{} '{}' is not a directory", what, p.string()));
}

void require_file(const std::filesystem::path& p, const char* what) {
  if (p.empty()) throw UsageError(fmt::format("{} is required", what));
  if (!std::filesystem::is_regular_file(p)) throw DataError(fmt::format("{} '{}' does not exist", what, p.string()));
}

}  // namespace

std::string to_string(Command command) {
  switch (command) {
    case Command::Train: return "train";
    case Command::Render: return "render";
    case Command::Eval: return "eval";
    case Command::Synth: return "synth";
    case Command::Verify: return "verify";
  }
  return "?";
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [name, _] : fields()) out.push_back(name);
    return out;
  }();
  return k;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = fields().find(key);
  if (it == fields().end()) throw UsageError(fmt::format("unknown option '{}'", key));
  it->second.set(*this, key, value);
}

void RunConfig::apply_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError(fmt::format("cannot open config file '{}'", file.string()));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(fmt::format("{}:{}: expected 'key = value'", file.string(), line_no));
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const UsageError& e) {
      throw UsageError(fmt::format("{}:{}: {}", file.string(), line_no, e.what()));
    }
  }
}

void RunConfig::apply_env(const std::map<std::string, std::string>& env) {
  for (const auto& [name, value] : env) {
    if (name.rfind("NSLFOL_", 0) != 0) continue;
    std::string key = name.substr(7);
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    if (std::find(keys().begin(), keys().end(), key) == keys().end())
      spdlog::warn("environment {} does not name an option; ignored", name);
  }
  for (const auto& key : keys()) {
    std::string name = "NSLFOL_" + key;
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
    if (auto it = env.find(name); it != env.end()) {
      try {
        set(key, it->second);
      } catch (const UsageError& e) {
        throw UsageError(fmt::format("environment {}: {}", name, e.what()));
      }
    }
  }
}

std::map<std::string, std::string> RunConfig::process_env() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry = *e;
    if (entry.rfind("NSLFOL_", 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq != std::string::npos) env[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  return env;
}

void RunConfig::validate(Command command) const {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw UsageError(msg);
  };
  check(skip >= 1 && eval_skip >= 1, "skip and eval_skip must be >= 1");
  check(pixel_stride >= 1, "pixel_stride must be >= 1");
  check(quota >= 1, "quota must be >= 1");
  check(batch_size >= 1, "batch_size must be >= 1");
  check(lr > 0, "lr must be > 0");
  check(executors >= 0, "executors must be >= 0");
  check(match_radius > 0, "match_radius must be > 0");
  check(!thresholds.empty(), "thresholds must not be empty");
  try {
    mana_config().validate();
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  switch (command) {
    case Command::Train:
      require_dir(dataset, "dataset");
      break;
    case Command::Render:
      require_dir(checkpoint, "checkpoint");
      require_file(mesh, "mesh");
      require_file(trajectory, "trajectory");
      if (!intrinsics.empty()) require_file(intrinsics, "intrinsics");
      break;
    case Command::Eval:
      require_dir(checkpoint, "checkpoint");
      require_file(mesh, "mesh");
      require_dir(dataset, "dataset");
      break;
    case Command::Synth:
      check(scene == "plane" || scene == "sphere", "scene must be 'plane' or 'sphere'");
      check(synth_path == "cone" || synth_path == "ring", "synth_path must be 'cone' or 'ring'");
      check(poses >= 1, "poses must be >= 1");
      check(width >= 1 && height >= 1 && focal > 0, "width, height and focal must be positive");
      check(distance > 0, "distance must be > 0");
      break;
    case Command::Verify:
      break;
  }
}

ManaConfig RunConfig::mana_config() const {
  ManaConfig m;
  m.grid.b_min = bbox_min;
  m.grid.b_max = bbox_max;
  m.grid.cell_edge = cell_edge;
  m.model.kind = model;
  m.model.grid = grid;
  m.model.sh_degree = sh_degree;
  m.adam.learning_rate = lr;
  m.quota = quota;
  m.batch_size = batch_size;
  m.seed = seed;
  m.deterministic = deterministic;
  m.executors = executors;
  m.memory_cap = memory_cap;
  return m;
}

SequenceOptions RunConfig::sequence_options(int frame_skip) const {
  SequenceOptions o;
  o.format = format;
  o.skip = frame_skip;
  o.max_time_diff = max_time_diff;
  o.pacing_seconds = pacing_seconds;
  return o;
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& [name, field] : fields()) out += fmt::format("{} = {}\n", name, field.get(*this));
  return out;
}

}  // namespace nslf
