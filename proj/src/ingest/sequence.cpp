#include "nslf/ingest/sequence.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "nslf/core/errors.hpp"
#include "nslf/ingest/png_io.hpp"

namespace fs = std::filesystem;

namespace nslf {

namespace {

std::ifstream open_text(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path.string());
  return is;
}

bool skip_line(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

[[noreturn]] void malformed(const fs::path& path, std::size_t line_no, const std::string& what) {
  throw DataError(fmt::format("{}:{}: {}", path.string(), line_no, what));
}

// Nearest pose within tolerance; trajectory sorted by timestamp.
const StampedPose* find_pose(const std::vector<StampedPose>& traj, double t, double tol) {
  auto it = std::lower_bound(traj.begin(), traj.end(), t,
                             [](const StampedPose& s, double v) { return s.timestamp < v; });
  const StampedPose* best = nullptr;
  double best_dt = tol;
  for (auto cand : {it, it == traj.begin() ? traj.end() : std::prev(it)}) {
    if (cand == traj.end()) continue;
    const double dt = std::abs(cand->timestamp - t);
    if (dt <= best_dt) {
      best_dt = dt;
      best = &*cand;
    }
  }
  return best;
}

struct AssocLine {
  double timestamp;
  fs::path depth, color;
};

std::vector<AssocLine> read_associations(const fs::path& path) {
  std::ifstream is = open_text(path);
  std::vector<AssocLine> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    std::istringstream ss(line);
    double t_depth, t_color;
    std::string depth_path, color_path;
    if (!(ss >> t_depth >> depth_path >> t_color >> color_path))
      malformed(path, line_no, "expected 'timestamp depth_path timestamp color_path'");
    out.push_back({t_depth, path.parent_path() / depth_path, path.parent_path() / color_path});
  }
  return out;
}

// Numbered files N.png in a directory, sorted by N.
std::map<long, fs::path> numbered_pngs(const fs::path& dir) {
  std::map<long, fs::path> files;
  if (!fs::is_directory(dir)) return files;
  static const std::regex number(R"((\d+)\.png)");
  for (const auto& e : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = e.path().filename().string();
    if (std::regex_match(name, m, number)) files.emplace(std::stol(m[1]), e.path());
  }
  return files;
}

std::vector<fs::path> povray_files(const fs::path& dir) {
  std::map<long, fs::path> files;
  static const std::regex pattern(R"(.*_(\d+)\.txt)");
  for (const auto& e : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = e.path().filename().string();
    if (std::regex_match(name, m, pattern)) files.emplace(std::stol(m[1]), e.path());
  }
  std::vector<fs::path> out;
  for (auto& [k, p] : files) out.push_back(p);
  return out;
}

std::optional<fs::path> find_with_suffix(const fs::path& dir, const std::string& suffix) {
  std::vector<fs::path> hits;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      hits.push_back(e.path());
  }
  if (hits.empty()) return std::nullopt;
  std::sort(hits.begin(), hits.end());
  return hits.front();
}

CameraIntrinsics icl_default_intrinsics() {
  CameraIntrinsics K;
  K.fx = 481.20;
  K.fy = 480.0;
  K.cx = 319.5;
  K.cy = 239.5;
  return K;
}

}  // namespace

SequenceFormat parse_sequence_format(const std::string& name) {
  if (name == "tum_assoc" || name == "tum") return SequenceFormat::TumAssoc;
  if (name == "icl_nuim" || name == "icl") return SequenceFormat::IclNuim;
  throw DomainError("unknown sequence format '" + name + "' (expected tum_assoc or icl_nuim)");
}

std::string to_string(SequenceFormat format) {
  return format == SequenceFormat::TumAssoc ? "tum_assoc" : "icl_nuim";
}

std::vector<StampedPose> read_tum_trajectory(const fs::path& path) {
  std::ifstream is = open_text(path);
  std::vector<StampedPose> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    std::istringstream ss(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
      malformed(path, line_no, "expected 'timestamp tx ty tz qx qy qz qw'");
    const double qn = std::sqrt(qx * qx + qy * qy + qz * qz + qw * qw);
    if (!std::isfinite(qn) || std::abs(qn - 1.0) > 1e-2) malformed(path, line_no, "quaternion is not unit length");
    out.push_back({t, Pose::from_quaternion({tx, ty, tz}, qx, qy, qz, qw)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const StampedPose& a, const StampedPose& b) { return a.timestamp < b.timestamp; });
  return out;
}

void write_tum_trajectory(const fs::path& path, std::span<const StampedPose> poses) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os << "# timestamp tx ty tz qx qy qz qw\n";
  for (const auto& s : poses) {
    double qx, qy, qz, qw;
    s.pose.to_quaternion(qx, qy, qz, qw);
    const Vec3d& t = s.pose.translation;
    os << fmt::format("{:.6f} {:.9f} {:.9f} {:.9f} {:.12f} {:.12f} {:.12f} {:.12f}\n", s.timestamp, t.x, t.y, t.z, qx,
                      qy, qz, qw);
  }
}

CameraIntrinsics read_intrinsics(const fs::path& path) {
  std::ifstream is = open_text(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    std::istringstream ss(line);
    CameraIntrinsics K;
    if (!(ss >> K.fx >> K.fy >> K.cx >> K.cy >> K.width >> K.height >> K.depth_scale))
      malformed(path, line_no, "expected 'fx fy cx cy width height depth_scale'");
    K.validate();
    return K;
  }
  throw DataError(path.string() + ": no intrinsics line");
}

void write_intrinsics(const fs::path& path, const CameraIntrinsics& K) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os << "# fx fy cx cy width height depth_scale\n";
  os << fmt::format("{:.9g} {:.9g} {:.9g} {:.9g} {} {} {:.9g}\n", K.fx, K.fy, K.cx, K.cy, K.width, K.height,
                    K.depth_scale);
}

Pose povray_camera_to_pose(const Vec3d& cam_pos, const Vec3d& cam_dir, const Vec3d& cam_up) {
  const Vec3d z = normalized(cam_dir);
  Vec3d x = cross(cam_up, z);
  if (norm(x) < 1e-12) throw DomainError("povray camera: up parallel to direction");
  x = normalized(x);
  const Vec3d y = cross(z, x);  // camera up in the POV-Ray world
  // negate world y; image y points down, i.e. along -up
  const auto flip = [](const Vec3d& v) { return Vec3d{v.x, -v.y, v.z}; };
  Pose p;
  p.rotation.set_column(0, flip(x));
  p.rotation.set_column(1, flip(-y));
  p.rotation.set_column(2, flip(z));
  p.translation = flip(cam_pos);
  return p;
}

Pose read_povray_camera(const fs::path& path) {
  std::ifstream is = open_text(path);
  static const std::regex vec_line(R"(^\s*(cam_\w+)\s*=\s*\[\s*([^,\]]+)\s*,\s*([^,\]]+)\s*,\s*([^\]]+)\s*\].*$)");
  std::map<std::string, Vec3d> values;
  std::string line;
  while (std::getline(is, line)) {
    std::smatch m;
    if (!std::regex_match(line, m, vec_line)) continue;
    try {
      values[m[1]] = {std::stod(m[2]), std::stod(m[3]), std::stod(m[4])};
    } catch (const std::exception&) {
      throw DataError(path.string() + ": malformed vector for " + m[1].str());
    }
  }
  for (const char* key : {"cam_pos", "cam_dir", "cam_up"})
    if (!values.count(key)) throw DataError(path.string() + ": missing " + key);
  return povray_camera_to_pose(values["cam_pos"], values["cam_dir"], values["cam_up"]);
}

std::size_t convert_povray_to_tum(const fs::path& dir, const fs::path& out_file) {
  static const std::regex pattern(R"(.*_(\d+)\.txt)");
  std::vector<StampedPose> poses;
  for (const auto& p : povray_files(dir)) {
    std::smatch m;
    const std::string name = p.filename().string();
    std::regex_match(name, m, pattern);
    poses.push_back({static_cast<double>(std::stol(m[1])), read_povray_camera(p)});
  }
  write_tum_trajectory(out_file, poses);
  return poses.size();
}

SequenceReader::SequenceReader(const fs::path& root, const SequenceOptions& options)
    : root_(root), options_(options) {
  if (options_.skip < 1) throw DomainError("sequence: skip must be >= 1");
  if (!fs::is_directory(root_)) throw DataError("sequence: " + root_.string() + " is not a directory");

  const bool icl = options_.format == SequenceFormat::IclNuim;
  if (fs::exists(root_ / "intrinsics.txt"))
    intrinsics_ = read_intrinsics(root_ / "intrinsics.txt");
  else
    intrinsics_ = icl ? icl_default_intrinsics() : CameraIntrinsics{};

  std::vector<AssocLine> assoc;
  if (fs::exists(root_ / "associations.txt")) {
    assoc = read_associations(root_ / "associations.txt");
  } else if (icl) {
    const auto depths = numbered_pngs(root_ / "depth");
    const auto colors = numbered_pngs(root_ / "rgb");
    for (const auto& [n, path] : depths) {
      auto it = colors.find(n);
      if (it == colors.end()) {
        spdlog::warn("sequence: depth frame {} has no color image; skipped", n);
        continue;
      }
      assoc.push_back({static_cast<double>(n), path, it->second});
    }
  } else {
    throw DataError("sequence: missing " + (root_ / "associations.txt").string());
  }

  std::vector<StampedPose> traj;
  if (!icl) {
    const fs::path gt = fs::exists(root_ / "groundtruth.txt") ? root_ / "groundtruth.txt" : root_ / "trajectory.txt";
    if (!fs::exists(gt)) throw DataError("sequence: missing trajectory (groundtruth.txt or trajectory.txt)");
    traj = read_tum_trajectory(gt);
  } else if (auto freiburg = find_with_suffix(root_, ".freiburg")) {
    traj = read_tum_trajectory(*freiburg);
  } else if (!povray_files(root_).empty()) {
    for (const auto& p : povray_files(root_)) {
      static const std::regex pattern(R"(.*_(\d+)\.txt)");
      std::smatch m;
      const std::string name = p.filename().string();
      std::regex_match(name, m, pattern);
      traj.push_back({static_cast<double>(std::stol(m[1])), read_povray_camera(p)});
    }
    std::sort(traj.begin(), traj.end(), [](auto& a, auto& b) { return a.timestamp < b.timestamp; });
  } else {
    throw DataError("sequence: no *.freiburg trajectory or POV-Ray camera files in " + root_.string());
  }

  std::stable_sort(assoc.begin(), assoc.end(), [](auto& a, auto& b) { return a.timestamp < b.timestamp; });
  total_entries_ = assoc.size();
  const double tol = icl ? 1e-3 : options_.max_time_diff;
  for (std::size_t i = 0; i < assoc.size(); ++i) {
    if (i % static_cast<std::size_t>(options_.skip) != 0) continue;
    const StampedPose* pose = find_pose(traj, assoc[i].timestamp, tol);
    if (!pose) {
      spdlog::warn("sequence: no pose for frame {} (t={:.6f}); skipped", i, assoc[i].timestamp);
      continue;
    }
    entries_.push_back({i, assoc[i].timestamp, assoc[i].depth, assoc[i].color, pose->pose});
  }
}

std::optional<SequenceFrame> SequenceReader::next() {
  if (cursor_ >= entries_.size()) return std::nullopt;
  const Entry& e = entries_[cursor_++];
  if (options_.pacing_seconds > 0)
    std::this_thread::sleep_for(std::chrono::duration<double>(options_.pacing_seconds));
  SequenceFrame f;
  f.index = e.index;
  f.timestamp = e.timestamp;
  f.depth = read_png_depth(e.depth.string());
  f.color = read_png_rgb(e.color.string());
  f.pose = e.pose;
  f.intrinsics = intrinsics_;
  if (f.depth.width != f.color.width || f.depth.height != f.color.height)
    throw DataError("sequence: depth/color size mismatch at frame " + std::to_string(e.index));
  if (f.depth.width != intrinsics_.width || f.depth.height != intrinsics_.height) {
    // intrinsics describe a different resolution; rescale rather than misproject
    f.intrinsics = intrinsics_.resized(f.depth.width, f.depth.height);
  }
  return f;
}

std::vector<SequenceFrame> read_sequence(const fs::path& root, const SequenceOptions& options) {
  SequenceReader reader(root, options);
  std::vector<SequenceFrame> frames;
  frames.reserve(reader.size());
  while (auto f = reader.next()) frames.push_back(std::move(*f));
  return frames;
}

void write_tum_sequence(const fs::path& root, std::span<const DepthImage> depths, std::span<const Image> colors,
                        std::span<const Pose> poses, const CameraIntrinsics& K) {
  if (depths.size() != colors.size() || depths.size() != poses.size())
    throw ShapeError("write sequence: depth, color and pose counts differ");
  fs::create_directories(root / "depth");
  fs::create_directories(root / "rgb");
  std::ofstream assoc(root / "associations.txt");
  if (!assoc) throw DataError("cannot write associations in " + root.string());
  assoc << "# timestamp depth_path timestamp color_path\n";
  std::vector<StampedPose> traj;
  for (std::size_t i = 0; i < depths.size(); ++i) {
    const double t = static_cast<double>(i) / 30.0;
    const std::string name = fmt::format("{:06d}.png", i);
    write_png_depth((root / "depth" / name).string(), depths[i]);
    write_png_rgb((root / "rgb" / name).string(), colors[i]);
    assoc << fmt::format("{:.6f} depth/{} {:.6f} rgb/{}\n", t, name, t, name);
    traj.push_back({t, poses[i]});
  }
  write_tum_trajectory(root / "groundtruth.txt", traj);
  write_intrinsics(root / "intrinsics.txt", K);
}

}  // namespace nslf
