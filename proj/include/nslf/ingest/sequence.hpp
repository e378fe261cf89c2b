#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nslf/core/camera.hpp"
#include "nslf/core/image.hpp"

namespace nslf {

enum class SequenceFormat { TumAssoc, IclNuim };

/// Accepts "tum_assoc" (alias "tum") and "icl_nuim" (alias "icl").
SequenceFormat parse_sequence_format(const std::string& name);
std::string to_string(SequenceFormat format);

struct SequenceFrame {
  std::size_t index = 0;  // position in the association list
  double timestamp = 0.0;
  DepthImage depth;
  Image color;
  CameraIntrinsics intrinsics;
  Pose pose;
};

struct SequenceOptions {
  SequenceFormat format = SequenceFormat::TumAssoc;
  int skip = 1;                 // keep association indices with index % skip == 0
  double max_time_diff = 0.02;  // seconds, pose lookup tolerance for TUM timestamps
  double pacing_seconds = 0.0;  // optional sleep before each yielded frame
};

/// One line of a TUM trajectory file.
struct StampedPose {
  double timestamp = 0.0;
  Pose pose;
};

/// `timestamp tx ty tz qx qy qz qw` per line; '#' comments and blank lines ignored.
/// Throws DataError naming the line on malformed input.
std::vector<StampedPose> read_tum_trajectory(const std::filesystem::path& path);
void write_tum_trajectory(const std::filesystem::path& path, std::span<const StampedPose> poses);

/// `fx fy cx cy width height depth_scale` on one line.
CameraIntrinsics read_intrinsics(const std::filesystem::path& path);
void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& K);

/// Camera pose from a POV-Ray camera description (cam_pos, cam_dir, cam_up). POV-Ray's world is
/// left-handed; the result lives in the right-handed world obtained by negating y.
Pose povray_camera_to_pose(const Vec3d& cam_pos, const Vec3d& cam_dir, const Vec3d& cam_up);
/// Parses one POV-Ray camera text file.
Pose read_povray_camera(const std::filesystem::path& path);
/// Converts every `*_NNNN.txt` camera file in `dir` (sorted by NNNN) to a TUM trajectory whose
/// timestamps are the frame numbers. Returns the number of poses written.
std::size_t convert_povray_to_tum(const std::filesystem::path& dir, const std::filesystem::path& out_file);

/// Ordered frame stream over an on-disk sequence. Images are loaded lazily in next().
///
/// tum_assoc: `associations.txt` with `t_depth depth_path t_color color_path` lines, a trajectory
/// `groundtruth.txt` (or `trajectory.txt`), optional `intrinsics.txt`.
/// icl_nuim: `depth/N.png` and `rgb/N.png` (or an associations.txt), a `*.freiburg` trajectory indexed
/// by frame number or POV-Ray `*_NNNN.txt` camera files, optional `intrinsics.txt`.
class SequenceReader {
 public:
  SequenceReader(const std::filesystem::path& root, const SequenceOptions& options);

  /// Frames that will be yielded (after skip and pose filtering).
  std::size_t size() const { return entries_.size(); }
  /// Association entries before skip.
  std::size_t total_entries() const { return total_entries_; }
  const CameraIntrinsics& intrinsics() const { return intrinsics_; }

  std::optional<SequenceFrame> next();
  void rewind() { cursor_ = 0; }

 private:
  struct Entry {
    std::size_t index;
    double timestamp;
    std::filesystem::path depth, color;
    Pose pose;
  };
  std::filesystem::path root_;
  SequenceOptions options_;
  CameraIntrinsics intrinsics_;
  std::vector<Entry> entries_;
  std::size_t total_entries_ = 0;
  std::size_t cursor_ = 0;
};

/// Reads every frame of a sequence.
std::vector<SequenceFrame> read_sequence(const std::filesystem::path& root, const SequenceOptions& options);

/// Writes frames in the TUM layout understood by SequenceReader: depth/%06d.png, rgb/%06d.png,
/// associations.txt, groundtruth.txt and intrinsics.txt. Timestamps are index / 30.
void write_tum_sequence(const std::filesystem::path& root, std::span<const DepthImage> depths,
                        std::span<const Image> colors, std::span<const Pose> poses, const CameraIntrinsics& K);

}  // namespace nslf
