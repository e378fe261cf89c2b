#pragma once

#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

#include "nslf/cli/metrics_report.hpp"
#include "nslf/cli/run_config.hpp"

namespace nslf {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitVerifyFailed = 3 };

/// Maps an exception escaping a command to its exit code.
int exit_code_for(const std::exception& e);

struct TrainSummary {
  std::size_t frames = 0;
  std::size_t points = 0;
  std::size_t agents = 0;
  std::uint64_t granted = 0;
  double mean_feed_seconds = 0.0;
  double max_feed_seconds = 0.0;
};

/// Streams the dataset through the runtime, then writes `<out>/checkpoint/`, `<out>/train_log.json`
/// and `<out>/config.txt`.
TrainSummary cmd_train(const RunConfig& config);

/// Renders every trajectory pose to `<out>/frame_%06d.png` and writes `<out>/render_log.json`.
/// Returns the number of frames written.
std::size_t cmd_render(const RunConfig& config);

/// Renders at every ground-truth pose and writes `<out>/metrics.json` and `<out>/metrics.txt`.
MetricsReport cmd_eval(const RunConfig& config);

/// Writes a synthetic sequence in the TUM layout, `mesh.obj` and `oracle.json` to `<out>`.
void cmd_synth(const RunConfig& config);

/// Runs the named suites ("all" expands to every suite), printing one line per check.
/// Returns kExitOk or kExitVerifyFailed.
int cmd_verify(const std::vector<std::string>& suites, std::ostream& out);

/// Intrinsics for render: the explicit file, else `<dataset>/intrinsics.txt`, else a pinhole
/// camera built from width, height and focal.
CameraIntrinsics resolve_intrinsics(const RunConfig& config);

}  // namespace nslf
