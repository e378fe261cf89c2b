#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <thread>
#include <variant>
#include <vector>

#include "nslf/ingest/unproject.hpp"
#include "nslf/mana/distribute.hpp"
#include "nslf/mana/snapshot.hpp"
#include "nslf/models/training.hpp"

namespace nslf {

enum class RuntimeMode { Training, Evaluation };
enum class DrainPolicy { Drain, PauseNow };

struct ManaConfig {
  RegionGridConfig grid;
  ModelSpec model;
  AdamConfig adam;
  std::uint64_t quota = 200;     // iterations granted per fed frame
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  /// No worker threads: granted iterations run inline at the end of feed_frame, in region order.
  bool deterministic = false;
  int executors = 0;             // worker threads; 0 = one per agent
  std::size_t memory_cap = 0;    // max slices per agent, 0 = unbounded

  void validate() const;
};

struct FeedAck {
  std::size_t points = 0;
  std::size_t routed = 0;
  std::vector<std::size_t> rejected;  // input indices outside the box
  std::size_t regions_touched = 0;
  std::size_t agents_spawned = 0;
  std::uint64_t granted = 0;
  double seconds = 0.0;  // wall time of the call, excluding inline training in deterministic mode
};

struct AgentStats {
  RegionIndex region;
  std::uint64_t trained_iters = 0;
  std::uint64_t budget = 0;
  std::uint64_t granted = 0;
  std::uint64_t consumed = 0;
  std::uint64_t skipped = 0;
  std::size_t slices = 0;
  std::size_t samples = 0;
  double last_loss = 0.0;
};

struct AgentSeeds {
  std::uint64_t model = 0;
  std::uint64_t train = 0;
  std::uint64_t memory = 0;
};

/// Seeds of the agent owning `region` in a runtime seeded with `seed`.
AgentSeeds agent_seeds(std::uint64_t seed, const RegionIndex& region);

/// One trainable agent per touched region, fed by a single producer and trained by executor threads.
class ManaRuntime {
 public:
  explicit ManaRuntime(const ManaConfig& config);
  ~ManaRuntime();
  ManaRuntime(const ManaRuntime&) = delete;
  ManaRuntime& operator=(const ManaRuntime&) = delete;

  const ManaConfig& config() const { return config_; }

  /// Routes the frame, appends slices, grants budgets and wakes workers. Does not wait for training
  /// (except in deterministic mode). Throws StateError in Evaluation mode.
  FeedAck feed_frame(const ColoredPointBatch& batch);

  /// Creates the agent for `region` if it does not exist yet.
  void spawn_agent(const RegionIndex& region);

  /// Drain waits for every budget to reach zero (TimeoutError with the backlog otherwise); PauseNow
  /// stops after in-flight iterations. Either way the copy is taken with all workers idle and the
  /// runtime switches to Evaluation mode.
  Snapshot quiesce_and_snapshot(DrainPolicy policy = DrainPolicy::Drain,
                                std::chrono::milliseconds timeout = std::chrono::minutes(30));
  void resume_training();

  /// Blocks until all budgets are consumed. Returns false on timeout.
  bool wait_idle(std::chrono::milliseconds timeout);

  RuntimeMode mode() const;
  std::size_t agent_count() const;
  std::vector<AgentStats> stats() const;
  std::uint64_t total_granted() const;
  std::uint64_t total_consumed() const;
  std::uint64_t total_outstanding() const;

  /// Prediction through the last snapshot; requires Evaluation mode.
  Prediction predict_batch(std::span<const Vec3d> points, std::span<const Vec3f> dirs,
                           const PredictOptions& options = {}) const;
  const Snapshot& last_snapshot() const;

 private:
  using Workspace = std::variant<TrainWorkspace<NslfModel<float>>, TrainWorkspace<HgModel<float>>>;

  struct Agent {
    Agent(const RegionIndex& r, const ManaConfig& cfg);

    RegionIndex region;
    // worker-private (touched only by the owning executor, or while all workers are idle)
    AnyModel model;
    AdamState<float> optimizer;
    std::mt19937_64 rng;
    Workspace workspace;
    // shared with the producer, guarded by mu
    mutable std::mutex mu;
    DataMemory memory;
    std::uint64_t trained_iters = 0;
    std::uint64_t budget = 0;
    std::uint64_t granted = 0;
    std::uint64_t consumed = 0;
    std::uint64_t skipped = 0;
    double last_loss = 0.0;
    std::size_t executor = 0;
  };

  struct Executor {
    std::thread thread;
    std::vector<Agent*> agents;
    std::condition_variable cv;
    std::uint64_t epoch = 0;
    std::size_t cursor = 0;
  };

  Agent& get_or_spawn_locked(const RegionIndex& region, bool& spawned);
  void start_executor_locked(std::size_t index);
  void executor_loop(std::size_t index);
  Agent* pick_work_locked(Executor& ex);
  void run_one_iteration(Agent& agent);
  void wake_all_locked();
  void run_inline_budgets();
  std::uint64_t outstanding_locked() const;
  std::string backlog_report_locked() const;

  ManaConfig config_;
  mutable std::mutex mu_;  // registry, executors, mode, pause state; taken before any Agent::mu
  std::condition_variable idle_cv_;
  std::map<RegionIndex, std::unique_ptr<Agent>> agents_;
  std::vector<std::unique_ptr<Executor>> executors_;
  RuntimeMode mode_ = RuntimeMode::Training;
  bool paused_ = false;
  bool stopping_ = false;
  std::size_t in_flight_ = 0;
  std::optional<Snapshot> snapshot_;
};

}  // namespace nslf
