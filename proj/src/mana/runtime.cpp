#include "nslf/mana/runtime.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "nslf/core/errors.hpp"

namespace nslf {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

void ManaConfig::validate() const {
  grid.validate();
  if (batch_size == 0) throw DomainError("mana: batch_size must be > 0");
  if (executors < 0) throw DomainError("mana: executors must be >= 0");
  if (model.kind == ModelKind::NslfSh)
    model.nslf_config().validate();
  else
    model.hg_config().validate();
}

AgentSeeds agent_seeds(std::uint64_t seed, const RegionIndex& region) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint32_t>(region.ix));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(region.iy)) << 21));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(region.iz)) << 42));
  return {splitmix64(h ^ 1), splitmix64(h ^ 2), splitmix64(h ^ 3)};
}

ManaRuntime::Agent::Agent(const RegionIndex& r, const ManaConfig& cfg)
    : region(r),
      model(make_model(cfg.model, agent_seeds(cfg.seed, r).model)),
      optimizer(AdamState<float>::for_params(parameter_blocks(model), cfg.adam)),
      rng(agent_seeds(cfg.seed, r).train),
      memory(cfg.memory_cap, agent_seeds(cfg.seed, r).memory) {
  if (cfg.model.kind == ModelKind::NslfSh)
    workspace.emplace<0>();
  else
    workspace.emplace<1>();
}

ManaRuntime::ManaRuntime(const ManaConfig& config) : config_(config) {
  config_.validate();
  if (!config_.deterministic && config_.executors > 0) {
    std::lock_guard lk(mu_);
    for (int i = 0; i < config_.executors; ++i) start_executor_locked(static_cast<std::size_t>(i));
  }
}

ManaRuntime::~ManaRuntime() {
  {
    std::lock_guard lk(mu_);
    stopping_ = true;
    wake_all_locked();
  }
  for (auto& ex : executors_)
    if (ex->thread.joinable()) ex->thread.join();
}

void ManaRuntime::start_executor_locked(std::size_t index) {
  executors_.push_back(std::make_unique<Executor>());
  executors_.back()->thread = std::thread([this, index] { executor_loop(index); });
}

ManaRuntime::Agent& ManaRuntime::get_or_spawn_locked(const RegionIndex& region, bool& spawned) {
  spawned = false;
  auto it = agents_.find(region);
  if (it != agents_.end()) return *it->second;
  const auto counts = config_.grid.cell_counts();
  if (region.ix < 0 || region.iy < 0 || region.iz < 0 || region.ix >= counts[0] || region.iy >= counts[1] ||
      region.iz >= counts[2])
    throw RoutingError("region " + to_string(region) + " is outside the region grid");
  auto agent = std::make_unique<Agent>(region, config_);
  Agent& ref = *agent;
  if (!config_.deterministic) {
    if (config_.executors == 0) {
      ref.executor = executors_.size();
      start_executor_locked(ref.executor);
    } else {
      ref.executor = agents_.size() % executors_.size();
    }
    executors_[ref.executor]->agents.push_back(&ref);
  }
  agents_.emplace(region, std::move(agent));
  spawned = true;
  return ref;
}

void ManaRuntime::spawn_agent(const RegionIndex& region) {
  std::lock_guard lk(mu_);
  bool spawned;
  get_or_spawn_locked(region, spawned);
}

void ManaRuntime::wake_all_locked() {
  for (auto& ex : executors_) {
    ++ex->epoch;
    ex->cv.notify_all();
  }
}

FeedAck ManaRuntime::feed_frame(const ColoredPointBatch& batch) {
  const auto t0 = std::chrono::steady_clock::now();
  {
    std::lock_guard lk(mu_);
    if (mode_ != RuntimeMode::Training) throw StateError("feed_frame: runtime is in evaluation mode");
  }
  Distribution dist = distribute(batch, config_.grid);
  FeedAck ack;
  ack.points = batch.size();
  ack.rejected = std::move(dist.rejected);
  ack.routed = ack.points - ack.rejected.size();
  ack.regions_touched = dist.batches.size();
  if (!ack.rejected.empty())
    spdlog::warn("feed_frame: {} point(s) outside the region grid were not routed", ack.rejected.size());
  {
    std::lock_guard lk(mu_);
    if (mode_ != RuntimeMode::Training) throw StateError("feed_frame: runtime is in evaluation mode");
    std::vector<Agent*> touched;
    for (auto& [region, sub] : dist.batches) {
      bool spawned;
      Agent& agent = get_or_spawn_locked(region, spawned);
      ack.agents_spawned += spawned;
      std::lock_guard alk(agent.mu);
      agent.memory.append(std::make_shared<const TrainBatch>(std::move(sub)));
      touched.push_back(&agent);
    }

    std::vector<std::uint64_t> loads;
    loads.reserve(agents_.size());
    for (auto& [region, agent] : agents_) {
      std::lock_guard alk(agent->mu);
      loads.push_back(agent->trained_iters + agent->budget);
    }
    std::vector<BudgetCandidate> candidates;
    for (Agent* a : touched) {
      std::lock_guard alk(a->mu);
      candidates.push_back({a->region, a->trained_iters + a->budget});
    }
    const auto grants = assign_budgets(candidates, median_of(loads), config_.quota);
    for (std::size_t i = 0; i < touched.size(); ++i) {
      std::lock_guard alk(touched[i]->mu);
      touched[i]->budget += grants[i];
      touched[i]->granted += grants[i];
      ack.granted += grants[i];
    }
    wake_all_locked();
  }
  ack.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (config_.deterministic) run_inline_budgets();
  return ack;
}

void ManaRuntime::run_inline_budgets() {
  std::vector<Agent*> order;
  {
    std::lock_guard lk(mu_);
    for (auto& [region, agent] : agents_) order.push_back(agent.get());
  }
  for (Agent* a : order) {
    for (;;) {
      {
        std::lock_guard alk(a->mu);
        if (a->budget == 0 || a->memory.empty()) break;
      }
      run_one_iteration(*a);
    }
  }
}

ManaRuntime::Agent* ManaRuntime::pick_work_locked(Executor& ex) {
  const std::size_t n = ex.agents.size();
  for (std::size_t k = 0; k < n; ++k) {
    Agent* a = ex.agents[(ex.cursor + k) % n];
    std::lock_guard alk(a->mu);
    if (a->budget > 0 && !a->memory.empty()) {
      ex.cursor = (ex.cursor + k + 1) % n;
      return a;
    }
  }
  return nullptr;
}

void ManaRuntime::executor_loop(std::size_t index) {
  for (;;) {
    Agent* agent = nullptr;
    {
      std::unique_lock lk(mu_);
      Executor& ex = *executors_[index];
      for (;;) {
        if (stopping_) return;
        if (!paused_ && (agent = pick_work_locked(ex))) break;
        const std::uint64_t seen = ex.epoch;
        ex.cv.wait(lk, [&] { return stopping_ || ex.epoch != seen; });
      }
      ++in_flight_;
    }
    try {
      run_one_iteration(*agent);
    } catch (const std::exception& e) {
      // a broken agent must not take the worker down; drop its budget so drains terminate
      spdlog::error("agent {}: {}", to_string(agent->region), e.what());
      std::lock_guard alk(agent->mu);
      agent->consumed += agent->budget;
      agent->skipped += agent->budget;
      agent->budget = 0;
    }
    {
      std::lock_guard lk(mu_);
      --in_flight_;
    }
    idle_cv_.notify_all();
  }
}

void ManaRuntime::run_one_iteration(Agent& agent) {
  std::vector<std::shared_ptr<const TrainBatch>> slices;
  {
    std::lock_guard alk(agent.mu);
    if (agent.budget == 0 || agent.memory.empty()) return;
    slices = agent.memory.slices();
  }
  IterationResult r;
  if (auto* m = std::get_if<NslfModel<float>>(&agent.model))
    r = train_one_iteration(*m, agent.optimizer, std::span<const std::shared_ptr<const TrainBatch>>(slices),
                            config_.batch_size, agent.rng, std::get<0>(agent.workspace));
  else
    r = train_one_iteration(std::get<HgModel<float>>(agent.model), agent.optimizer,
                            std::span<const std::shared_ptr<const TrainBatch>>(slices), config_.batch_size,
                            agent.rng, std::get<1>(agent.workspace));
  std::lock_guard alk(agent.mu);
  --agent.budget;
  ++agent.consumed;
  if (r.skipped) {
    ++agent.skipped;
  } else {
    ++agent.trained_iters;
    agent.last_loss = r.loss;
  }
}

std::uint64_t ManaRuntime::outstanding_locked() const {
  std::uint64_t total = 0;
  for (const auto& [region, agent] : agents_) {
    std::lock_guard alk(agent->mu);
    total += agent->budget;
  }
  return total;
}

std::string ManaRuntime::backlog_report_locked() const {
  std::string report;
  for (const auto& [region, agent] : agents_) {
    std::lock_guard alk(agent->mu);
    if (agent->budget > 0) report += fmt::format(" {}:{}", to_string(region), agent->budget);
  }
  return report;
}

bool ManaRuntime::wait_idle(std::chrono::milliseconds timeout) {
  if (config_.deterministic) return true;
  std::unique_lock lk(mu_);
  if (paused_) return outstanding_locked() == 0;
  return idle_cv_.wait_for(lk, timeout, [&] { return in_flight_ == 0 && outstanding_locked() == 0; });
}

Snapshot ManaRuntime::quiesce_and_snapshot(DrainPolicy policy, std::chrono::milliseconds timeout) {
  std::unique_lock lk(mu_);
  if (mode_ != RuntimeMode::Training) throw StateError("quiesce_and_snapshot: runtime is already in evaluation mode");
  if (policy == DrainPolicy::Drain && !config_.deterministic) {
    const bool drained =
        idle_cv_.wait_for(lk, timeout, [&] { return in_flight_ == 0 && outstanding_locked() == 0; });
    if (!drained)
      throw TimeoutError(fmt::format("quiesce: drain timed out after {} ms; backlog (region:iterations):{}",
                                     timeout.count(), backlog_report_locked()));
  }
  paused_ = true;
  idle_cv_.wait(lk, [&] { return in_flight_ == 0; });
  Snapshot s;
  s.grid = config_.grid;
  for (const auto& [region, agent] : agents_) {
    s.models.emplace(region, agent->model);
    std::lock_guard alk(agent->mu);
    s.trained_iters[region] = agent->trained_iters;
  }
  mode_ = RuntimeMode::Evaluation;
  snapshot_ = s;
  return s;
}

void ManaRuntime::resume_training() {
  {
    std::lock_guard lk(mu_);
    mode_ = RuntimeMode::Training;
    paused_ = false;
    wake_all_locked();
  }
  if (config_.deterministic) run_inline_budgets();
}

RuntimeMode ManaRuntime::mode() const {
  std::lock_guard lk(mu_);
  return mode_;
}

std::size_t ManaRuntime::agent_count() const {
  std::lock_guard lk(mu_);
  return agents_.size();
}

std::vector<AgentStats> ManaRuntime::stats() const {
  std::lock_guard lk(mu_);
  std::vector<AgentStats> out;
  for (const auto& [region, agent] : agents_) {
    std::lock_guard alk(agent->mu);
    out.push_back({region, agent->trained_iters, agent->budget, agent->granted, agent->consumed, agent->skipped,
                   agent->memory.slice_count(), agent->memory.sample_count(), agent->last_loss});
  }
  return out;
}

std::uint64_t ManaRuntime::total_granted() const {
  std::uint64_t t = 0;
  for (const auto& s : stats()) t += s.granted;
  return t;
}

std::uint64_t ManaRuntime::total_consumed() const {
  std::uint64_t t = 0;
  for (const auto& s : stats()) t += s.consumed;
  return t;
}

std::uint64_t ManaRuntime::total_outstanding() const {
  std::lock_guard lk(mu_);
  return outstanding_locked();
}

Prediction ManaRuntime::predict_batch(std::span<const Vec3d> points, std::span<const Vec3f> dirs,
                                      const PredictOptions& options) const {
  return nslf::predict_batch(last_snapshot(), points, dirs, options);
}

const Snapshot& ManaRuntime::last_snapshot() const {
  std::lock_guard lk(mu_);
  if (mode_ != RuntimeMode::Evaluation || !snapshot_)
    throw StateError("predict: runtime has no snapshot (call quiesce_and_snapshot first)");
  return *snapshot_;
}

}  // namespace nslf
