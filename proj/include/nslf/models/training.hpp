#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <unordered_set>
#include <vector>

#include "nslf/models/train_batch.hpp"
#include "nslf/numerics/adam.hpp"

namespace nslf {

/// Append-only stack of frame slices for one region. With max_slices > 0 the stack is a uniform
/// reservoir over every slice ever appended.
class DataMemory {
 public:
  explicit DataMemory(std::size_t max_slices = 0, std::uint64_t seed = 0) : max_slices_(max_slices), rng_(seed) {}

  void append(std::shared_ptr<const TrainBatch> slice);

  std::size_t slice_count() const { return slices_.size(); }
  bool empty() const { return slices_.empty(); }
  const std::shared_ptr<const TrainBatch>& slice(std::size_t i) const { return slices_[i]; }
  const std::vector<std::shared_ptr<const TrainBatch>>& slices() const { return slices_; }
  std::size_t sample_count() const;
  std::size_t appended() const { return appended_; }

 private:
  std::size_t max_slices_;
  std::size_t appended_ = 0;
  std::mt19937_64 rng_;
  std::vector<std::shared_ptr<const TrainBatch>> slices_;
};

/// Sum over the selected samples of ||c - c_pred||^2 and its gradient (grads are overwritten).
/// `indices` empty means the whole batch. Throws on empty batch or non-finite loss.
template <typename Model>
double loss_and_grad(const Model& model, const TrainBatch& batch, std::span<const std::size_t> indices,
                     GradBundle<typename Model::Scalar>& grads, typename Model::Cache& cache);

template <typename Model>
struct TrainWorkspace {
  typename Model::Cache cache;
  GradBundle<typename Model::Scalar> grads;
  std::vector<std::size_t> indices;
  std::unordered_set<std::size_t> chosen;
};

struct IterationResult {
  double loss = 0.0;
  bool skipped = false;
};

/// k distinct indices from [0, n) (Floyd's algorithm); all of them when k >= n.
void sample_subset(std::size_t n, std::size_t k, std::mt19937_64& rng, std::vector<std::size_t>& out,
                   std::unordered_set<std::size_t>& scratch);

/// One step: random stored slice, random subset of batch_size samples, loss_and_grad, adam_step.
/// Iterations with non-finite loss or gradients are skipped and leave the parameters untouched.
template <typename Model>
IterationResult train_one_iteration(Model& model, AdamState<typename Model::Scalar>& optimizer,
                                    std::span<const std::shared_ptr<const TrainBatch>> memory,
                                    std::size_t batch_size, std::mt19937_64& rng, TrainWorkspace<Model>& ws);

struct TrainTrace {
  std::vector<double> losses;
  std::size_t skipped = 0;
};

template <typename Model>
TrainTrace train_steps(Model& model, AdamState<typename Model::Scalar>& optimizer, const DataMemory& memory,
                       std::size_t iterations, std::size_t batch_size, std::mt19937_64& rng);

template <typename Model>
TrainTrace train_steps(Model& model, AdamState<typename Model::Scalar>& optimizer, const DataMemory& memory,
                       std::size_t iterations, std::size_t batch_size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return train_steps(model, optimizer, memory, iterations, batch_size, rng);
}

}  // namespace nslf
