#include "nslf/models/training.hpp"

#include <cmath>
#include <string>

#include "nslf/core/errors.hpp"
#include "nslf/models/hg_model.hpp"
#include "nslf/models/nslf_model.hpp"

namespace nslf {

void TrainBatch::validate() const {
  if (directions.size() != points.size() || colors.size() != points.size())
    throw ShapeError("train batch: points/directions/colors lengths differ");
  for (const auto& p : points)
    for (int a = 0; a < 3; ++a)
      if (!(p[a] >= 0.f && p[a] <= 1.f)) throw DomainError("train batch: point outside the unit cube");
}

void DataMemory::append(std::shared_ptr<const TrainBatch> slice) {
  ++appended_;
  if (max_slices_ == 0 || slices_.size() < max_slices_) {
    slices_.push_back(std::move(slice));
    return;
  }
  std::uniform_int_distribution<std::size_t> pick(0, appended_ - 1);
  const std::size_t j = pick(rng_);
  if (j < max_slices_) slices_[j] = std::move(slice);
}

std::size_t DataMemory::sample_count() const {
  std::size_t n = 0;
  for (const auto& s : slices_) n += s->size();
  return n;
}

template <typename Model>
double loss_and_grad(const Model& model, const TrainBatch& batch, std::span<const std::size_t> indices,
                     GradBundle<typename Model::Scalar>& grads, typename Model::Cache& cache) {
  using T = typename Model::Scalar;
  const std::size_t n = indices.empty() ? batch.size() : indices.size();
  if (n == 0) throw DomainError("loss_and_grad: empty batch");
  grads.zero();
  double loss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = indices.empty() ? k : indices[k];
    const Vec3<T> p(batch.points[j]);
    const Vec3<T> d(batch.directions[j]);
    const Vec3<T> c(batch.colors[j]);
    const Vec3<T> pred = model.forward(p, d, cache);
    const Vec3<T> diff = pred - c;
    loss += static_cast<double>(dot(diff, diff));
    model.backward(cache, diff * T(2), grads);
  }
  if (!std::isfinite(loss)) throw NumericError("loss_and_grad: non-finite loss");
  return loss;
}

void sample_subset(std::size_t n, std::size_t k, std::mt19937_64& rng, std::vector<std::size_t>& out,
                   std::unordered_set<std::size_t>& scratch) {
  out.clear();
  if (k >= n) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
    return;
  }
  scratch.clear();
  for (std::size_t j = n - k; j < n; ++j) {
    std::uniform_int_distribution<std::size_t> dist(0, j);
    const std::size_t t = dist(rng);
    const std::size_t pick = scratch.count(t) ? j : t;
    scratch.insert(pick);
    out.push_back(pick);
  }
}

template <typename Model>
IterationResult train_one_iteration(Model& model, AdamState<typename Model::Scalar>& optimizer,
                                    std::span<const std::shared_ptr<const TrainBatch>> memory,
                                    std::size_t batch_size, std::mt19937_64& rng, TrainWorkspace<Model>& ws) {
  if (memory.empty()) throw StateError("train: data memory is empty");
  std::uniform_int_distribution<std::size_t> pick_slice(0, memory.size() - 1);
  const TrainBatch& slice = *memory[pick_slice(rng)];
  sample_subset(slice.size(), batch_size, rng, ws.indices, ws.chosen);
  if (ws.grads.blocks.empty()) ws.grads = model.make_grads();
  IterationResult r;
  try {
    r.loss = loss_and_grad(model, slice, ws.indices, ws.grads, ws.cache);
    auto params = model.parameter_blocks();
    adam_step(optimizer, params, ws.grads);
  } catch (const NumericError&) {
    r.skipped = true;
  }
  return r;
}

template <typename Model>
TrainTrace train_steps(Model& model, AdamState<typename Model::Scalar>& optimizer, const DataMemory& memory,
                       std::size_t iterations, std::size_t batch_size, std::mt19937_64& rng) {
  TrainTrace trace;
  if (iterations == 0) return trace;
  if (memory.empty()) throw StateError("train_steps: data memory is empty");
  TrainWorkspace<Model> ws;
  for (std::size_t it = 0; it < iterations; ++it) {
    const IterationResult r = train_one_iteration(model, optimizer, memory.slices(), batch_size, rng, ws);
    if (r.skipped) {
      ++trace.skipped;
      continue;
    }
    trace.losses.push_back(r.loss);
  }
  return trace;
}

#define NSLF_INSTANTIATE_TRAINING(M)                                                                          \
  template double loss_and_grad(const M&, const TrainBatch&, std::span<const std::size_t>,                  \
                                GradBundle<M::Scalar>&, M::Cache&);                                         \
  template IterationResult train_one_iteration(M&, AdamState<M::Scalar>&,                                   \
                                               std::span<const std::shared_ptr<const TrainBatch>>,          \
                                               std::size_t, std::mt19937_64&, TrainWorkspace<M>&);          \
  template TrainTrace train_steps(M&, AdamState<M::Scalar>&, const DataMemory&, std::size_t, std::size_t, \
                                  std::mt19937_64&);

NSLF_INSTANTIATE_TRAINING(NslfModel<float>)
NSLF_INSTANTIATE_TRAINING(NslfModel<double>)
NSLF_INSTANTIATE_TRAINING(HgModel<float>)
NSLF_INSTANTIATE_TRAINING(HgModel<double>)

#undef NSLF_INSTANTIATE_TRAINING

}  // namespace nslf
