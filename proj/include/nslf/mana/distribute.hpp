#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "nslf/ingest/unproject.hpp"
#include "nslf/mana/region_grid.hpp"
#include "nslf/models/train_batch.hpp"

namespace nslf {

struct Distribution {
  std::map<RegionIndex, TrainBatch> batches;
  /// For each region, the input index of every sample, in batch order.
  std::map<RegionIndex, std::vector<std::size_t>> source_indices;
  /// Input indices of points outside the box.
  std::vector<std::size_t> rejected;
};

/// Partitions a frame by region. Points are re-expressed in their region's unit cube; the input
/// order is kept inside each region.
Distribution distribute(const ColoredPointBatch& batch, const RegionGridConfig& cfg);

/// Committed load of one agent that received data in the current feed.
struct BudgetCandidate {
  RegionIndex region;
  std::uint64_t committed = 0;  // trained iterations + outstanding budget
};

/// Splits `quota` iterations among the candidates. `running_median` is the median committed load
/// over all agents. Candidates strictly below it are eligible; when none is, the least-loaded
/// candidates are. Eligible agents are weighted by 1 / rank (rank 1 = least loaded, ties share a
/// rank); leftovers go one each in (load, region) order. The grants always sum to `quota` when
/// there is at least one candidate.
std::vector<std::uint64_t> assign_budgets(const std::vector<BudgetCandidate>& candidates, double running_median,
                                          std::uint64_t quota);

/// Median of the values (mean of the two middle values for even counts); 0 for an empty list.
double median_of(std::vector<std::uint64_t> values);

}  // namespace nslf
