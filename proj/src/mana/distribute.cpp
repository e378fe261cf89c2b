#include "nslf/mana/distribute.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "nslf/core/errors.hpp"

namespace nslf {

Distribution distribute(const ColoredPointBatch& batch, const RegionGridConfig& cfg) {
  if (batch.directions.size() != batch.size() || batch.colors.size() != batch.size())
    throw ShapeError("distribute: points, directions and colors differ in length");
  Distribution out;
  const std::size_t n = batch.size();

  // pass 1: route every point to a dense slot; pass 2: fill pre-sized per-region batches
  std::vector<std::uint32_t> slot_of(n);
  std::vector<RegionIndex> slot_region;
  std::vector<std::size_t> slot_count;
  constexpr std::uint32_t kNone = ~std::uint32_t{0};
  const auto counts = cfg.cell_counts();
  const std::int64_t cells = std::int64_t{counts[0]} * counts[1] * counts[2];
  // small grids index slots by linear cell id, large ones through a hash map
  constexpr std::int64_t kDenseCells = 1 << 16;
  std::vector<std::uint32_t> dense(cells <= kDenseCells ? static_cast<std::size_t>(cells) : 0, kNone);
  std::unordered_map<RegionIndex, std::uint32_t, RegionIndexHash> sparse;
  auto slot_for = [&](const RegionIndex& r) {
    std::uint32_t* s = nullptr;
    if (!dense.empty())
      s = &dense[static_cast<std::size_t>((std::int64_t{r.ix} * counts[1] + r.iy) * counts[2] + r.iz)];
    else
      s = &sparse.try_emplace(r, kNone).first->second;
    if (*s == kNone) {
      *s = static_cast<std::uint32_t>(slot_region.size());
      slot_region.push_back(r);
      slot_count.push_back(0);
    }
    return *s;
  };
  for (std::size_t i = 0; i < n; ++i) {
    RegionIndex r;
    if (!try_region_of(batch.points[i], cfg, counts, r)) {
      slot_of[i] = kNone;
      out.rejected.push_back(i);
      continue;
    }
    slot_of[i] = slot_for(r);
    ++slot_count[slot_of[i]];
  }

  std::vector<TrainBatch*> dst(slot_region.size());
  std::vector<std::vector<std::size_t>*> src(slot_region.size());
  for (std::size_t s = 0; s < slot_region.size(); ++s) {
    dst[s] = &out.batches[slot_region[s]];
    src[s] = &out.source_indices[slot_region[s]];
    dst[s]->reserve(slot_count[s]);
    src[s]->reserve(slot_count[s]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t s = slot_of[i];
    if (s == kNone) continue;
    dst[s]->push_back(to_region_unit(batch.points[i], slot_region[s], cfg), batch.directions[i], batch.colors[i]);
    src[s]->push_back(i);
  }
  return out;
}

double median_of(std::vector<std::uint64_t> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  if (values.size() % 2 == 1) return static_cast<double>(values[m]);
  return 0.5 * (static_cast<double>(values[m - 1]) + static_cast<double>(values[m]));
}

std::vector<std::uint64_t> assign_budgets(const std::vector<BudgetCandidate>& candidates, double running_median,
                                          std::uint64_t quota) {
  std::vector<std::uint64_t> grants(candidates.size(), 0);
  if (candidates.empty() || quota == 0) return grants;

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (static_cast<double>(candidates[i].committed) < running_median) eligible.push_back(i);
  if (eligible.empty()) {
    std::uint64_t lo = candidates[0].committed;
    for (const auto& c : candidates) lo = std::min(lo, c.committed);
    for (std::size_t i = 0; i < candidates.size(); ++i)
      if (candidates[i].committed == lo) eligible.push_back(i);
  }
  std::sort(eligible.begin(), eligible.end(), [&](std::size_t a, std::size_t b) {
    if (candidates[a].committed != candidates[b].committed) return candidates[a].committed < candidates[b].committed;
    return candidates[a].region < candidates[b].region;
  });

  // competition ranking: equal loads share the rank of the first of them
  std::vector<double> weight(eligible.size());
  for (std::size_t k = 0; k < eligible.size(); ++k) {
    std::size_t rank = k + 1;
    if (k > 0 && candidates[eligible[k]].committed == candidates[eligible[k - 1]].committed)
      rank = static_cast<std::size_t>(std::lround(1.0 / weight[k - 1]));
    weight[k] = 1.0 / static_cast<double>(rank);
  }
  const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
  std::uint64_t given = 0;
  for (std::size_t k = 0; k < eligible.size(); ++k) {
    const auto g = std::min(quota - given,
                            static_cast<std::uint64_t>(std::floor(static_cast<double>(quota) * weight[k] / total)));
    grants[eligible[k]] = g;
    given += g;
  }
  for (std::size_t k = 0; given < quota; k = (k + 1) % eligible.size()) {
    ++grants[eligible[k]];
    ++given;
  }
  return grants;
}

}  // namespace nslf
