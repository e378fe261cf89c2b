#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nslf::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;
  double seconds = 0.0;

  bool passed() const;
  void add(std::string name, bool ok, std::string detail);
};

struct GradSuiteOptions {
  int seeds = 50;
  std::uint64_t base_seed = 1;
  double tolerance = 1e-4;
  std::size_t samples_per_block = 48;  // FD components per parameter block and seed
};

struct ShSuiteOptions {
  std::size_t gram_samples = 1'000'000;
  std::size_t pointwise_directions = 10'000;
  std::uint64_t seed = 7;
  double gram_tolerance = 0.02;
  double pointwise_tolerance = 1e-6;
};

struct PartitionSuiteOptions {
  std::size_t points = 10'000;
  std::uint64_t seed = 11;
};

struct AsyncSuiteOptions {
  std::uint64_t seed = 5;
  std::uint64_t quota = 40;
  std::size_t batch_size = 64;
};

/// Finite-difference agreement of the hash grid, both models and the loss, in double precision.
SuiteReport run_grad_suite(const GradSuiteOptions& options = {});
/// Monte-Carlo orthonormality and the pointwise addition theorem for the SH basis.
SuiteReport run_sh_suite(const ShSuiteOptions& options = {});
/// distribute against a per-point oracle, and isolation of untouched agents.
SuiteReport run_partition_suite(const PartitionSuiteOptions& options = {});
/// Threaded, inline and direct training of one agent give bit-identical parameters.
SuiteReport run_async_suite(const AsyncSuiteOptions& options = {});

/// Dispatch by name: grad, sh, partition, async. Throws DomainError for other names.
SuiteReport run_suite(const std::string& name);
std::vector<std::string> suite_names();

}  // namespace nslf::verify
