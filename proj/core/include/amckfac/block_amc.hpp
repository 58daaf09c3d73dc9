#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "amckfac/hp_inv.hpp"

namespace amckfac {

// Recursive 2x2 partitioning of an n x n system into crossbar-sized leaves.
struct PartitionTree {
  std::size_t size = 0;
  std::unique_ptr<PartitionTree> left;   // larger child first
  std::unique_ptr<PartitionTree> right;

  bool is_leaf() const { return !left; }
};

PartitionTree partition_plan(std::size_t n, std::size_t leaf_max);

// e.g. "(9 (5 (3) (2)) (4))"
std::string render_partition(const PartitionTree& tree);

struct SolveStats {
  std::atomic<std::int64_t> leaf_solves{0};            // hp_solve calls
  std::atomic<std::int64_t> lp_vector_outputs{0};      // amc_solve calls
  std::atomic<std::int64_t> refinement_iterations{0};
  std::atomic<std::int64_t> crossbar_programs{0};

  SolveStats() = default;
  SolveStats(const SolveStats& o)
      : leaf_solves(o.leaf_solves.load()),
        lp_vector_outputs(o.lp_vector_outputs.load()),
        refinement_iterations(o.refinement_iterations.load()),
        crossbar_programs(o.crossbar_programs.load()) {}
  SolveStats& operator=(const SolveStats& o) {
    leaf_solves = o.leaf_solves.load();
    lp_vector_outputs = o.lp_vector_outputs.load();
    refinement_iterations = o.refinement_iterations.load();
    crossbar_programs = o.crossbar_programs.load();
    return *this;
  }
};

struct SolveStatistics {
  std::int64_t leaf_solves = 0;
  std::int64_t lp_vector_outputs = 0;
  std::int64_t refinement_iterations_total = 0;
  double mean_iterations = 0.0;
  std::int64_t crossbar_programs = 0;
};

// Everything a block solve needs besides the matrices: the modeled hardware,
// the precision target, the random source, and counters.
struct SolveContext {
  DeviceConfig device;
  ConverterConfig converters;
  FixedPointSpec spec{24};
  int max_iters = 200;
  std::mt19937_64 rng{0x9e3779b97f4a7c15ull};
  SolveStats stats;

  // Optional tap: called with every leaf system (A_leaf, rhs column) right
  // before it is solved. Used by calibration.
  std::function<void(const Matrix&, const Vector&)> leaf_recorder;
};

SolveStatistics solve_statistics(const SolveContext& ctx);

// Solve A X = B by recursive Schur-complement elimination with analog
// HP-INV leaves. A should be SPD for guaranteed convergence.
Matrix block_solve(const Matrix& a, const Matrix& b, SolveContext& ctx);

// Two-stage KFAC preconditioning:
//   (G + beta I)^-1 gradW (A + alpha I)^-1
Matrix precondition_update(const Matrix& grad_w, const Matrix& a_factor,
                           const Matrix& g_factor, double alpha, double beta,
                           SolveContext& ctx);

}  // namespace amckfac
