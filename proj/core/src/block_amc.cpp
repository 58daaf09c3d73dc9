#include "amckfac/block_amc.hpp"

#include <sstream>

namespace amckfac {

PartitionTree partition_plan(std::size_t n, std::size_t leaf_max) {
  if (n < 1 || leaf_max < 1)
    throw ContractViolation("partition_plan: n and leaf_max must be >= 1");
  PartitionTree t;
  t.size = n;
  if (n > leaf_max) {
    const std::size_t n1 = (n + 1) / 2;
    t.left = std::make_unique<PartitionTree>(partition_plan(n1, leaf_max));
    t.right = std::make_unique<PartitionTree>(partition_plan(n - n1, leaf_max));
  }
  return t;
}

std::string render_partition(const PartitionTree& tree) {
  std::ostringstream out;
  out << "(" << tree.size;
  if (!tree.is_leaf()) {
    out << " " << render_partition(*tree.left) << " "
        << render_partition(*tree.right);
  }
  out << ")";
  return out.str();
}

SolveStatistics solve_statistics(const SolveContext& ctx) {
  SolveStatistics s;
  s.leaf_solves = ctx.stats.leaf_solves.load();
  s.lp_vector_outputs = ctx.stats.lp_vector_outputs.load();
  s.refinement_iterations_total = ctx.stats.refinement_iterations.load();
  s.crossbar_programs = ctx.stats.crossbar_programs.load();
  s.mean_iterations =
      s.leaf_solves > 0
          ? static_cast<double>(s.refinement_iterations_total) / s.leaf_solves
          : 0.0;
  return s;
}

namespace {

Matrix leaf_solve(const Matrix& a, const Matrix& b, SolveContext& ctx) {
  const std::size_t n = a.rows();
  if (n == 1) {
    // Scalar leaves are solved digitally; no crossbar needed.
    if (a(0, 0) == 0.0)
      throw SingularMatrixError("singular 1x1 leaf system");
    Matrix x = b;
    for (double& v : x.data()) v /= a(0, 0);
    return x;
  }

  const ConductanceTargets targets = split_and_scale(a, ctx.device);
  const CrossbarState state =
      program_crossbar(targets, ctx.device, ctx.rng());
  ctx.stats.crossbar_programs.fetch_add(1);

  Matrix x(n, b.cols(), 0.0);
  for (std::size_t j = 0; j < b.cols(); ++j) {
    Vector rhs = b.column(j);
    if (norm_inf(rhs) == 0.0) continue;  // zero column solves to zero
    if (ctx.leaf_recorder) ctx.leaf_recorder(a, rhs);
    auto [xj, report] = hp_solve(a, rhs, state, ctx.spec, ctx.max_iters,
                                 ctx.device, ctx.converters, ctx.rng);
    ctx.stats.leaf_solves.fetch_add(1);
    ctx.stats.lp_vector_outputs.fetch_add(report.iterations);
    ctx.stats.refinement_iterations.fetch_add(report.iterations);
    x.set_column(j, xj);
  }
  return x;
}

}  // namespace

Matrix block_solve(const Matrix& a, const Matrix& b, SolveContext& ctx) {
  if (a.rows() != a.cols())
    throw ContractViolation("block_solve: matrix must be square");
  if (a.rows() != b.rows())
    throw ContractViolation("block_solve: rhs row count mismatch");
  const std::size_t n = a.rows();
  const std::size_t k = b.cols();

  if (n <= static_cast<std::size_t>(ctx.device.leaf_max)) {
    return leaf_solve(a, b, ctx);
  }

  const std::size_t n1 = (n + 1) / 2;
  const std::size_t n2 = n - n1;

  const Matrix a11 = a.block(0, 0, n1, n1);
  const Matrix a12 = a.block(0, n1, n1, n2);
  const Matrix a21 = a.block(n1, 0, n2, n1);
  const Matrix a22 = a.block(n1, n1, n2, n2);
  const Matrix b1 = b.block(0, 0, n1, k);
  const Matrix b2 = b.block(n1, 0, n2, k);

  // W = A11^-1 [B1 | A12], one recursive solve for both needs.
  Matrix rhs1(n1, k + n2);
  rhs1.set_block(0, 0, b1);
  rhs1.set_block(0, k, a12);
  Matrix w;
  try {
    w = block_solve(a11, rhs1, ctx);
  } catch (NonConvergenceError& e) {
    throw NonConvergenceError(
        "block [" + std::to_string(n1) + "/" + std::to_string(n) + " upper]: " +
            e.what(),
        std::move(e.report), std::move(e.best_x));
  }
  const Matrix w_left = w.block(0, 0, n1, k);
  const Matrix w_right = w.block(0, k, n1, n2);

  // Schur complement, formed digitally at full precision.
  const Matrix s = a22 - a21 * w_right;
  Matrix x2;
  try {
    x2 = block_solve(s, b2 - a21 * w_left, ctx);
  } catch (SingularMatrixError& e) {
    throw SingularMatrixError("singular Schur complement at size " +
                              std::to_string(n2) + ": " + e.what());
  } catch (NonConvergenceError& e) {
    throw NonConvergenceError(
        "block [" + std::to_string(n2) + "/" + std::to_string(n) +
            " Schur]: " + e.what(),
        std::move(e.report), std::move(e.best_x));
  }
  const Matrix x1 = w_left - w_right * x2;

  Matrix x(n, k, 0.0);
  x.set_block(0, 0, x1);
  x.set_block(n1, 0, x2);
  return x;
}

Matrix precondition_update(const Matrix& grad_w, const Matrix& a_factor,
                           const Matrix& g_factor, double alpha, double beta,
                           SolveContext& ctx) {
  if (a_factor.rows() != a_factor.cols() || g_factor.rows() != g_factor.cols())
    throw ContractViolation("precondition_update: factors must be square");
  if (grad_w.rows() != g_factor.rows() || grad_w.cols() != a_factor.rows())
    throw ContractViolation("precondition_update: gradient shape mismatch");
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw ContractViolation("precondition_update: damping must be positive");

  Matrix u;
  try {
    u = block_solve(add_scaled_identity(g_factor, beta), grad_w, ctx);
  } catch (SolveError& e) {
    throw SolveError(std::string("G-stage: ") + e.what());
  }
  try {
    return block_solve(add_scaled_identity(a_factor, alpha), u.transposed(),
                       ctx)
        .transposed();
  } catch (SolveError& e) {
    throw SolveError(std::string("A-stage: ") + e.what());
  }
}

}  // namespace amckfac
