#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "bp/iidopt.hpp"
#include "bp/leakage.hpp"
#include "bp/policy.hpp"

namespace bp {

/// Regular grid on the probability simplex: all compositions of `resolution`
/// into `dim` parts, scaled by 1/resolution. Piecewise-linear interpolation
/// uses the Freudenthal triangulation in cumulative coordinates, so every
/// query point is a convex combination of at most `dim` grid vertices.
class SimplexGrid {
 public:
  static SimplexGrid make(int dim, int resolution,
                          std::size_t point_budget = 5'000'000);

  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  long size() const { return points_.rows(); }
  const MatrixXd& points() const { return points_; }
  VectorXd point(long i) const { return points_.row(i).transpose(); }

  struct Cell {
    std::vector<long> indices;
    std::vector<double> weights;
  };
  /// Enclosing cell and barycentric weights of an arbitrary simplex point.
  Cell locate(const VectorXd& p) const;

  /// Interpolated value, optionally with an ambient-space gradient (defined
  /// up to an additive constant along 1, which cancels in tangent
  /// directions).
  double interpolate(const VectorXd& values, const VectorXd& p,
                     VectorXd* grad = nullptr) const;

  /// Grid index closest to p (largest barycentric weight in its cell).
  long nearest(const VectorXd& p) const;

 private:
  int dim_ = 1;
  int resolution_ = 1;
  MatrixXd points_;
  std::vector<long long> index_;  // composition codes in enumeration order
  long code_of(const std::vector<int>& comp) const;
};

/// Values (in bits) on a simplex grid, with the minimizing actions of the
/// final backup sweep when they were requested.
struct ValueFunction {
  std::shared_ptr<const SimplexGrid> grid;
  VectorXd values;
  std::vector<MatrixXd> actions;  // per grid point; empty if not extracted

  double at(const VectorXd& p, VectorXd* grad = nullptr) const {
    return grid->interpolate(values, p, grad);
  }
};

struct InnerOptions {
  double tol = 1e-6;      // projected-gradient norm target
  int max_iters = 400;
  int restarts = 3;       // random restarts on top of the given start
  std::uint64_t seed = 17;
};

struct BackupResult {
  double value = 0.0;  // bits
  double pg_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct BackupResultA : BackupResult {
  ActionA action;
};
struct BackupResultB : BackupResult {
  ActionB action;
};

/// One Bellman backup at belief π: minimize over feasible actions the
/// per-step cost I(a;π) plus the expected interpolated continuation value.
/// V_next may be empty (terminal stage).
BackupResultA bellman_backup(const SystemSpec& spec, const Belief& pi,
                             const ValueFunction* v_next,
                             const InnerOptions& opt = {},
                             const ActionA* warm_start = nullptr);

/// Difference-coordinate analogue over b ∈ ℬ for i.i.d. demand.
BackupResultB bellman_backup_xi(const SystemSpec& spec, const XiBelief& xi,
                                const ValueFunction* v_next,
                                const InnerOptions& opt = {},
                                const ActionB* warm_start = nullptr);

struct FiniteHorizonSolution {
  double rate = 0.0;  // V_1(π_1) / T in bits
  std::vector<ValueFunction> stages;  // stages[t-1] = V_t, t = 1..T+1
  BeliefPolicy policy;  // greedy policy; actions interpolated between vertices
  bool inner_all_converged = true;
  double worst_inner_pg = 0.0;
};

FiniteHorizonSolution solve_finite_horizon(const SystemSpec& spec, int T,
                                           int resolution,
                                           const InnerOptions& inner = {});

struct InfiniteHorizonSolution {
  double J = 0.0;  // bits
  ValueFunction v;  // relative value function on the ξ simplex
  DifferencePolicy policy;
  bool converged = false;
  double span = 0.0;
  long iterations = 0;
  bool ergodicity_warning = false;  // demand chain failed the ergodic check
};

struct RviOptions {
  double tol = 1e-6;  // span seminorm target
  long max_iters = 2000;
  InnerOptions inner;
};

/// Relative value iteration for the average-cost fixed point on the ξ
/// simplex (i.i.d. demand only). J is the span midpoint at the final sweep;
/// on non-convergence the partial result is returned with converged=false.
InfiniteHorizonSolution solve_iid_infinite(const SystemSpec& spec,
                                           int resolution,
                                           const RviOptions& opt = {});

struct ConcavityReport {
  int trials = 0;
  int violations = 0;
  double worst_violation = 0.0;  // most negative concavity slack seen
  double tolerance = 0.0;
};

/// Samples (π₁, π₂, λ) and checks the interpolant satisfies midpoint
/// concavity within the grid tolerance (piecewise-linear interpolation of a
/// concave function can dip below chords by at most the interpolation
/// error).
ConcavityReport verify_concavity(const ValueFunction& v, int trials,
                                 std::uint64_t seed,
                                 std::optional<double> tolerance = {});

struct ConverseReport {
  int trials = 0;
  double min_slack = 0.0;          // over random (ξ, b)
  double slack_at_optimum = 0.0;   // at (ξ*, b*); zero for the exact solution
  int violations = 0;              // slack below -1e-9
};

/// Average-cost optimality inequality with the entropy relative value:
/// for every (ξ, b), I(b;ξ) + H(W⁺|Y) - H(ξ) ≥ J*. Equality holds at the
/// invariant optimum.
ConverseReport verify_dp_converse(const SystemSpec& spec,
                                  const SingleLetterSolution& sol, int trials,
                                  std::uint64_t seed);

}  // namespace bp
