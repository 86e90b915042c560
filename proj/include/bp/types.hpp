#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kPmfTolerance = 1e-12;
inline constexpr double kLn2 = 0.6931471805599453;

/// Thrown when an input violates a model invariant (bad pmf, value outside
/// its alphabet, infeasible consumption, ...).
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when conditioning on an observation of probability zero.
class NullConditioningError : public std::runtime_error {
 public:
  explicit NullConditioningError(int y)
      : std::runtime_error("conditioning on zero-probability observation y=" +
                           std::to_string(y)),
        y(y) {}
  int y;
};

/// Thrown when an exact computation would exceed its configured budget.
class BudgetExceededError : public std::runtime_error {
 public:
  BudgetExceededError(std::size_t required, std::size_t budget)
      : std::runtime_error("budget exceeded: need " + std::to_string(required) +
                           " > " + std::to_string(budget) +
                           "; use the Monte Carlo estimator"),
        required(required),
        budget(budget) {}
  std::size_t required;
  std::size_t budget;
};

/// Contiguous integer range {lo, ..., hi}.
struct Alphabet {
  int lo = 0;
  int hi = 0;

  Alphabet() = default;
  Alphabet(int lo, int hi) : lo(lo), hi(hi) {
    if (lo > hi) throw SpecError("alphabet: lo > hi");
  }

  int size() const { return hi - lo + 1; }
  bool contains(int v) const { return v >= lo && v <= hi; }
  int index(int v) const {
    if (!contains(v))
      throw SpecError("value " + std::to_string(v) + " outside alphabet [" +
                      std::to_string(lo) + "," + std::to_string(hi) + "]");
    return v - lo;
  }
  int value(int i) const { return lo + i; }
  bool operator==(const Alphabet&) const = default;
};

/// Probability mass function over a contiguous integer alphabet.
struct Pmf {
  Alphabet support;
  VectorXd probs;

  Pmf() = default;
  Pmf(Alphabet support, VectorXd probs);

  double operator()(int v) const { return probs[support.index(v)]; }
  int size() const { return support.size(); }

  /// Rescale so the entries sum to exactly 1 (for accumulated drift).
  void renormalize();

  static Pmf uniform(Alphabet a);
  static Pmf atom(Alphabet a, int v);
};

/// Row-stochastic transition matrix on a contiguous alphabet.
struct TransitionMatrix {
  Alphabet alphabet;
  MatrixXd rows;  // rows(i, j) = P(next = value(j) | current = value(i))

  TransitionMatrix() = default;
  TransitionMatrix(Alphabet a, MatrixXd rows);

  double operator()(int from, int to) const {
    return rows(alphabet.index(from), alphabet.index(to));
  }

  /// True when the chain is irreducible and aperiodic. Not required by the
  /// solvers; callers attach a warning to infinite-horizon results when it
  /// fails.
  bool is_ergodic() const;

  static TransitionMatrix iid(const Pmf& p);
};

/// The full system: alphabets for demand X, consumption Y, battery S, the
/// demand law (i.i.d. or first-order Markov), and the initial distributions.
struct SystemSpec {
  Alphabet demand;       // X = {0..mx}
  Alphabet consumption;  // Y = {0..my}
  Alphabet battery;      // S = {0..ms}
  bool iid = true;
  Pmf demand_marginal;          // P_X (i.i.d. case)
  TransitionMatrix demand_chain;  // Q (Markov case)
  Pmf initial_demand;   // P_{X1}
  Pmf initial_battery;  // P_{S1}

  int mx() const { return demand.hi; }
  int my() const { return consumption.hi; }
  int ms() const { return battery.hi; }

  /// Difference alphabet W = {s - x} = {-mx, ..., ms}.
  Alphabet difference() const { return Alphabet(-demand.hi, battery.hi); }

  /// Validates alphabets (X ⊆ Y so demand is always satisfiable) and all
  /// distribution invariants; throws SpecError on failure.
  void validate() const;

  /// Markov kernel as a matrix even in the i.i.d. case (all rows P_X).
  TransitionMatrix kernel() const {
    return iid ? TransitionMatrix::iid(demand_marginal) : demand_chain;
  }

  static SystemSpec make_iid(int mx, int my, int ms, VectorXd demand,
                             VectorXd initial_battery);
  static SystemSpec make_markov(int mx, int my, int ms, MatrixXd chain,
                                VectorXd initial_demand,
                                VectorXd initial_battery);

  /// Uniform demand and battery on {0,1}; the standard small example.
  static SystemSpec binary();
};

/// Shannon entropy in bits with the 0 log 0 = 0 convention.
double entropy_bits(const VectorXd& p);

/// x * log2(x / y) with the conventions 0 log(0/y) = 0; x log(x/0) never
/// occurs for valid inputs (mass implies positive marginal).
inline double xlog2x_over(double x, double y) {
  if (x <= 0.0) return 0.0;
  return x * std::log2(x / y);
}

bool is_pmf_vector(const VectorXd& v, double tol = kPmfTolerance);

}  // namespace bp
