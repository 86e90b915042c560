#pragma once

#include <cstdint>
#include <limits>

#include <Eigen/Dense>

namespace bp {

/// Counter-based pseudo-random generator (splitmix64 applied to a running
/// counter). Substreams derived via derive_seed() are statistically
/// independent, which keeps parallel Monte Carlo reproducible from one seed
/// regardless of thread scheduling.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : key_(seed), counter_(0) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in {0, ..., n-1}.
  int uniform_int(int n) {
    return static_cast<int>(uniform() * static_cast<double>(n));
  }

  /// Sample an index from an unnormalized non-negative weight vector.
  int sample(const Eigen::VectorXd& weights) {
    const double total = weights.sum();
    double u = uniform() * total;
    for (int i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return static_cast<int>(weights.size()) - 1;
  }

  /// Uniform point on the probability simplex of the given dimension
  /// (Dirichlet(1,...,1) via normalized exponentials).
  Eigen::VectorXd simplex_point(int dim) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) {
      double u = uniform();
      if (u <= 0.0) u = 0x1.0p-53;
      v[i] = -std::log(u);
    }
    return v / v.sum();
  }

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// Derive an independent substream seed, e.g. per Monte Carlo path or per
/// sweep cell: derive_seed(derive_seed(seed, mx), ms).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return Rng::mix(seed ^ (0x9e3779b97f4a7c15ULL + Rng::mix(stream)));
}

}  // namespace bp
