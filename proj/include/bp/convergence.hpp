#pragma once

#include <vector>

#include "bp/policy.hpp"

namespace bp {

/// Markov chain on the lifted state U_t = (S_t, Y_{t-1}) induced by a fixed
/// memoryless policy b under i.i.d. demand. Index convention:
/// u = s * |Y| + y.
struct LiftedChain {
  int ns = 0;
  int ny = 0;
  MatrixXd kernel;  // row-stochastic on S x Y

  int state(int s, int y) const { return s * ny + y; }
};

LiftedChain lifted_chain(const SystemSpec& spec, const ActionB& b);

/// Kernel masked by the observed consumption of the destination state:
/// M(z)_{ij} = kernel_{ij} if the Y-component of j equals z, else 0.
/// Summing over z recovers the kernel.
MatrixXd observation_matrix(const LiftedChain& chain, int z);

struct SubrectangularCertificate {
  std::vector<int> word;  // consumption symbols
  MatrixXd product;       // ∏_t M(word_t)
  bool ok = false;
};

/// Whether a matrix has the subrectangular positivity pattern: whenever
/// entries (i1,j1) and (i2,j2) are nonzero, so are (i1,j2) and (i2,j1).
bool is_subrectangular(const MatrixXd& m, double tol = 0.0);

/// Builds the charge/discharge word (y=1 repeated ms times, then y=0
/// repeated ms times) and tests the masked-kernel product for
/// subrectangularity. A true result certifies that the filtered battery
/// distribution forgets its initialization; false is reported as
/// inconclusive, not as divergence.
SubrectangularCertificate subrectangular_certificate(const SystemSpec& spec,
                                                     const ActionB& b);

struct ConvergenceReport {
  struct PerInit {
    VectorXd theta_init;
    double final_tv = 0.0;        // TV(E[θ_T], θ°)
    double cesaro_leakage = 0.0;  // (1/T) Σ I(b; ξ̄_t) in bits
    std::vector<double> tv_path;  // TV distance at each t
  };
  int horizon = 0;
  double target_rate = 0.0;  // I(b; ξ°)
  std::vector<PerInit> inits;
};

/// Propagates the exact unconditional law of the lifted state from each
/// initial battery distribution and reports the total-variation distance of
/// the battery marginal to θ° plus the Cesàro average of the per-step rate
/// evaluated at the mean difference belief.
ConvergenceReport empirical_convergence(const SystemSpec& spec,
                                        const ActionB& b, const Pmf& theta_ref,
                                        const std::vector<Pmf>& theta_inits,
                                        int T);

}  // namespace bp
