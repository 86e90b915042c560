#include "bp/convergence.hpp"

#include "bp/leakage.hpp"
#include "bp/parallel.hpp"

namespace bp {

LiftedChain lifted_chain(const SystemSpec& spec, const ActionB& b) {
  if (!spec.iid) throw SpecError("lifted chain requires i.i.d. demand");
  LiftedChain chain;
  chain.ns = spec.battery.size();
  chain.ny = spec.consumption.size();
  const int n = chain.ns * chain.ny;
  chain.kernel = MatrixXd::Zero(n, n);
  const Pmf& px = spec.demand_marginal;
  // (s, y_prev) -> (s + y - x, y) with x ~ P_X and y ~ b(·| s - x); the
  // y_prev component does not influence the transition.
  for (int s = 0; s < chain.ns; ++s) {
    for (int x = 0; x <= spec.mx(); ++x) {
      const int w = s - x;
      const YRange r = feasible_outputs(spec, w);
      for (int y = r.lo; y <= r.hi; ++y) {
        const double p = px.probs[x] * b(y, w);
        if (p == 0.0) continue;
        const int sp = s + y - x;
        for (int yprev = 0; yprev < chain.ny; ++yprev)
          chain.kernel(chain.state(s, yprev), chain.state(sp, y)) += p;
      }
    }
  }
  return chain;
}

MatrixXd observation_matrix(const LiftedChain& chain, int z) {
  MatrixXd m = MatrixXd::Zero(chain.kernel.rows(), chain.kernel.cols());
  for (int s = 0; s < chain.ns; ++s) {
    const int j = chain.state(s, z);
    m.col(j) = chain.kernel.col(j);
  }
  return m;
}

bool is_subrectangular(const MatrixXd& m, double tol) {
  const int n = static_cast<int>(m.rows());
  std::vector<int> live_rows, live_cols;
  for (int i = 0; i < n; ++i)
    if ((m.row(i).array().abs() > tol).any()) live_rows.push_back(i);
  for (int j = 0; j < n; ++j)
    if ((m.col(j).array().abs() > tol).any()) live_cols.push_back(j);
  for (int i : live_rows)
    for (int j : live_cols)
      if (!(std::abs(m(i, j)) > tol)) return false;
  return true;
}

SubrectangularCertificate subrectangular_certificate(const SystemSpec& spec,
                                                     const ActionB& b) {
  const LiftedChain chain = lifted_chain(spec, b);
  SubrectangularCertificate cert;
  const int ms = spec.ms();
  // charge with y=1 for ms steps, then discharge with y=0 for ms steps
  for (int i = 0; i < ms; ++i) cert.word.push_back(1);
  for (int i = 0; i < ms; ++i) cert.word.push_back(0);
  if (spec.my() < 1) cert.word.clear();

  const int n = static_cast<int>(chain.kernel.rows());
  cert.product = MatrixXd::Identity(n, n);
  for (int z : cert.word) cert.product = cert.product * observation_matrix(chain, z);
  cert.ok = is_subrectangular(cert.product);
  return cert;
}

ConvergenceReport empirical_convergence(const SystemSpec& spec,
                                        const ActionB& b, const Pmf& theta_ref,
                                        const std::vector<Pmf>& theta_inits,
                                        int T) {
  if (T < 1) throw SpecError("horizon must be positive");
  const LiftedChain chain = lifted_chain(spec, b);
  const XiBelief xi_ref = theta_to_xi(theta_ref, spec.demand_marginal);

  ConvergenceReport rep;
  rep.horizon = T;
  rep.target_rate = iid_single_letter_rate(b, xi_ref);
  rep.inits.resize(theta_inits.size());

  parallel_for(static_cast<int>(theta_inits.size()), [&](int idx) {
    const Pmf& theta0 = theta_inits[idx];
    ConvergenceReport::PerInit& out = rep.inits[idx];
    out.theta_init = theta0.probs;
    out.tv_path.reserve(T);

    // law of U_t; the dummy Y_0 coordinate is irrelevant to transitions
    Eigen::RowVectorXd mu(chain.kernel.rows());
    for (int s = 0; s < chain.ns; ++s)
      for (int y = 0; y < chain.ny; ++y)
        mu[chain.state(s, y)] = theta0.probs[s] / chain.ny;

    double cesaro = 0.0;
    for (int t = 1; t <= T; ++t) {
      VectorXd theta_t = VectorXd::Zero(chain.ns);
      for (int s = 0; s < chain.ns; ++s)
        for (int y = 0; y < chain.ny; ++y)
          theta_t[s] += mu[chain.state(s, y)];
      theta_t /= theta_t.sum();
      const double tv = 0.5 * (theta_t - theta_ref.probs).cwiseAbs().sum();
      out.tv_path.push_back(tv);
      const XiBelief xi_t =
          theta_to_xi(Pmf(spec.battery, theta_t), spec.demand_marginal);
      cesaro += iid_single_letter_rate(b, xi_t);
      mu = mu * chain.kernel;
    }
    out.final_tv = out.tv_path.back();
    out.cesaro_leakage = cesaro / T;
  });
  return rep;
}

}  // namespace bp
