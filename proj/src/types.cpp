#include "bp/types.hpp"

#include <numeric>
#include <vector>

namespace bp {

bool is_pmf_vector(const VectorXd& v, double tol) {
  if (v.size() == 0) return false;
  if ((v.array() < 0.0).any()) return false;
  return std::abs(v.sum() - 1.0) <= tol;
}

double entropy_bits(const VectorXd& p) {
  double h = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) h -= p[i] * std::log2(p[i]);
  }
  return h;
}

Pmf::Pmf(Alphabet support, VectorXd probs)
    : support(support), probs(std::move(probs)) {
  if (this->probs.size() != support.size())
    throw SpecError("pmf: size mismatch with support");
  if (!is_pmf_vector(this->probs))
    throw SpecError("pmf: entries must be non-negative and sum to 1");
}

void Pmf::renormalize() { probs /= probs.sum(); }

Pmf Pmf::uniform(Alphabet a) {
  return Pmf(a, VectorXd::Constant(a.size(), 1.0 / a.size()));
}

Pmf Pmf::atom(Alphabet a, int v) {
  VectorXd p = VectorXd::Zero(a.size());
  p[a.index(v)] = 1.0;
  return Pmf(a, std::move(p));
}

TransitionMatrix::TransitionMatrix(Alphabet a, MatrixXd m)
    : alphabet(a), rows(std::move(m)) {
  if (rows.rows() != a.size() || rows.cols() != a.size())
    throw SpecError("transition matrix: shape mismatch with alphabet");
  for (int i = 0; i < rows.rows(); ++i) {
    if (!is_pmf_vector(rows.row(i).transpose()))
      throw SpecError("transition matrix: row " + std::to_string(i) +
                      " is not a pmf");
  }
}

TransitionMatrix TransitionMatrix::iid(const Pmf& p) {
  MatrixXd m(p.size(), p.size());
  for (int i = 0; i < p.size(); ++i) m.row(i) = p.probs.transpose();
  return TransitionMatrix(p.support, std::move(m));
}

namespace {

// Tarjan-free strong connectivity: reachable-from-0 forward and backward.
bool strongly_connected(const MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  auto reach = [&](bool forward) {
    std::vector<bool> seen(n, false);
    std::vector<int> stack = {0};
    seen[0] = true;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v) {
        double p = forward ? m(u, v) : m(v, u);
        if (p > 0.0 && !seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
    return seen;
  };
  auto fwd = reach(true), bwd = reach(false);
  for (int i = 0; i < n; ++i)
    if (!fwd[i] || !bwd[i]) return false;
  return true;
}

// Period = gcd over states of cycle-length differences via BFS levels.
int chain_period(const MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  std::vector<int> level(n, -1);
  std::vector<int> queue = {0};
  level[0] = 0;
  int g = 0;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    int u = queue[qi];
    for (int v = 0; v < n; ++v) {
      if (m(u, v) <= 0.0) continue;
      if (level[v] < 0) {
        level[v] = level[u] + 1;
        queue.push_back(v);
      } else {
        g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
      }
    }
  }
  return g == 0 ? 1 : g;
}

}  // namespace

bool TransitionMatrix::is_ergodic() const {
  return strongly_connected(rows) && chain_period(rows) == 1;
}

void SystemSpec::validate() const {
  if (demand.lo != 0 || consumption.lo != 0 || battery.lo != 0)
    throw SpecError("alphabets must start at 0");
  if (demand.hi > consumption.hi)
    throw SpecError("demand alphabet must be contained in consumption "
                    "alphabet (mx <= my)");
  if (iid) {
    if (demand_marginal.support != demand)
      throw SpecError("demand marginal support mismatch");
  } else {
    if (demand_chain.alphabet != demand)
      throw SpecError("demand chain alphabet mismatch");
  }
  if (initial_demand.support != demand)
    throw SpecError("initial demand support mismatch");
  if (initial_battery.support != battery)
    throw SpecError("initial battery support mismatch");
}

SystemSpec SystemSpec::make_iid(int mx, int my, int ms, VectorXd demand,
                                VectorXd initial_battery) {
  SystemSpec s;
  s.demand = Alphabet(0, mx);
  s.consumption = Alphabet(0, my);
  s.battery = Alphabet(0, ms);
  s.iid = true;
  s.demand_marginal = Pmf(s.demand, demand);
  s.initial_demand = s.demand_marginal;
  s.initial_battery = Pmf(s.battery, std::move(initial_battery));
  s.validate();
  return s;
}

SystemSpec SystemSpec::make_markov(int mx, int my, int ms, MatrixXd chain,
                                   VectorXd initial_demand,
                                   VectorXd initial_battery) {
  SystemSpec s;
  s.demand = Alphabet(0, mx);
  s.consumption = Alphabet(0, my);
  s.battery = Alphabet(0, ms);
  s.iid = false;
  s.demand_chain = TransitionMatrix(s.demand, std::move(chain));
  s.initial_demand = Pmf(s.demand, std::move(initial_demand));
  s.initial_battery = Pmf(s.battery, std::move(initial_battery));
  s.validate();
  return s;
}

SystemSpec SystemSpec::binary() {
  return make_iid(1, 1, 1, VectorXd::Constant(2, 0.5),
                  VectorXd::Constant(2, 0.5));
}

}  // namespace bp
