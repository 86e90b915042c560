#include "bp/dp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "bp/parallel.hpp"
#include "bp/rng.hpp"

namespace bp {

// ======================================================================
// SimplexGrid
// ======================================================================

namespace {

long long composition_code(const std::vector<int>& comp, int base) {
  long long code = 0;
  for (std::size_t i = 0; i + 1 < comp.size(); ++i)
    code = code * base + comp[i];
  return code;
}

std::size_t count_compositions(int dim, int k) {
  // C(k + dim - 1, dim - 1)
  double c = 1.0;
  for (int i = 1; i < dim; ++i) c = c * (k + i) / i;
  return static_cast<std::size_t>(std::llround(c));
}

}  // namespace

SimplexGrid SimplexGrid::make(int dim, int resolution,
                              std::size_t point_budget) {
  if (dim < 1 || resolution < 1)
    throw SpecError("simplex grid needs dim >= 1 and resolution >= 1");
  const std::size_t count = count_compositions(dim, resolution);
  if (count > point_budget) throw BudgetExceededError(count, point_budget);

  SimplexGrid g;
  g.dim_ = dim;
  g.resolution_ = resolution;
  g.points_.resize(static_cast<long>(count), dim);

  std::vector<int> comp(dim, 0);
  long row = 0;
  // lexicographic enumeration of compositions of `resolution` into dim parts
  std::function<void(int, int)> emit = [&](int pos, int remaining) {
    if (pos == dim - 1) {
      comp[pos] = remaining;
      for (int i = 0; i < dim; ++i)
        g.points_(row, i) = static_cast<double>(comp[i]) / resolution;
      g.index_.push_back(composition_code(comp, resolution + 1));
      ++row;
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      comp[pos] = v;
      emit(pos + 1, remaining - v);
    }
  };
  emit(0, resolution);
  return g;
}

long SimplexGrid::code_of(const std::vector<int>& comp) const {
  const long long code = composition_code(comp, resolution_ + 1);
  // index_ holds codes in enumeration order; binary search recovers the id
  const auto it = std::lower_bound(index_.begin(), index_.end(), code);
  if (it == index_.end() || *it != code)
    throw SpecError("interpolation produced an off-grid vertex");
  return static_cast<long>(it - index_.begin());
}

SimplexGrid::Cell SimplexGrid::locate(const VectorXd& p_in) const {
  Cell cell;
  if (dim_ == 1) {
    cell.indices = {0};
    cell.weights = {1.0};
    return cell;
  }
  VectorXd p = p_in.cwiseMax(0.0);
  p /= p.sum();

  const int m = dim_ - 1;  // cumulative coordinates
  std::vector<double> frac(m);
  std::vector<int> base(m);
  double cum = 0.0;
  for (int j = 0; j < m; ++j) {
    cum += p[j];
    double u = std::clamp(cum * resolution_, 0.0, double(resolution_));
    int b = static_cast<int>(std::floor(u));
    if (b >= resolution_) b = resolution_;
    double f = u - b;
    if (f < 0.0) f = 0.0;
    base[j] = b;
    frac[j] = f;
  }

  // Order of increments: descending fractional part; ties to the larger
  // coordinate first so cumulative vertices stay monotone.
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (frac[a] != frac[b]) return frac[a] > frac[b];
    return a > b;
  });

  std::vector<int> vertex_cum = base;
  auto push_vertex = [&](double weight) {
    if (weight <= 1e-14) return;
    std::vector<int> comp(dim_);
    comp[0] = vertex_cum[0];
    for (int j = 1; j < m; ++j) comp[j] = vertex_cum[j] - vertex_cum[j - 1];
    comp[dim_ - 1] = resolution_ - vertex_cum[m - 1];
    cell.indices.push_back(code_of(comp));
    cell.weights.push_back(weight);
  };

  push_vertex(1.0 - frac[order[0]]);
  for (int i = 0; i < m; ++i) {
    vertex_cum[order[i]] += 1;
    const double w =
        (i + 1 < m) ? frac[order[i]] - frac[order[i + 1]] : frac[order[i]];
    push_vertex(w);
  }
  // renormalize after dropping zero-weight vertices
  double total = 0.0;
  for (double w : cell.weights) total += w;
  for (double& w : cell.weights) w /= total;
  return cell;
}

double SimplexGrid::interpolate(const VectorXd& values, const VectorXd& p_in,
                                VectorXd* grad) const {
  if (dim_ == 1) {
    if (grad) *grad = VectorXd::Zero(1);
    return values[0];
  }
  VectorXd p = p_in.cwiseMax(0.0);
  p /= p.sum();

  const int m = dim_ - 1;
  std::vector<double> frac(m);
  std::vector<int> base(m);
  double cum = 0.0;
  for (int j = 0; j < m; ++j) {
    cum += p[j];
    double u = std::clamp(cum * resolution_, 0.0, double(resolution_));
    int b = static_cast<int>(std::floor(u));
    if (b >= resolution_) b = resolution_;
    base[j] = b;
    frac[j] = std::max(u - b, 0.0);
  }
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (frac[a] != frac[b]) return frac[a] > frac[b];
    return a > b;
  });

  std::vector<int> vertex_cum = base;
  std::vector<double> vertex_val(m + 1);
  auto value_at = [&]() {
    std::vector<int> comp(dim_);
    comp[0] = vertex_cum[0];
    for (int j = 1; j < m; ++j) comp[j] = vertex_cum[j] - vertex_cum[j - 1];
    comp[dim_ - 1] = resolution_ - vertex_cum[m - 1];
    // vertices with zero weight may fall off the grid at the boundary; they
    // never contribute, so clamp instead of failing
    for (int j = 0; j < dim_; ++j)
      if (comp[j] < 0 || comp[j] > resolution_) return std::nan("");
    return values[code_of(comp)];
  };

  vertex_val[0] = value_at();
  double result = vertex_val[0] * (1.0 - frac[order[0]]);
  for (int i = 0; i < m; ++i) {
    vertex_cum[order[i]] += 1;
    vertex_val[i + 1] = value_at();
    const double w =
        (i + 1 < m) ? frac[order[i]] - frac[order[i + 1]] : frac[order[i]];
    if (w > 0.0) result += vertex_val[i + 1] * w;
  }
  // zero-weight NaN vertices cannot have contributed to the value; patch
  // them for the gradient with their predecessor so the difference is 0
  for (int i = 0; i <= m; ++i)
    if (std::isnan(vertex_val[i])) vertex_val[i] = i > 0 ? vertex_val[i - 1] : 0.0;

  if (grad) {
    // d/d frac[order[i]] = vertex_val[i+1] - vertex_val[i]; chain through
    // u_j = resolution * (p_0 + ... + p_j)
    std::vector<double> dfrac(m);
    for (int i = 0; i < m; ++i) dfrac[order[i]] = vertex_val[i + 1] - vertex_val[i];
    VectorXd g = VectorXd::Zero(dim_);
    double suffix = 0.0;
    for (int j = m - 1; j >= 0; --j) {
      suffix += dfrac[j];
      g[j] = resolution_ * suffix;
    }
    // g[dim_-1] stays 0: the ambient extension ignores the last coordinate
    *grad = g;
  }
  return result;
}

long SimplexGrid::nearest(const VectorXd& p) const {
  const Cell c = locate(p);
  long best = c.indices[0];
  double bw = c.weights[0];
  for (std::size_t i = 1; i < c.indices.size(); ++i)
    if (c.weights[i] > bw) {
      bw = c.weights[i];
      best = c.indices[i];
    }
  return best;
}

// ======================================================================
// Inner solver: projected gradient over a product of simplices
// ======================================================================

namespace {

struct RowSpec {
  int offset;  // start in the flat parameter vector
  int n;       // feasible support size
};

void project_simplex_row(double* v, int n) {
  if (n == 1) {
    v[0] = 1.0;
    return;
  }
  std::vector<double> u(v, v + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0, tau = 0.0;
  for (int i = 0; i < n; ++i) {
    cum += u[i];
    const double t = (cum - 1.0) / (i + 1);
    if (u[i] - t > 0.0) tau = t;
  }
  for (int i = 0; i < n; ++i) v[i] = std::max(v[i] - tau, 0.0);
}

VectorXd project_rows(VectorXd v, const std::vector<RowSpec>& rows) {
  for (const RowSpec& r : rows) project_simplex_row(v.data() + r.offset, r.n);
  return v;
}

using ObjectiveFn = std::function<double(const VectorXd&, VectorXd*)>;

struct PgdResult {
  VectorXd x;
  double value = 0.0;
  double pg_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Pairwise mass exchanges within each row. The continuation value is
// piecewise linear, so plain projected gradient can jam on a kink; exchange
// directions span the tangent cone of the product of simplices, and failing
// to improve along all of them certifies (local) optimality there.
bool exchange_polish(const ObjectiveFn& f, const std::vector<RowSpec>& rows,
                     VectorXd& x, double& fx) {
  bool improved_any = false;
  bool improved = true;
  int rounds = 0;
  while (improved && rounds++ < 8) {
    improved = false;
    for (const RowSpec& r : rows) {
      for (int i = 0; i < r.n; ++i) {
        if (x[r.offset + i] <= 0.0) continue;
        for (int j = 0; j < r.n; ++j) {
          if (j == i) continue;
          for (double t = x[r.offset + i]; t > 1e-13; t *= 0.25) {
            VectorXd cand = x;
            cand[r.offset + i] -= t;
            cand[r.offset + j] += t;
            const double fc = f(cand, nullptr);
            if (fc < fx - 1e-13) {
              x = std::move(cand);
              fx = fc;
              improved = improved_any = true;
              break;
            }
          }
        }
      }
    }
  }
  return improved_any;
}

PgdResult pgd_single(const ObjectiveFn& f, const std::vector<RowSpec>& rows,
                     VectorXd x0, double tol, int max_iters) {
  PgdResult res;
  VectorXd x = project_rows(std::move(x0), rows);
  VectorXd g;
  double fx = f(x, &g);
  double eta = 1.0;
  int it = 0;
  bool jammed = false;
  for (; it < max_iters; ++it) {
    res.pg_norm = (x - project_rows(x - g, rows)).norm();
    if (res.pg_norm < tol) {
      res.converged = true;
      break;
    }
    bool moved = false;
    while (eta > 1e-14) {
      VectorXd cand = project_rows(x - eta * g, rows);
      const double decrease = g.dot(x - cand);
      const double fc = f(cand, nullptr);
      if (fc <= fx - 1e-4 * decrease && fc < fx) {
        x = std::move(cand);
        fx = f(x, &g);
        eta = std::min(eta * 1.3, 1e3);
        moved = true;
        break;
      }
      eta *= 0.5;
    }
    if (!moved) {
      jammed = true;
      break;
    }
  }
  if (jammed) {
    if (exchange_polish(f, rows, x, fx)) {
      fx = f(x, &g);
      exchange_polish(f, rows, x, fx);
    }
    // no improving exchange direction left: accept as (vertex) optimal
    res.converged = true;
  }
  res.pg_norm = (x - project_rows(x - g, rows)).norm();
  if (res.pg_norm < tol) res.converged = true;
  res.x = std::move(x);
  res.value = fx;
  res.iterations = it;
  return res;
}

PgdResult pgd_multistart(const ObjectiveFn& f, const std::vector<RowSpec>& rows,
                         const std::vector<VectorXd>& starts,
                         const InnerOptions& opt) {
  PgdResult best;
  best.value = std::numeric_limits<double>::infinity();
  int total_iters = 0;
  for (const VectorXd& s : starts) {
    PgdResult r = pgd_single(f, rows, s, opt.tol, opt.max_iters);
    total_iters += r.iterations;
    if (r.value < best.value) best = std::move(r);
  }
  best.iterations = total_iters;
  return best;
}

std::vector<VectorXd> make_starts(const std::vector<RowSpec>& rows, int params,
                                  const VectorXd* warm, int restarts,
                                  std::uint64_t seed) {
  std::vector<VectorXd> starts;
  if (warm) starts.push_back(*warm);
  VectorXd uniform(params);
  for (const RowSpec& r : rows)
    for (int i = 0; i < r.n; ++i) uniform[r.offset + i] = 1.0 / r.n;
  starts.push_back(uniform);
  Rng rng(seed);
  for (int k = 0; k < restarts; ++k) {
    VectorXd v(params);
    for (const RowSpec& r : rows) {
      const VectorXd row = rng.simplex_point(r.n);
      for (int i = 0; i < r.n; ++i) v[r.offset + i] = row[i];
    }
    starts.push_back(std::move(v));
  }
  return starts;
}

constexpr double kLogFloor = 1e-18;

}  // namespace

// ======================================================================
// Bellman backups
// ======================================================================

namespace {

// Flattening convention for joint beliefs on the grid: index = x * ns + s.
VectorXd flatten(const Belief& pi) {
  VectorXd v(pi.nx() * pi.ns());
  for (int x = 0; x < pi.nx(); ++x)
    for (int s = 0; s < pi.ns(); ++s) v[x * pi.ns() + s] = pi.joint(x, s);
  return v;
}

Belief unflatten(const VectorXd& v, int nx, int ns) {
  MatrixXd joint(nx, ns);
  for (int x = 0; x < nx; ++x)
    for (int s = 0; s < ns; ++s) joint(x, s) = std::max(v[x * ns + s], 0.0);
  return Belief(joint / joint.sum());
}

struct PiLayout {
  std::vector<RowSpec> rows;  // one per (x, s), x-major
  std::vector<YRange> feas;
  int params = 0;
};

PiLayout pi_layout(const SystemSpec& spec) {
  PiLayout lay;
  const int nx = spec.demand.size(), ns = spec.battery.size();
  lay.rows.reserve(nx * ns);
  for (int x = 0; x < nx; ++x)
    for (int s = 0; s < ns; ++s) {
      const YRange r = feasible_outputs(spec, s - x);
      lay.rows.push_back({lay.params, r.size()});
      lay.feas.push_back(r);
      lay.params += r.size();
    }
  return lay;
}

ActionA action_from_params(const SystemSpec& spec, const PiLayout& lay,
                           const VectorXd& p) {
  ActionA a(spec.demand.size(), spec.battery.size(), spec.consumption.size());
  for (std::size_t i = 0; i < lay.rows.size(); ++i) {
    const int x = static_cast<int>(i) / a.ns, s = static_cast<int>(i) % a.ns;
    for (int j = 0; j < lay.rows[i].n; ++j)
      a.at(lay.feas[i].lo + j, x, s) = p[lay.rows[i].offset + j];
  }
  return a;
}

VectorXd params_from_action(const PiLayout& lay, const ActionA& a) {
  VectorXd p(lay.params);
  for (std::size_t i = 0; i < lay.rows.size(); ++i) {
    const int x = static_cast<int>(i) / a.ns, s = static_cast<int>(i) % a.ns;
    for (int j = 0; j < lay.rows[i].n; ++j)
      p[lay.rows[i].offset + j] = a(lay.feas[i].lo + j, x, s);
  }
  return p;
}

struct XiLayout {
  std::vector<RowSpec> rows;  // one per w, in alphabet order
  std::vector<YRange> feas;
  int params = 0;
};

XiLayout xi_layout(const SystemSpec& spec) {
  XiLayout lay;
  const Alphabet wa = spec.difference();
  for (int wi = 0; wi < wa.size(); ++wi) {
    const YRange r = feasible_outputs(spec, wa.value(wi));
    lay.rows.push_back({lay.params, r.size()});
    lay.feas.push_back(r);
    lay.params += r.size();
  }
  return lay;
}

ActionB action_from_params(const SystemSpec& spec, const XiLayout& lay,
                           const VectorXd& p) {
  const Alphabet wa = spec.difference();
  ActionB b(wa, spec.consumption.size());
  for (int wi = 0; wi < wa.size(); ++wi)
    for (int j = 0; j < lay.rows[wi].n; ++j)
      b.t(wi, lay.feas[wi].lo + j) = p[lay.rows[wi].offset + j];
  return b;
}

VectorXd params_from_action(const XiLayout& lay, const ActionB& b) {
  VectorXd p(lay.params);
  for (int wi = 0; wi < b.w.size(); ++wi)
    for (int j = 0; j < lay.rows[wi].n; ++j)
      p[lay.rows[wi].offset + j] = b.t(wi, lay.feas[wi].lo + j);
  return p;
}

}  // namespace

BackupResultA bellman_backup(const SystemSpec& spec, const Belief& pi,
                             const ValueFunction* v_next,
                             const InnerOptions& opt,
                             const ActionA* warm_start) {
  const PiLayout lay = pi_layout(spec);
  const int nx = spec.demand.size(), ns = spec.battery.size();
  const int ny = spec.consumption.size();
  const TransitionMatrix Q = spec.kernel();

  ObjectiveFn objective = [&](const VectorXd& params,
                              VectorXd* grad) -> double {
    const ActionA a = action_from_params(spec, lay, params);
    const VectorXd py = predicted_output(pi, a);
    if (grad) grad->setZero(lay.params);

    double total = 0.0;
    // per-step mutual information
    for (std::size_t i = 0; i < lay.rows.size(); ++i) {
      const int x = static_cast<int>(i) / ns, s = static_cast<int>(i) % ns;
      const double mass = pi.joint(x, s);
      if (mass == 0.0) continue;
      for (int j = 0; j < lay.rows[i].n; ++j) {
        const int y = lay.feas[i].lo + j;
        const double p = a(y, x, s);
        if (p > 0.0 && py[y] > 0.0) total += mass * p * std::log2(p / py[y]);
        if (grad) {
          if (py[y] > 0.0)
            (*grad)[lay.rows[i].offset + j] +=
                mass * std::log2(std::max(p, kLogFloor) / py[y]);
          else if (mass > 0.0)
            (*grad)[lay.rows[i].offset + j] += -mass * std::log2(mass);
        }
      }
    }
    if (!v_next) return total;

    // expected continuation through the joint filter
    for (int y = 0; y < ny; ++y) {
      if (py[y] > 1e-300) {
        const Belief next = filter_joint(pi, y, a, Q);
        const VectorXd flat = flatten(next);
        VectorXd vgrad;
        const double v = v_next->grid->interpolate(v_next->values, flat,
                                                   grad ? &vgrad : nullptr);
        total += py[y] * v;
        if (grad) {
          const double gdot = vgrad.dot(flat);
          for (std::size_t i = 0; i < lay.rows.size(); ++i) {
            const int x = static_cast<int>(i) / ns,
                      s = static_cast<int>(i) % ns;
            if (!lay.feas[i].contains(y)) continue;
            const double mass = pi.joint(x, s);
            if (mass == 0.0) continue;
            const int sp = s + y - x;
            double acc = v - gdot;
            for (int xp = 0; xp < nx; ++xp)
              acc += vgrad[xp * ns + sp] * Q.rows(x, xp);
            (*grad)[lay.rows[i].offset + (y - lay.feas[i].lo)] += mass * acc;
          }
        }
      } else if (grad) {
        // one-sided derivative of a vanishing branch
        for (std::size_t i = 0; i < lay.rows.size(); ++i) {
          const int x = static_cast<int>(i) / ns, s = static_cast<int>(i) % ns;
          if (!lay.feas[i].contains(y)) continue;
          const double mass = pi.joint(x, s);
          if (mass == 0.0) continue;
          MatrixXd limit = MatrixXd::Zero(nx, ns);
          for (int xp = 0; xp < nx; ++xp) limit(xp, s + y - x) = Q.rows(x, xp);
          const double v = v_next->grid->interpolate(
              v_next->values, flatten(Belief(limit)), nullptr);
          (*grad)[lay.rows[i].offset + (y - lay.feas[i].lo)] += mass * v;
        }
      }
    }
    return total;
  };

  VectorXd warm;
  const VectorXd* warm_ptr = nullptr;
  if (warm_start) {
    warm = params_from_action(lay, *warm_start);
    warm_ptr = &warm;
  }
  const auto starts =
      make_starts(lay.rows, lay.params, warm_ptr, opt.restarts, opt.seed);
  const PgdResult r = pgd_multistart(objective, lay.rows, starts, opt);

  BackupResultA out;
  out.value = r.value;
  out.pg_norm = r.pg_norm;
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.action = action_from_params(spec, lay, r.x);
  return out;
}

BackupResultB bellman_backup_xi(const SystemSpec& spec, const XiBelief& xi,
                                const ValueFunction* v_next,
                                const InnerOptions& opt,
                                const ActionB* warm_start) {
  if (!spec.iid)
    throw SpecError("difference-coordinate backup requires i.i.d. demand");
  const XiLayout lay = xi_layout(spec);
  const Alphabet wa = spec.difference();
  const int nw = wa.size(), ny = spec.consumption.size();
  const Pmf& px = spec.demand_marginal;
  const int mx = spec.mx();

  ObjectiveFn objective = [&](const VectorXd& params,
                              VectorXd* grad) -> double {
    const ActionB b = action_from_params(spec, lay, params);
    const VectorXd py = predicted_output(xi, b);
    if (grad) grad->setZero(lay.params);

    double total = 0.0;
    for (int wi = 0; wi < nw; ++wi) {
      const double mass = xi.xi[wi];
      if (mass == 0.0 && !grad) continue;
      for (int j = 0; j < lay.rows[wi].n; ++j) {
        const int y = lay.feas[wi].lo + j;
        const double p = b.t(wi, y);
        if (mass > 0.0 && p > 0.0 && py[y] > 0.0)
          total += mass * p * std::log2(p / py[y]);
        if (grad && mass > 0.0) {
          if (py[y] > 0.0)
            (*grad)[lay.rows[wi].offset + j] +=
                mass * std::log2(std::max(p, kLogFloor) / py[y]);
          else
            (*grad)[lay.rows[wi].offset + j] += -mass * std::log2(mass);
        }
      }
    }
    if (!v_next) return total;

    for (int y = 0; y < ny; ++y) {
      if (py[y] > 1e-300) {
        const XiBelief next = xi_update(xi, y, b, px);
        VectorXd vgrad;
        const double v = v_next->grid->interpolate(v_next->values, next.xi,
                                                   grad ? &vgrad : nullptr);
        total += py[y] * v;
        if (grad) {
          const double gdot = vgrad.dot(next.xi);
          for (int wi = 0; wi < nw; ++wi) {
            if (!lay.feas[wi].contains(y)) continue;
            const double mass = xi.xi[wi];
            if (mass == 0.0) continue;
            double acc = v - gdot;
            const int w = wa.value(wi);
            for (int x = 0; x <= mx; ++x)
              acc += vgrad[wa.index(y + w - x)] * px.probs[x];
            (*grad)[lay.rows[wi].offset + (y - lay.feas[wi].lo)] += mass * acc;
          }
        }
      } else if (grad) {
        for (int wi = 0; wi < nw; ++wi) {
          if (!lay.feas[wi].contains(y)) continue;
          const double mass = xi.xi[wi];
          if (mass == 0.0) continue;
          VectorXd limit = VectorXd::Zero(nw);
          const int w = wa.value(wi);
          for (int x = 0; x <= mx; ++x)
            limit[wa.index(y + w - x)] += px.probs[x];
          const double v =
              v_next->grid->interpolate(v_next->values, limit, nullptr);
          (*grad)[lay.rows[wi].offset + (y - lay.feas[wi].lo)] += mass * v;
        }
      }
    }
    return total;
  };

  VectorXd warm;
  const VectorXd* warm_ptr = nullptr;
  if (warm_start) {
    warm = params_from_action(lay, *warm_start);
    warm_ptr = &warm;
  }
  const auto starts =
      make_starts(lay.rows, lay.params, warm_ptr, opt.restarts, opt.seed);
  const PgdResult r = pgd_multistart(objective, lay.rows, starts, opt);

  BackupResultB out;
  out.value = r.value;
  out.pg_norm = r.pg_norm;
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.action = action_from_params(spec, lay, r.x);
  return out;
}

// ======================================================================
// Solvers
// ======================================================================

FiniteHorizonSolution solve_finite_horizon(const SystemSpec& spec, int T,
                                           int resolution,
                                           const InnerOptions& inner) {
  spec.validate();
  if (T < 1) throw SpecError("horizon must be positive");
  if (resolution < 2) throw SpecError("grid resolution must be at least 2");
  const int nx = spec.demand.size(), ns = spec.battery.size();
  auto grid = std::make_shared<const SimplexGrid>(
      SimplexGrid::make(nx * ns, resolution));
  const long n = grid->size();

  FiniteHorizonSolution sol;
  sol.stages.resize(T + 1);
  sol.stages[T] = ValueFunction{grid, VectorXd::Zero(n), {}};

  for (int t = T; t >= 1; --t) {
    ValueFunction& next = sol.stages[t];
    ValueFunction stage{grid, VectorXd::Zero(n),
                        std::vector<MatrixXd>(static_cast<std::size_t>(n))};
    const bool terminal = (t == T);
    std::vector<double> pg(n, 0.0);
    std::vector<char> conv(n, 1);
    parallel_for(static_cast<int>(n), [&](int i) {
      const Belief pi = unflatten(grid->point(i), nx, ns);
      InnerOptions o = inner;
      o.seed = derive_seed(inner.seed, static_cast<std::uint64_t>(i) * 31 + t);
      if (t < T) o.restarts = std::min(o.restarts, 1);  // warm starts carry
      const ActionA* warm = nullptr;
      ActionA warm_action;
      if (!next.actions.empty()) {
        warm_action.nx = nx;
        warm_action.ns = ns;
        warm_action.ny = spec.consumption.size();
        warm_action.t = next.actions[i];
        warm = &warm_action;
      }
      const BackupResultA r = bellman_backup(
          spec, pi, terminal ? nullptr : &next, o, warm);
      stage.values[i] = r.value;
      stage.actions[i] = r.action.t;
      pg[i] = r.pg_norm;
      conv[i] = r.converged ? 1 : 0;
    });
    for (long i = 0; i < n; ++i) {
      sol.worst_inner_pg = std::max(sol.worst_inner_pg, pg[i]);
      if (!conv[i]) sol.inner_all_converged = false;
    }
    sol.stages[t - 1] = std::move(stage);
  }

  const Belief pi1 = Belief::product(spec.initial_demand, spec.initial_battery);
  // rate from a direct backup at the true initial belief (more accurate than
  // interpolating V_1)
  const BackupResultA first = bellman_backup(
      spec, pi1, T >= 2 ? &sol.stages[1] : nullptr, inner, nullptr);
  sol.rate = first.value / T;

  auto stages = std::make_shared<std::vector<ValueFunction>>(sol.stages);
  const SystemSpec spec_copy = spec;
  sol.policy = BeliefPolicy{[stages, spec_copy, T](const Belief& pi,
                                                   int t) -> ActionA {
    const int stage = std::clamp(t, 1, T) - 1;
    const ValueFunction& vf = (*stages)[stage];
    const SimplexGrid::Cell cell = vf.grid->locate(flatten(pi));
    ActionA a(spec_copy.demand.size(), spec_copy.battery.size(),
              spec_copy.consumption.size());
    for (std::size_t i = 0; i < cell.indices.size(); ++i)
      a.t += cell.weights[i] * vf.actions[cell.indices[i]];
    return a;
  }};
  return sol;
}

InfiniteHorizonSolution solve_iid_infinite(const SystemSpec& spec,
                                           int resolution,
                                           const RviOptions& opt) {
  spec.validate();
  if (!spec.iid)
    throw SpecError("infinite-horizon ξ-space solver requires i.i.d. demand");
  const Alphabet wa = spec.difference();
  auto grid = std::make_shared<const SimplexGrid>(
      SimplexGrid::make(wa.size(), resolution));
  const long n = grid->size();

  // Anchor the relative value at the grid point closest to the single-letter
  // optimum; warm-start sweeps from the previous minimizers.
  const SingleLetterSolution sl = minimize_leakage(spec);
  const long anchor = grid->nearest(sl.xi_star.xi);

  InfiniteHorizonSolution sol;
  sol.ergodicity_warning = !spec.kernel().is_ergodic();
  VectorXd v = VectorXd::Zero(n);
  std::vector<MatrixXd> warm_actions(n);
  VectorXd tv(n);

  for (long sweep = 0; sweep < opt.max_iters; ++sweep) {
    ValueFunction vf{grid, v, {}};
    std::vector<MatrixXd> new_actions(n);
    parallel_for(static_cast<int>(n), [&](int i) {
      const XiBelief xi(wa, grid->point(i));
      InnerOptions o = opt.inner;
      o.seed = derive_seed(opt.inner.seed,
                           static_cast<std::uint64_t>(i) * 131 + sweep);
      if (sweep > 1) o.restarts = 0;  // warm starts carry the search
      ActionB warm;
      const ActionB* warm_ptr = nullptr;
      if (warm_actions[i].size() > 0) {
        warm.w = wa;
        warm.t = warm_actions[i];
        warm_ptr = &warm;
      }
      const BackupResultB r = bellman_backup_xi(spec, xi, &vf, o, warm_ptr);
      tv[i] = r.value;
      new_actions[i] = r.action.t;
    });
    warm_actions = std::move(new_actions);
    const VectorXd diff = tv - v;
    const double span = diff.maxCoeff() - diff.minCoeff();
    sol.J = 0.5 * (diff.maxCoeff() + diff.minCoeff());
    sol.span = span;
    sol.iterations = sweep + 1;
    v = tv.array() - tv[anchor];
    if (span < opt.tol) {
      sol.converged = true;
      break;
    }
  }

  sol.v = ValueFunction{grid, v, std::move(warm_actions)};
  auto vf_shared = std::make_shared<ValueFunction>(sol.v);
  const SystemSpec spec_copy = spec;
  sol.policy = DifferencePolicy{
      [vf_shared, spec_copy, wa](const XiBelief& xi, int /*t*/) -> ActionB {
        const SimplexGrid::Cell cell = vf_shared->grid->locate(xi.xi);
        ActionB b(wa, spec_copy.consumption.size());
        for (std::size_t i = 0; i < cell.indices.size(); ++i)
          b.t += cell.weights[i] * vf_shared->actions[cell.indices[i]];
        return b;
      }};
  return sol;
}

// ======================================================================
// Certificates
// ======================================================================

ConcavityReport verify_concavity(const ValueFunction& v, int trials,
                                 std::uint64_t seed,
                                 std::optional<double> tolerance) {
  Rng rng(seed);
  ConcavityReport rep;
  rep.trials = trials;
  const int dim = v.grid->dim();
  const int k = v.grid->resolution();
  const double range =
      v.values.size() ? v.values.maxCoeff() - v.values.minCoeff() : 0.0;
  // piecewise-linear interpolation of a concave function can violate chords
  // by at most O(curvature / k^2); scale with the observed value range
  rep.tolerance = tolerance.value_or((1.0 + range) * 8.0 / double(k) / k);
  for (int i = 0; i < trials; ++i) {
    const VectorXd p1 = rng.simplex_point(dim);
    const VectorXd p2 = rng.simplex_point(dim);
    const double lam = rng.uniform(0.05, 0.95);
    const VectorXd mix = lam * p1 + (1.0 - lam) * p2;
    const double chord = lam * v.grid->interpolate(v.values, p1) +
                         (1.0 - lam) * v.grid->interpolate(v.values, p2);
    const double gap = v.grid->interpolate(v.values, mix) - chord;
    if (gap < -rep.tolerance) {
      ++rep.violations;
      rep.worst_violation = std::min(rep.worst_violation, gap);
    }
  }
  return rep;
}

ConverseReport verify_dp_converse(const SystemSpec& spec,
                                  const SingleLetterSolution& sol, int trials,
                                  std::uint64_t seed) {
  spec.validate();
  if (!spec.iid) throw SpecError("converse certificate requires i.i.d. demand");
  const Alphabet wa = spec.difference();
  const XiLayout lay = xi_layout(spec);
  Rng rng(seed);

  auto slack_of = [&](const XiBelief& xi, const ActionB& b) {
    double value = iid_single_letter_rate(b, xi);
    const VectorXd py = predicted_output(xi, b);
    for (int y = 0; y < py.size(); ++y) {
      if (py[y] <= 0.0) continue;
      value += py[y] * entropy_bits(xi_update(xi, y, b, spec.demand_marginal).xi);
    }
    return value - entropy_bits(xi.xi) - sol.J_star_bits;
  };

  ConverseReport rep;
  rep.trials = trials;
  rep.min_slack = std::numeric_limits<double>::infinity();
  for (int i = 0; i < trials; ++i) {
    const XiBelief xi(wa, rng.simplex_point(wa.size()));
    ActionB b(wa, spec.consumption.size());
    for (int wi = 0; wi < wa.size(); ++wi) {
      const VectorXd row = rng.simplex_point(lay.rows[wi].n);
      for (int j = 0; j < lay.rows[wi].n; ++j)
        b.t(wi, lay.feas[wi].lo + j) = row[j];
    }
    const double s = slack_of(xi, b);
    rep.min_slack = std::min(rep.min_slack, s);
    if (s < -1e-9) ++rep.violations;
  }
  rep.slack_at_optimum = slack_of(sol.xi_star, sol.b_star);
  return rep;
}

}  // namespace bp
