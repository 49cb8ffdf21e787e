#pragma once

// Beam power by successive convex approximation. Each iteration replaces
// log2(1 + g) with the tight bound mu*log2(g) + upsilon at the current SINR,
// switches to log-power variables, and solves the resulting concave problem
// one slot at a time with a log-barrier Newton method. The other slots'
// rates enter a slot's problem as fixed offsets, so every slot solve is a
// minorise-maximise step on the full objective.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "leobeam/netmodel.hpp"

namespace leobeam {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScaCoefficients {
  double mu = 0.0;
  double upsilon = 0.0;
};

inline ScaCoefficients compute_coefficients(double gamma_tilde) {
  if (!(gamma_tilde > 0.0) || !std::isfinite(gamma_tilde))
    throw std::domain_error("SINR expansion point must be positive and finite");
  ScaCoefficients c;
  c.mu = gamma_tilde / (1.0 + gamma_tilde);
  c.upsilon = std::log2(1.0 + gamma_tilde) - c.mu * std::log2(gamma_tilde);
  return c;
}

inline double log_bound(const ScaCoefficients& c, double gamma) {
  return c.mu * std::log2(gamma) + c.upsilon;
}

struct ScaOptions {
  double convergence_threshold = 1e-3;  // on the objective, utility units
  int max_iterations = 50;
  double barrier_t0 = 1.0;
  double barrier_factor = 8.0;
  double duality_gap = 1e-10;  // relative to the starting objective
  double newton_tol = 1e-12;   // half squared Newton decrement
  int max_newton_steps = 200;  // per centring step
  double start_shrink = 1e-4;  // start strictly inside: p * (1 - shrink)
};

// ------------------------------------------------------- slot subproblem

/// Concave problem of one slot in x = ln p over the beams that serve at
/// least one link. Objective: sum over users of U(o_u + R~_u(x)), o_u being
/// the user's rate in the other slots.
struct SlotProblem {
  struct Link {
    int user = 0;       // local user index
    int serving = 0;    // local beam index
    double bk = 0.0;    // subchannel bandwidth
    ScaCoefficients coef;
    double log_gain = 0.0;  // ln(h / K)
    std::vector<std::pair<int, double>> interferers;  // (local beam, occ * h / K)
    double fixed = 0.0;  // interference from beams outside the problem
  };

  static constexpr double kFloorRatio = 1e-6;  // lowest power, relative to the cap

  int t = 0;
  double alpha = 0.5;
  double noise = 1.0;
  std::vector<int> beams;         // global beam ids
  std::vector<double> log_cap;    // ln P_q^max
  std::vector<double> log_floor;  // ln(kFloorRatio * P_q^max)
  std::vector<int> sat;           // local satellite index per beam
  std::vector<double> sat_budget; // P_m^max minus idle beams' power
  std::vector<int> users;         // global user ids
  std::vector<double> offset;     // per local user, bit/s
  std::vector<Link> links;

  int dim() const { return static_cast<int>(beams.size()); }

  double link_log_sinr(const Link& l, const Eigen::VectorXd& x) const {
    double d = noise + l.fixed;
    for (const auto& [j, a] : l.interferers) d += a * std::exp(x[j]);
    return l.log_gain + x[l.serving] - std::log(d);
  }
  // lower bound on the link rate, bit/s
  double link_rate(const Link& l, const Eigen::VectorXd& x) const {
    return l.bk * (l.coef.mu * link_log_sinr(l, x) / std::log(2.0) + l.coef.upsilon);
  }

  std::vector<double> user_rates(const Eigen::VectorXd& x) const {
    std::vector<double> r(users.size(), 0.0);
    for (const auto& l : links) r[l.user] += link_rate(l, x);
    return r;
  }
  // offset plus bound: the argument of U
  std::vector<double> user_totals(const Eigen::VectorXd& x) const {
    auto r = user_rates(x);
    for (std::size_t i = 0; i < r.size() && i < offset.size(); ++i) r[i] += offset[i];
    return r;
  }

  // U on the bound; smooth (no floor), so the log case needs o + R~ > 0
  static double u(double r, double alpha) {
    if (alpha == 0.0) return r;
    if (alpha == 1.0) return std::log(r);
    return std::pow(r, 1.0 - alpha) / (1.0 - alpha);
  }
  static double du(double r, double alpha) {
    if (alpha == 0.0) return 1.0;
    if (alpha == 1.0) return 1.0 / r;
    return std::pow(r, -alpha);
  }
  static double d2u(double r, double alpha) {
    if (alpha == 0.0) return 0.0;
    if (alpha == 1.0) return -1.0 / (r * r);
    return -alpha * std::pow(r, -alpha - 1.0);
  }

  double value(const Eigen::VectorXd& x) const {
    double s = 0.0;
    for (double r : user_totals(x)) s += u(r, alpha);
    return s;
  }

  /// Per-user rate gradients and Hessians.
  void user_derivatives(const Eigen::VectorXd& x, std::vector<Eigen::VectorXd>& g,
                        std::vector<Eigen::MatrixXd>& h) const {
    const int d = dim();
    g.assign(users.size(), Eigen::VectorXd::Zero(d));
    h.assign(users.size(), Eigen::MatrixXd::Zero(d, d));
    Eigen::VectorXd w(d);
    for (const auto& l : links) {
      double den = noise + l.fixed;
      w.setZero();
      for (const auto& [j, a] : l.interferers) {
        const double v = a * std::exp(x[j]);
        w[j] += v;
        den += v;
      }
      w /= den;
      const double c = l.bk * l.coef.mu / std::log(2.0);
      g[l.user] -= c * w;
      g[l.user][l.serving] += c;
      h[l.user] -= c * (Eigen::MatrixXd(w.asDiagonal()) - w * w.transpose());
    }
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    std::vector<Eigen::VectorXd> g;
    std::vector<Eigen::MatrixXd> h;
    user_derivatives(x, g, h);
    const auto r = user_totals(x);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim());
    for (std::size_t i = 0; i < r.size(); ++i) out += du(r[i], alpha) * g[i];
    return out;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const {
    std::vector<Eigen::VectorXd> g;
    std::vector<Eigen::MatrixXd> h;
    user_derivatives(x, g, h);
    const auto r = user_totals(x);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim(), dim());
    for (std::size_t i = 0; i < r.size(); ++i)
      out += d2u(r[i], alpha) * g[i] * g[i].transpose() + du(r[i], alpha) * h[i];
    return out;
  }

  bool strictly_feasible(const Eigen::VectorXd& x) const {
    for (int i = 0; i < dim(); ++i)
      if (!(x[i] < log_cap[i] && x[i] > log_floor[i])) return false;
    std::vector<double> used(sat_budget.size(), 0.0);
    for (int i = 0; i < dim(); ++i) used[sat[i]] += std::exp(x[i]);
    for (std::size_t m = 0; m < used.size(); ++m)
      if (!(used[m] < sat_budget[m])) return false;
    if (alpha > 0.0)
      for (double r : user_totals(x))
        if (!(r > 0.0)) return false;
    return true;
  }
};

/// Builds the slot problem with SINR expansion points taken from `alloc`.
/// `rt` holds the current rates; computed here when absent.
inline SlotProblem build_slot_problem(const Network& net, const Allocation& alloc, int t,
                                      const RateTable* rt = nullptr) {
  RateTable own;
  if (!rt) {
    own = rate_table(net, alloc);
    rt = &own;
  }
  SlotProblem p;
  p.t = t;
  p.alpha = net.radio.fairness_alpha;
  p.noise = net.noise();
  SlotEval ev;
  evaluate_slot(net, alloc, t, ev);

  std::vector<int> local(alloc.Q, -1), user_local(alloc.N, -1);
  for (int n = 0; n < alloc.N; ++n)
    for (int k = 0; k < alloc.K; ++k) {
      if (!served_link(alloc, n, k, t) || !(ev.sinr[n * alloc.K + k] > 0.0)) continue;
      const int q = alloc.user_beam(n, t);
      if (local[q] < 0) {
        local[q] = static_cast<int>(p.beams.size());
        p.beams.push_back(q);
      }
      if (user_local[n] < 0) {
        user_local[n] = static_cast<int>(p.users.size());
        p.users.push_back(n);
        p.offset.push_back(std::max(0.0, rt->total[n] - rt->at(n, t)));
      }
    }
  // satellites and their budgets
  std::vector<int> sat_local(net.satellite_count, -1);
  for (int q : p.beams) {
    const int m = net.beam_satellite[q];
    if (sat_local[m] < 0) {
      sat_local[m] = static_cast<int>(p.sat_budget.size());
      p.sat_budget.push_back(net.radio.satellite_power_cap);
    }
    p.sat.push_back(sat_local[m]);
    p.log_cap.push_back(std::log(net.radio.beam_power_cap));
    p.log_floor.push_back(std::log(SlotProblem::kFloorRatio * net.radio.beam_power_cap));
  }
  for (int q = 0; q < alloc.Q; ++q) {
    const int m = net.beam_satellite[q];
    if (local[q] < 0 && sat_local[m] >= 0) p.sat_budget[sat_local[m]] -= alloc.beam_power(q, t);
  }

  for (int n = 0; n < alloc.N; ++n)
    for (int k = 0; k < alloc.K; ++k) {
      if (!served_link(alloc, n, k, t)) continue;
      const double g = ev.sinr[n * alloc.K + k];
      if (!(g > 0.0)) continue;
      const int q = alloc.user_beam(n, t);
      SlotProblem::Link l;
      l.user = user_local[n];
      l.serving = local[q];
      l.bk = net.radio.subchannel_bandwidth();
      l.coef = compute_coefficients(g);
      l.log_gain = std::log(net.h(q, alloc.beam_center(q, t), n, t) / alloc.K);
      for (int q2 = 0; q2 < alloc.Q; ++q2) {
        const int o = ev.occ[static_cast<std::size_t>(q2) * alloc.K + k];
        if (q2 == q || o == 0 || alloc.beam_center(q2, t) < 0) continue;
        const double a = o * net.h(q2, alloc.beam_center(q2, t), n, t) / alloc.K;
        if (local[q2] >= 0)
          l.interferers.push_back({local[q2], a});
        else
          l.fixed += a * alloc.beam_power(q2, t);
      }
      p.links.push_back(std::move(l));
    }
  return p;
}

// ---------------------------------------------------------- barrier Newton

struct SubproblemResult {
  Eigen::VectorXd x;
  int newton_steps = 0;
  int centring_steps = 0;
};

/// Maximises the slot objective from a strictly feasible start.
inline SubproblemResult solve_concave_subproblem(const SlotProblem& p, Eigen::VectorXd x,
                                                 const ScaOptions& opt = {}) {
  SubproblemResult res;
  const int d = p.dim();
  if (d == 0) {
    res.x = x;
    return res;
  }
  if (!p.strictly_feasible(x)) throw SolverError("power solver: start point is not strictly feasible");
  const double f0 = p.value(x);
  const double scale = std::fabs(f0) > 0.0 ? 1.0 / std::fabs(f0) : 1.0;
  const int barrier_terms =
      2 * d + static_cast<int>(p.sat_budget.size()) + (p.alpha > 0.0 ? static_cast<int>(p.users.size()) : 0);

  // g(x) = -t * scale * f(x) + barrier(x), minimised
  auto objective = [&](const Eigen::VectorXd& y, double tb) {
    double b = 0.0;
    for (int i = 0; i < d; ++i) b -= std::log(p.log_cap[i] - y[i]) + std::log(y[i] - p.log_floor[i]);
    std::vector<double> used(p.sat_budget.size(), 0.0);
    for (int i = 0; i < d; ++i) used[p.sat[i]] += std::exp(y[i]);
    for (std::size_t m = 0; m < used.size(); ++m) b -= std::log(p.sat_budget[m] - used[m]);
    if (p.alpha > 0.0)
      for (double r : p.user_totals(y)) b -= std::log(r);
    return -tb * scale * p.value(y) + b;
  };

  double tb = opt.barrier_t0;
  for (;;) {
    ++res.centring_steps;
    int steps = 0;
    for (;; ++steps) {
      if (steps >= opt.max_newton_steps) {
        std::ostringstream os;
        os << "power solver: no convergence in slot " << p.t << " after " << steps
           << " Newton steps (barrier weight " << tb << ")";
        throw SolverError(os.str());
      }
      std::vector<Eigen::VectorXd> ug;
      std::vector<Eigen::MatrixXd> uh;
      p.user_derivatives(x, ug, uh);
      const auto r = p.user_totals(x);
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(d);
      Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(d, d);
      for (std::size_t i = 0; i < r.size(); ++i) {
        grad -= tb * scale * SlotProblem::du(r[i], p.alpha) * ug[i];
        hess -= tb * scale *
                (SlotProblem::d2u(r[i], p.alpha) * ug[i] * ug[i].transpose() +
                 SlotProblem::du(r[i], p.alpha) * uh[i]);
        if (p.alpha > 0.0) {
          grad -= ug[i] / r[i];
          hess += ug[i] * ug[i].transpose() / (r[i] * r[i]) - uh[i] / r[i];
        }
      }
      for (int i = 0; i < d; ++i) {
        const double s = p.log_cap[i] - x[i], f = x[i] - p.log_floor[i];
        grad[i] += 1.0 / s - 1.0 / f;
        hess(i, i) += 1.0 / (s * s) + 1.0 / (f * f);
      }
      for (std::size_t m = 0; m < p.sat_budget.size(); ++m) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < d; ++i)
          if (p.sat[i] == static_cast<int>(m)) e[i] = std::exp(x[i]);
        const double s = p.sat_budget[m] - e.sum();
        grad += e / s;
        hess += Eigen::MatrixXd(e.asDiagonal()) / s + e * e.transpose() / (s * s);
      }
      Eigen::LLT<Eigen::MatrixXd> llt(hess);
      if (llt.info() != Eigen::Success) {
        // numerically indefinite: nudge the diagonal
        const double shift = 1e-12 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
        llt.compute(hess + shift * Eigen::MatrixXd::Identity(d, d));
        if (llt.info() != Eigen::Success) throw SolverError("power solver: Hessian not positive definite");
      }
      const Eigen::VectorXd dx = llt.solve(-grad);
      const double dec = -grad.dot(dx);
      if (dec / 2.0 <= opt.newton_tol) break;
      // at large barrier weights the step can fall below what x can resolve
      if (dx.cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + x.cwiseAbs().maxCoeff())) break;
      double step = 1.0;
      const double g0 = objective(x, tb);
      Eigen::VectorXd y;
      for (;;) {
        y = x + step * dx;
        if (p.strictly_feasible(y) && objective(y, tb) <= g0 - 0.25 * step * dec) break;
        step *= 0.5;
        if (step < 1e-12) break;
      }
      // no further progress at this precision
      if (step < 1e-12 || y == x) break;
      const double g1 = objective(y, tb);
      x = y;
      if (g0 - g1 <= 1e-13 * std::max(1.0, std::fabs(g0))) break;
      ++res.newton_steps;
    }
    if (barrier_terms / tb < opt.duality_gap) break;
    tb *= opt.barrier_factor;
  }
  res.x = x;
  return res;
}

// ------------------------------------------------------------ SCA driver

struct ScaResult {
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective, entry 0 at the start
  int guard_triggers = 0;     // slot solves undone because the objective fell
  int newton_steps = 0;
};

/// Runs SCA on the powers of `alloc` in place; centres, association and
/// subchannels stay fixed.
inline ScaResult run_sca(const Network& net, Allocation& alloc, const ScaOptions& opt = {}) {
  ScaResult res;
  RateTable rt = rate_table(net, alloc);
  double f = objective_from_rates(net.radio, rt);
  res.trace.push_back(f);
  SlotEval ev;
  for (int r = 1; r <= opt.max_iterations; ++r) {
    res.iterations = r;
    const double start = f;
    for (int t = 0; t < alloc.T; ++t) {
      const auto prob = build_slot_problem(net, alloc, t, &rt);
      if (prob.dim() == 0) continue;
      Eigen::VectorXd x(prob.dim());
      for (int i = 0; i < prob.dim(); ++i)
        x[i] = std::max(std::log(alloc.beam_power(prob.beams[i], t) * (1.0 - opt.start_shrink)),
                        prob.log_floor[i] + opt.start_shrink);
      const auto sol = solve_concave_subproblem(prob, x, opt);
      res.newton_steps += sol.newton_steps;
      std::vector<double> old(prob.dim());
      for (int i = 0; i < prob.dim(); ++i) {
        old[i] = alloc.beam_power(prob.beams[i], t);
        alloc.beam_power(prob.beams[i], t) = std::min(std::exp(sol.x[i]), net.radio.beam_power_cap);
      }
      evaluate_slot(net, alloc, t, ev);
      RateTable next = rt;
      for (int n = 0; n < alloc.N; ++n) {
        const std::size_t k = static_cast<std::size_t>(t) * alloc.N + n;
        next.total[n] += ev.rate[n] - rt.slot_rate[k];
        next.slot_rate[k] = ev.rate[n];
      }
      // re-summed so no rounding residue of the difference survives
      for (int n = 0; n < alloc.N; ++n) {
        double s = 0.0;
        for (int u = 0; u < alloc.T; ++u) s += next.at(n, u);
        next.total[n] = s;
      }
      const double nf = objective_from_rates(net.radio, next);
      if (nf < f) {
        for (int i = 0; i < prob.dim(); ++i) alloc.beam_power(prob.beams[i], t) = old[i];
        ++res.guard_triggers;
      } else {
        rt = std::move(next);
        f = nf;
      }
    }
    res.trace.push_back(f);
    if (f - start <= opt.convergence_threshold) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace leobeam
