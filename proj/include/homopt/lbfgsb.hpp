/**
 * @file   lbfgsb.hpp
 *
 * @brief  Limited-memory BFGS for box constraints (L-BFGS-B).
 *
 * Each iteration
 *   1. finds the generalized Cauchy point along the projected steepest
 *      descent path of the compact limited-memory quadratic model
 *      B = theta I - W M W^T,
 *   2. minimises the model over the variables that are free at that point
 *      (direct primal method), projecting the result back onto the box,
 *   3. backtracks along the segment to the new point until the Armijo
 *      condition holds.
 * Curvature pairs with s^T y <= eps y^T y are skipped; with an empty memory
 * the model is a scaled identity and the step is a projected gradient step.
 */
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace homopt {

struct LbfgsbSettings {
  int memory{10};
  double pg_tol{1e-5};
  double f_rel_tol{1e-12};
  int max_iter{2000};
  int max_backtracks{30};
  int rel_window{5};
};

enum class LbfgsbStatus {
  converged_gradient,
  converged_relative_decrease,
  max_iterations,
  line_search_failure,
};

inline const char* to_string(LbfgsbStatus s) {
  switch (s) {
    case LbfgsbStatus::converged_gradient: return "converged_projected_gradient";
    case LbfgsbStatus::converged_relative_decrease: return "converged_relative_decrease";
    case LbfgsbStatus::max_iterations: return "max_iterations";
    case LbfgsbStatus::line_search_failure: return "line_search_failure";
  }
  return "unknown";
}

inline bool converged(LbfgsbStatus s) {
  return s == LbfgsbStatus::converged_gradient || s == LbfgsbStatus::converged_relative_decrease;
}

struct LbfgsbIteration {
  int iteration{0};
  double f{0.0};
  double pg_norm{0.0};
  int evaluations{0};
};

struct LbfgsbResult {
  Eigen::VectorXd x;
  double f{0.0};
  double pg_norm{0.0};
  int iterations{0};
  int evaluations{0};
  LbfgsbStatus status{LbfgsbStatus::max_iterations};
};

/// Infinity norm of P(x - g) - x.
inline double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                      const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = std::clamp(x(i) - g(i), lo(i), hi(i)) - x(i);
    m = std::max(m, std::abs(step));
  }
  return m;
}

namespace detail {

struct CompactModel {
  double theta{1.0};
  Eigen::MatrixXd W;  // n x 2k, [Y, theta S]
  Eigen::MatrixXd M;  // 2k x 2k
};

inline CompactModel compact_model(const std::deque<Eigen::VectorXd>& s, const std::deque<Eigen::VectorXd>& y,
                                  double theta, Eigen::Index n) {
  const auto k = static_cast<Eigen::Index>(s.size());
  CompactModel m;
  m.theta = theta;
  m.W.resize(n, 2 * k);
  m.M.resize(2 * k, 2 * k);
  if (k == 0) return m;
  Eigen::MatrixXd S(n, k), Y(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    S.col(j) = s[j];
    Y.col(j) = y[j];
  }
  m.W << Y, theta * S;
  const Eigen::MatrixXd sy = S.transpose() * Y;
  Eigen::MatrixXd kmat = Eigen::MatrixXd::Zero(2 * k, 2 * k);
  for (Eigen::Index i = 0; i < k; ++i) {
    kmat(i, i) = -sy(i, i);
    for (Eigen::Index j = 0; j < i; ++j) {
      kmat(k + i, j) = sy(i, j);  // L
      kmat(j, k + i) = sy(i, j);  // L^T
    }
  }
  kmat.bottomRightCorner(k, k) = theta * (S.transpose() * S);
  m.M = kmat.fullPivLu().inverse();
  return m;
}

/// Generalized Cauchy point; also returns c = W^T (xcp - x).
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> cauchy_point(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                                                const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                                                const CompactModel& m) {
  const Eigen::Index n = x.size();
  const Eigen::Index k2 = m.W.cols();
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd xcp = x;
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  std::vector<std::pair<double, Eigen::Index>> breaks;
  for (Eigen::Index i = 0; i < n; ++i) {
    double t = inf;
    if (g(i) < 0.0) t = (x(i) - hi(i)) / g(i);
    else if (g(i) > 0.0) t = (x(i) - lo(i)) / g(i);
    if (t > 0.0) {
      d(i) = -g(i);
      if (t < inf) breaks.emplace_back(t, i);
    }
  }
  std::sort(breaks.begin(), breaks.end());

  Eigen::VectorXd p = m.W.transpose() * d;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(k2);
  double fp = -d.squaredNorm();
  if (fp >= 0.0) return {xcp, c};
  double fpp = -m.theta * fp - p.dot(m.M * p);
  const double fpp0 = -m.theta * fp;
  fpp = std::max(fpp, std::numeric_limits<double>::epsilon() * fpp0);
  double dt_min = -fp / fpp;
  double t_old = 0.0;

  for (const auto& [t, b] : breaks) {
    const double dt = t - t_old;
    if (dt_min < dt) break;
    const double target = d(b) > 0.0 ? hi(b) : lo(b);
    const double zb = target - x(b);
    xcp(b) = target;
    c += dt * p;
    const double gb = g(b);
    const Eigen::VectorXd wb = m.W.row(b).transpose();
    fp += dt * fpp + gb * gb + m.theta * gb * zb - gb * wb.dot(m.M * c);
    fpp -= m.theta * gb * gb + 2.0 * gb * wb.dot(m.M * p) + gb * gb * wb.dot(m.M * wb);
    fpp = std::max(fpp, std::numeric_limits<double>::epsilon() * fpp0);
    p += gb * wb;
    d(b) = 0.0;
    t_old = t;
    dt_min = fp >= 0.0 ? 0.0 : -fp / fpp;
  }
  dt_min = std::max(dt_min, 0.0);
  const double t_final = t_old + dt_min;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d(i) != 0.0) xcp(i) = std::clamp(x(i) + t_final * d(i), lo(i), hi(i));
  }
  c += dt_min * p;
  return {xcp, c};
}

/// Minimises the model over the variables strictly inside the box at xcp.
inline Eigen::VectorXd subspace_minimum(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                        const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                        const CompactModel& m, const Eigen::VectorXd& xcp,
                                        const Eigen::VectorXd& c) {
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (xcp(i) > lo(i) && xcp(i) < hi(i)) free.push_back(i);
  }
  if (free.empty()) return xcp;
  const auto nf = static_cast<Eigen::Index>(free.size());
  const Eigen::Index k2 = m.W.cols();

  const Eigen::VectorXd wmc = k2 > 0 ? Eigen::VectorXd(m.W * (m.M * c)) : Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd r(nf);
  Eigen::MatrixXd wz(nf, k2);
  for (Eigen::Index j = 0; j < nf; ++j) {
    const Eigen::Index i = free[j];
    r(j) = g(i) + m.theta * (xcp(i) - x(i)) - wmc(i);
    if (k2 > 0) wz.row(j) = m.W.row(i);
  }

  Eigen::VectorXd du = -r / m.theta;
  if (k2 > 0) {
    Eigen::VectorXd v = m.M * (wz.transpose() * r);
    const Eigen::MatrixXd nmat =
        Eigen::MatrixXd::Identity(k2, k2) - (m.M * (wz.transpose() * wz)) / m.theta;
    v = nmat.fullPivLu().solve(v);
    du -= wz * v / (m.theta * m.theta);
  }

  Eigen::VectorXd xbar = xcp;
  for (Eigen::Index j = 0; j < nf; ++j) {
    const Eigen::Index i = free[j];
    xbar(i) = std::clamp(xcp(i) + du(j), lo(i), hi(i));
  }
  if ((xbar - x).dot(g) < 0.0) return xbar;

  // projection destroyed descent: truncate the step at the first bound
  double alpha = 1.0;
  for (Eigen::Index j = 0; j < nf; ++j) {
    const Eigen::Index i = free[j];
    if (du(j) > 0.0) alpha = std::min(alpha, (hi(i) - xcp(i)) / du(j));
    else if (du(j) < 0.0) alpha = std::min(alpha, (lo(i) - xcp(i)) / du(j));
  }
  xbar = xcp;
  for (Eigen::Index j = 0; j < nf; ++j) {
    const Eigen::Index i = free[j];
    xbar(i) = std::clamp(xcp(i) + alpha * du(j), lo(i), hi(i));
  }
  return xbar;
}

}  // namespace detail

/// Minimises f over lo <= x <= hi. `fg(x, g)` returns f(x) and writes the
/// gradient into g; `on_iteration` sees every accepted iterate, including
/// the starting point as iteration 0.
template <class Objective, class Callback>
LbfgsbResult lbfgsb_minimize(Objective&& fg, Eigen::VectorXd x0, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi, const LbfgsbSettings& settings, Callback&& on_iteration) {
  const Eigen::Index n = x0.size();
  LbfgsbResult res;
  res.x = x0.cwiseMax(lo).cwiseMin(hi);
  Eigen::VectorXd g(n);
  res.f = fg(res.x, g);
  res.evaluations = 1;

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  double theta = 1.0;
  std::vector<double> f_hist{res.f};

  for (int iter = 0;; ++iter) {
    res.iterations = iter;
    res.pg_norm = projected_gradient_norm(res.x, g, lo, hi);
    on_iteration(LbfgsbIteration{iter, res.f, res.pg_norm, res.evaluations});
    if (res.pg_norm <= settings.pg_tol) {
      res.status = LbfgsbStatus::converged_gradient;
      return res;
    }
    const auto w = static_cast<size_t>(settings.rel_window);
    if (f_hist.size() > w) {
      const double f_then = f_hist[f_hist.size() - 1 - w];
      const double scale = std::max({std::abs(f_then), std::abs(res.f), std::numeric_limits<double>::min()});
      if (f_then - res.f <= settings.f_rel_tol * scale) {
        res.status = LbfgsbStatus::converged_relative_decrease;
        return res;
      }
    }
    if (iter >= settings.max_iter) {
      res.status = LbfgsbStatus::max_iterations;
      return res;
    }

    bool accepted = false;
    Eigen::VectorXd x_new, g_new(n);
    double f_new = 0.0;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      // an empty memory uses B = |g| I, i.e. a unit-length projected gradient step
      const double model_theta = s_hist.empty() ? std::max(g.norm(), std::numeric_limits<double>::min()) : theta;
      const auto model = detail::compact_model(s_hist, y_hist, model_theta, n);
      const auto [xcp, c] = detail::cauchy_point(res.x, g, lo, hi, model);
      const Eigen::VectorXd xbar = detail::subspace_minimum(res.x, g, lo, hi, model, xcp, c);
      const Eigen::VectorXd dir = xbar - res.x;
      const double slope = g.dot(dir);
      if (slope < 0.0) {
        double t = 1.0;
        for (int bt = 0; bt < settings.max_backtracks; ++bt) {
          x_new = t == 1.0 ? xbar : Eigen::VectorXd((res.x + t * dir).cwiseMax(lo).cwiseMin(hi));
          f_new = fg(x_new, g_new);
          ++res.evaluations;
          if (std::isfinite(f_new) && f_new <= res.f + 1e-4 * t * slope) {
            accepted = true;
            break;
          }
          // safeguarded quadratic interpolation
          double t_q = -slope * t * t / (2.0 * (f_new - res.f - slope * t));
          if (!std::isfinite(t_q)) t_q = 0.5 * t;
          t = std::clamp(t_q, 0.1 * t, 0.5 * t);
        }
      }
      if (!accepted) {
        if (s_hist.empty()) break;
        s_hist.clear();
        y_hist.clear();
      }
    }
    if (!accepted) {
      res.status = LbfgsbStatus::line_search_failure;
      return res;
    }

    Eigen::VectorXd s = x_new - res.x;
    Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y), yy = y.squaredNorm();
    if (sy > std::numeric_limits<double>::epsilon() * yy && sy > 0.0) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      if (static_cast<int>(s_hist.size()) > settings.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
      theta = yy / sy;
    }
    res.x = std::move(x_new);
    g = g_new;
    res.f = f_new;
    f_hist.push_back(res.f);
  }
}

}  // namespace homopt
