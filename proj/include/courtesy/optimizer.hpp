#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "courtesy/dynamics.hpp"
#include "courtesy/scenario.hpp"

namespace courtesy {

struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Eigen::VectorXd project(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lo).cwiseMin(hi);
  }

  /// Bounds for a flattened control sequence (accel_0, steer_0, accel_1, ...).
  static Box controls(const ControlLimits& lim, int n_steps) {
    Box b;
    b.lo.resize(2 * n_steps);
    b.hi.resize(2 * n_steps);
    for (int k = 0; k < n_steps; ++k) {
      b.lo(2 * k) = lim.accel_min;
      b.hi(2 * k) = lim.accel_max;
      b.lo(2 * k + 1) = -lim.steer_max;
      b.hi(2 * k + 1) = lim.steer_max;
    }
    return b;
  }
};

/// Scalar objective over a flat decision vector, with an optional analytic
/// gradient callback (finite differences are used when absent).
struct Objective {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;  // optional
};

struct OptResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline Eigen::VectorXd fd_gradient(const Objective& obj, const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    p(i) = xi + h;
    const double fp = obj.value(p);
    p(i) = xi - h;
    const double fm = obj.value(p);
    p(i) = xi;
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline OptResult projected_bfgs(const Objective& obj, const Eigen::VectorXd& init, const Box& box,
                                const OptimizerSettings& cfg) {
  const Eigen::Index n = init.size();
  auto grad = [&](const Eigen::VectorXd& x) {
    return (cfg.analytic_gradient && obj.gradient) ? obj.gradient(x)
                                                   : fd_gradient(obj, x, cfg.fd_step);
  };

  OptResult res;
  Eigen::VectorXd x = box.project(init);
  double f = obj.value(x);
  if (!std::isfinite(f)) throw std::invalid_argument("degenerate objective");
  Eigen::VectorXd g = grad(x);
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);  // inverse Hessian estimate

  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    const double pg_norm = (x - box.project(x - g)).lpNorm<Eigen::Infinity>();
    if (pg_norm < cfg.grad_tol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd d = -(B * g);
    if (d.dot(g) > -1e-12 * d.norm() * g.norm()) d = -g;

    double alpha = 1.0;
    Eigen::VectorXd xn;
    double fn = f;
    bool advanced = false;
    while (alpha >= 1e-12) {
      xn = box.project(x + alpha * d);
      fn = obj.value(xn);
      if (std::isfinite(fn) && fn <= f + 1e-4 * g.dot(xn - x)) {
        advanced = (xn - x).lpNorm<Eigen::Infinity>() > 0.0;
        break;
      }
      alpha *= 0.5;
    }
    if (!advanced) break;  // no acceptable step along this direction

    Eigen::VectorXd gn = grad(xn);
    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd yv = gn - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::VectorXd By = B * yv;
      B -= rho * (By * s.transpose() + s * By.transpose());
      B += rho * rho * (yv.dot(By) + sy) * (s * s.transpose());
    }
    x = std::move(xn);
    f = fn;
    g = std::move(gn);
  }
  res.x = std::move(x);
  res.value = f;
  res.iterations = it;
  return res;
}

}  // namespace detail

/// Multi-start projected quasi-Newton descent over a box. Starts from `init`,
/// zero controls, and seeded perturbations of `init`; returns the best value
/// found, breaking near-ties toward the smaller-norm solution so repeated
/// runs are stable. The result never exceeds the objective at `init`.
inline OptResult optimize_controls(const Objective& obj, const Eigen::VectorXd& init, const Box& box,
                                   const OptimizerSettings& cfg) {
  const double f_init = obj.value(box.project(init));
  if (!std::isfinite(f_init)) throw std::invalid_argument("degenerate objective");

  std::mt19937_64 rng(cfg.seed);
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(init);
  if (cfg.restarts >= 2) starts.push_back(Eigen::VectorXd::Zero(init.size()));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  if (cfg.restarts >= 3) {
    Eigen::VectorXd p = init;
    for (Eigen::Index i = 0; i < p.size(); ++i)
      p(i) += 0.05 * (box.hi(i) - box.lo(i)) * unit(rng);
    starts.push_back(box.project(p));
  }
  if (cfg.restarts >= 4) {
    // hold-back probe: full deceleration, straight wheel; merge-order style
    // decisions (ahead vs behind) need a start in the braking basin
    Eigen::VectorXd brake = Eigen::VectorXd::Zero(init.size());
    for (Eigen::Index i = 0; i + 1 < brake.size(); i += 2) brake(i) = box.lo(i);
    starts.push_back(brake);
  }
  while (static_cast<int>(starts.size()) < cfg.restarts) {
    Eigen::VectorXd p = init;
    for (Eigen::Index i = 0; i < p.size(); ++i)
      p(i) += 0.05 * (box.hi(i) - box.lo(i)) * unit(rng);
    starts.push_back(box.project(p));
  }

  OptResult best;
  bool have = false;
  int total_iters = 0;
  for (const auto& s : starts) {
    OptResult r = detail::projected_bfgs(obj, s, box, cfg);
    total_iters += r.iterations;
    const double tie = 1e-9 * (1.0 + std::abs(have ? best.value : r.value));
    if (!have || r.value < best.value - tie ||
        (std::abs(r.value - best.value) <= tie && r.x.norm() < best.x.norm())) {
      best = std::move(r);
      have = true;
    }
  }
  best.iterations = total_iters;
  return best;
}

inline Eigen::VectorXd pack_controls(std::span<const Control> u) {
  Eigen::VectorXd x(2 * u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    x(2 * k) = u[k].accel;
    x(2 * k + 1) = u[k].steer;
  }
  return x;
}

inline std::vector<Control> unpack_controls(const Eigen::VectorXd& x) {
  std::vector<Control> u(static_cast<std::size_t>(x.size() / 2));
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = {x(2 * k), x(2 * k + 1)};
  return u;
}

}  // namespace courtesy
