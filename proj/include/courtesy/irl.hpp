#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "courtesy/demo.hpp"
#include "courtesy/planner.hpp"

namespace courtesy {

struct IrlConfig {
  bool use_courtesy_feature = false;
  CourtesyMode courtesy_mode = CourtesyMode::MaintainBehavior;
  double hessian_jitter = 1e-6;
  double hessian_fd_step = 1e-3;
  double theta_fd_step = 1e-6;
  double learn_rate = 2e-3;
  double learn_rate_decay = 0.01;  // lr(epoch) = learn_rate / (1 + decay * epoch)
  int max_epochs = 200;
  int patience = 20;  // early stop after this many non-improving epochs
  int anchor = 0;     // index into (goal, speed, accel, steer, safety); weights rescaled so it is 1
  std::optional<Eigen::VectorXd> init;  // optional warm start (pre-anchor scale)
};

namespace irl_detail {

inline EvalContext demo_context(const Demonstration& d) {
  EvalContext ctx;
  ctx.other_states = d.surrounding;
  return ctx;
}

/// Feature sum of the demonstrated driver for an arbitrary candidate control
/// sequence, plus the courtesy feature when enabled. The courtesy feature is
/// Definition-style: extra cost borne by the context car (reference weights)
/// relative to its best response in the configured alternative world, with
/// the demonstrated driver frozen at constant velocity for MaintainBehavior.
struct DemoFeatures {
  const Demonstration* demo = nullptr;
  const IrlConfig* config = nullptr;
  double alt_cost = 0.0;  // context car's alternative-world optimum (fixed per demo)

  int dim() const { return 5 + (config->use_courtesy_feature ? 1 : 0); }

  Eigen::VectorXd operator()(const std::vector<Control>& u_demo) const {
    const Demonstration& d = *demo;
    const EvalContext ctx = demo_context(d);
    const FeatureVector base =
        agent_features(d.scene, ctx, d.x0, d.robot_controls, u_demo, Perspective::Human);
    Eigen::VectorXd phi(dim());
    phi(0) = base.goal;
    phi(1) = base.speed;
    phi(2) = base.accel;
    phi(3) = base.steer;
    phi(4) = base.safety;
    if (config->use_courtesy_feature) {
      const double context_cost = agent_cost(d.scene, ctx, d.x0, d.robot_controls, u_demo,
                                             d.scene.robot.weights, Perspective::Robot);
      phi(5) = hinge(context_cost - alt_cost);
    }
    return phi;
  }
};

/// Alternative-world optimum of the context car, with the demonstrated driver
/// removed (NotThere), frozen at constant velocity (MaintainBehavior), or
/// jointly optimized (Collaborative).
inline double context_alternative_cost(const Demonstration& d, const IrlConfig& cfg) {
  const EvalContext ctx = demo_context(d);
  const std::vector<Control> frozen(d.human_controls.size());  // keep current velocity
  OptimizerSettings os = d.scene.optimizer;
  os.seed = derive_seed(d.scene.optimizer.seed, 71);
  switch (cfg.courtesy_mode) {
    case CourtesyMode::NotThere: {
      FeatureOptions opts;
      opts.ignore_other_main = true;
      return agent_best_response(d.scene, ctx, d.x0, Perspective::Robot, frozen,
                                 d.scene.robot.weights, os, nullptr, opts)
          .cost;
    }
    case CourtesyMode::MaintainBehavior:
      return agent_best_response(d.scene, ctx, d.x0, Perspective::Robot, frozen,
                                 d.scene.robot.weights, os)
          .cost;
    case CourtesyMode::Collaborative: {
      // stack (context, demonstrated) controls and minimize the context cost
      const int n = d.length();
      const BestResponse vs_frozen = agent_best_response(d.scene, ctx, d.x0, Perspective::Robot,
                                                         frozen, d.scene.robot.weights, os);
      Objective obj;
      obj.value = [&](const Eigen::VectorXd& x) {
        const std::vector<Control> uc = unpack_controls(x.head(2 * n));
        const std::vector<Control> ud = unpack_controls(x.tail(2 * n));
        return agent_cost(d.scene, ctx, d.x0, uc, ud, d.scene.robot.weights, Perspective::Robot);
      };
      const Box single = Box::controls(d.scene.vehicle.limits, n);
      Box box;
      box.lo.resize(4 * n);
      box.hi.resize(4 * n);
      box.lo << single.lo, single.lo;
      box.hi << single.hi, single.hi;
      Eigen::VectorXd init(4 * n);
      init.head(2 * n) = pack_controls(vs_frozen.controls);
      init.tail(2 * n) = pack_controls(frozen);
      OptimizerSettings os2 = os;
      os2.seed = derive_seed(os.seed, 72);
      const OptResult r = optimize_controls(obj, init, box, os2);
      return std::min(r.value, vs_frozen.cost);
    }
  }
  return 0.0;
}

}  // namespace irl_detail

/// Per-demo quantities precomputed once: the feature vector at the
/// demonstration and the per-feature control Hessians. Since the cost is
/// linear in the weights, H(theta) = sum_j theta_j H_j, so likelihood
/// evaluations for any theta reduce to an assembly plus a factorization.
struct PreparedDemo {
  Eigen::VectorXd phi;                  // features at the demonstration
  std::vector<Eigen::MatrixXd> hphi;    // per-feature Hessians over the demo controls
  int dim = 0;                          // 2L
  double alt_cost = 0.0;
};

inline PreparedDemo prepare_demo(const Demonstration& demo, const IrlConfig& config) {
  irl_detail::DemoFeatures features{&demo, &config, 0.0};
  if (config.use_courtesy_feature)
    features.alt_cost = irl_detail::context_alternative_cost(demo, config);

  PreparedDemo out;
  out.alt_cost = features.alt_cost;
  out.dim = 2 * demo.length();
  const int nf = features.dim();
  const double h = config.hessian_fd_step;

  const Eigen::VectorXd x0 = pack_controls(demo.human_controls);
  auto eval = [&](const Eigen::VectorXd& x) { return features(unpack_controls(x)); };

  out.phi = eval(x0);
  out.hphi.assign(nf, Eigen::MatrixXd::Zero(out.dim, out.dim));

  // central second differences; diagonal first, then symmetric cross terms
  std::vector<Eigen::VectorXd> plus(out.dim), minus(out.dim);
  Eigen::VectorXd x = x0;
  for (int i = 0; i < out.dim; ++i) {
    x(i) = x0(i) + h;
    plus[i] = eval(x);
    x(i) = x0(i) - h;
    minus[i] = eval(x);
    x(i) = x0(i);
    const Eigen::VectorXd dii = (plus[i] - 2.0 * out.phi + minus[i]) / (h * h);
    for (int f = 0; f < nf; ++f) out.hphi[f](i, i) = dii(f);
  }
  for (int i = 0; i < out.dim; ++i) {
    for (int j = i + 1; j < out.dim; ++j) {
      x(i) = x0(i) + h;
      x(j) = x0(j) + h;
      const Eigen::VectorXd fpp = eval(x);
      x(j) = x0(j) - h;
      const Eigen::VectorXd fpm = eval(x);
      x(i) = x0(i) - h;
      const Eigen::VectorXd fmm = eval(x);
      x(j) = x0(j) + h;
      const Eigen::VectorXd fmp = eval(x);
      x(i) = x0(i);
      x(j) = x0(j);
      const Eigen::VectorXd dij = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
      for (int f = 0; f < nf; ++f) {
        out.hphi[f](i, j) = dij(f);
        out.hphi[f](j, i) = dij(f);
      }
    }
  }
  return out;
}

struct LogLikResult {
  double value = 0.0;
  bool usable = false;
  double jitter_used = 0.0;
};

/// Laplace-approximated demo log-likelihood:
///   log P = -C(theta) + 1/2 log det(H + eps I) - (dim/2) log(2 pi)
/// with H the control Hessian of the cumulative cost at the demonstration.
/// The jitter escalates up to three times before the demo is declared
/// unusable for this theta.
inline LogLikResult demo_log_likelihood(const PreparedDemo& pd, const Eigen::VectorXd& theta,
                                        const IrlConfig& config) {
  constexpr double kLog2Pi = 1.8378770664093453;
  LogLikResult res;
  const double cost = theta.dot(pd.phi);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(pd.dim, pd.dim);
  for (int f = 0; f < theta.size(); ++f) H += theta(f) * pd.hphi[f];

  double eps = config.hessian_jitter * (1.0 + std::abs(H.trace()) / pd.dim);
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(H + eps * Eigen::MatrixXd::Identity(pd.dim, pd.dim));
    if (llt.info() == Eigen::Success) {
      double logdet = 0.0;
      const auto& L = llt.matrixLLT();
      for (int i = 0; i < pd.dim; ++i) logdet += 2.0 * std::log(L(i, i));
      res.value = -cost + 0.5 * logdet - 0.5 * pd.dim * kLog2Pi;
      res.usable = std::isfinite(res.value);
      res.jitter_used = eps;
      return res;
    }
    eps *= 10.0;
  }
  return res;
}

inline LogLikResult demo_log_likelihood(const Demonstration& demo, const Eigen::VectorXd& theta,
                                        const IrlConfig& config) {
  return demo_log_likelihood(prepare_demo(demo, config), theta, config);
}

struct FitResult {
  CostWeights weights;            // anchored (anchor weight = 1)
  Eigen::VectorXd raw;            // pre-anchor scale
  std::vector<double> curve;      // per-epoch mean negative log-likelihood
  int epochs = 0;
  int skipped_demos = 0;
  bool early_stopped = false;
};

inline CostWeights weights_from_vector(const Eigen::VectorXd& v) {
  CostWeights w;
  w.goal = v(0);
  w.speed = v(1);
  w.accel = v(2);
  w.steer = v(3);
  w.safety = v(4);
  w.courtesy = v.size() > 5 ? v(5) : 0.0;
  return w;
}

/// Maximum-entropy fit by projected gradient ascent over nonnegative weights.
/// Gradients are finite differences of the summed log-likelihood; steps that
/// do not improve are retried with a halved rate and the best iterate wins.
inline FitResult fit(const std::vector<Demonstration>& demos, const IrlConfig& config) {
  if (demos.empty()) throw std::invalid_argument("no demonstrations");
  std::vector<PreparedDemo> prepared;
  prepared.reserve(demos.size());
  for (const auto& d : demos) prepared.push_back(prepare_demo(d, config));

  const int nf = 5 + (config.use_courtesy_feature ? 1 : 0);
  Eigen::VectorXd theta = Eigen::VectorXd::Ones(nf);
  if (config.use_courtesy_feature) theta(5) = 0.0;
  if (config.init && config.init->size() == nf) theta = config.init->cwiseMax(0.0);

  int last_skipped = 0;
  auto total_loglik = [&](const Eigen::VectorXd& th) {
    double sum = 0.0;
    int skipped = 0;
    for (const auto& pd : prepared) {
      const LogLikResult r = demo_log_likelihood(pd, th, config);
      if (r.usable)
        sum += r.value;
      else
        ++skipped;
    }
    last_skipped = skipped;
    if (skipped == static_cast<int>(prepared.size()))
      throw std::runtime_error("all demonstrations unusable");
    return sum;
  };

  FitResult out;
  double best = total_loglik(theta);
  Eigen::VectorXd best_theta = theta;
  out.curve.push_back(-best / static_cast<double>(demos.size()));
  int stall = 0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    Eigen::VectorXd grad(nf);
    for (int j = 0; j < nf; ++j) {
      const double h = config.theta_fd_step * (1.0 + std::abs(theta(j)));
      Eigen::VectorXd tp = theta, tm = theta;
      tp(j) += h;
      tm(j) = std::max(0.0, tm(j) - h);
      const double denom = tp(j) - tm(j);
      grad(j) = denom > 0.0 ? (total_loglik(tp) - total_loglik(tm)) / denom : 0.0;
    }

    double lr = config.learn_rate / (1.0 + config.learn_rate_decay * epoch);
    const double scale = 1.0 + grad.lpNorm<Eigen::Infinity>();
    bool improved = false;
    for (int back = 0; back < 12; ++back) {
      const Eigen::VectorXd cand = (theta + lr / scale * grad).cwiseMax(0.0);
      const double value = total_loglik(cand);
      if (value > best) {
        theta = cand;
        best = value;
        best_theta = cand;
        improved = true;
        break;
      }
      lr *= 0.5;
    }
    out.curve.push_back(-best / static_cast<double>(demos.size()));
    ++out.epochs;
    stall = improved ? 0 : stall + 1;
    if (stall >= config.patience) {
      out.early_stopped = true;
      break;
    }
  }

  total_loglik(best_theta);
  out.skipped_demos = last_skipped;
  out.raw = best_theta;
  Eigen::VectorXd anchored = best_theta;
  if (best_theta(config.anchor) > 1e-12) anchored /= best_theta(config.anchor);
  out.weights = weights_from_vector(anchored);
  return out;
}

struct EvalRow {
  double med = 0.0;
  double mean_gap = 0.0;
  double min_gap = 0.0;
  bool ok = false;
  std::string error;
};

struct EvalSummary {
  std::vector<EvalRow> rows;
  double mean_med = 0.0;
  int evaluated = 0;
};

/// Replans the demonstrated driver with the candidate weights against the
/// replayed context and scores the similarity to the recorded trajectory.
inline EvalSummary evaluate(const CostWeights& weights, const std::vector<Demonstration>& demos,
                            const IrlConfig& config) {
  EvalSummary out;
  for (const auto& d : demos) {
    EvalRow row;
    try {
      const EvalContext ctx = irl_detail::demo_context(d);
      const int n = d.length();
      const double alt =
          config.use_courtesy_feature ? irl_detail::context_alternative_cost(d, config) : 0.0;

      Objective obj;
      obj.value = [&](const Eigen::VectorXd& x) {
        const std::vector<Control> u = unpack_controls(x);
        const FeatureVector base =
            agent_features(d.scene, ctx, d.x0, d.robot_controls, u, Perspective::Human);
        double value = dot(weights, base);
        if (config.use_courtesy_feature && weights.courtesy > 0.0) {
          const double context_cost = agent_cost(d.scene, ctx, d.x0, d.robot_controls, u,
                                                 d.scene.robot.weights, Perspective::Robot);
          value += weights.courtesy * hinge(context_cost - alt);
        }
        return value;
      };
      OptimizerSettings os = d.scene.optimizer;
      os.seed = derive_seed(d.scene.optimizer.seed, 73);
      const OptResult r =
          optimize_controls(obj, Eigen::VectorXd::Zero(2 * n), Box::controls(d.scene.vehicle.limits, n), os);
      const std::vector<Control> planned = unpack_controls(r.x);

      const auto planned_states = rollout_agent(d.x0.human, planned, d.scene.dt, d.scene.vehicle);
      const auto demo_states = rollout_agent(d.x0.human, d.human_controls, d.scene.dt, d.scene.vehicle);
      const auto context_states =
          rollout_agent(d.x0.robot, d.robot_controls, d.scene.dt, d.scene.vehicle);

      std::vector<Vec2> pa, pb;
      for (const auto& s : planned_states) pa.push_back(s.position());
      for (const auto& s : demo_states) pb.push_back(s.position());
      row.med = med(pa, pb);

      double gap_sum = 0.0;
      row.min_gap = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < planned_states.size(); ++k) {
        const double g = box_gap(footprint(planned_states[k], d.scene.vehicle),
                                 footprint(context_states[k], d.scene.vehicle));
        gap_sum += g;
        row.min_gap = std::min(row.min_gap, g);
      }
      row.mean_gap = gap_sum / static_cast<double>(planned_states.size());
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    out.rows.push_back(row);
  }
  double sum = 0.0;
  for (const auto& r : out.rows)
    if (r.ok) {
      sum += r.med;
      ++out.evaluated;
    }
  out.mean_med = out.evaluated > 0 ? sum / out.evaluated : 0.0;
  return out;
}

}  // namespace courtesy
