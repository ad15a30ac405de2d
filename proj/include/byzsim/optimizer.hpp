#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "byzsim/aggregators.hpp"
#include "byzsim/attacks.hpp"
#include "byzsim/errors.hpp"
#include "byzsim/metrics.hpp"
#include "byzsim/problems.hpp"
#include "byzsim/rng.hpp"
#include "byzsim/vector_ops.hpp"

namespace byzsim {

enum class Method { Sgd, Sgdm, SgdmTraditional, Mvr };
enum class StepSchedule { Constant, Thm6, Thm3, MvrTheory };

// m_t = (1 - beta_t) g + beta_t m_prev
inline Vector worker_momentum_step(const Vector& m_prev, const Vector& g,
                                   double beta_t) {
  if (beta_t < 0.0 || beta_t > 1.0)
    throw ConfigError("momentum beta must be in [0, 1]");
  check_same_size(m_prev, g);
  Vector m(g.size());
  for (std::size_t j = 0; j < g.size(); ++j)
    m[j] = (1.0 - beta_t) * g[j] + beta_t * m_prev[j];
  return m;
}

// m_t = g + beta m_prev (geometric accumulation; equivalent to the convex
// form with the learning rate rescaled by 1/(1-beta)).
inline Vector traditional_momentum_step(const Vector& m_prev, const Vector& g,
                                        double beta) {
  if (beta < 0.0 || beta >= 1.0)
    throw ConfigError("traditional momentum beta must be in [0, 1)");
  check_same_size(m_prev, g);
  Vector m(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) m[j] = g[j] + beta * m_prev[j];
  return m;
}

// d_t = alpha g(x_{t-1}) + (1-alpha) d_prev + (1-alpha)(g(x_{t-1}) - g(x_{t-2}))
// with both gradients from the same minibatch.
inline Vector mvr_step(const Vector& d_prev, const Vector& g_at_x_prev,
                       const Vector& g_at_x_prevprev, double alpha_t) {
  if (!(alpha_t > 0.0 && alpha_t <= 1.0))
    throw ConfigError("mvr alpha must be in (0, 1]");
  check_same_size(d_prev, g_at_x_prev);
  check_same_size(d_prev, g_at_x_prevprev);
  Vector d(d_prev.size());
  for (std::size_t j = 0; j < d.size(); ++j)
    d[j] = alpha_t * g_at_x_prev[j] +
           (1.0 - alpha_t) * (d_prev[j] + g_at_x_prev[j] - g_at_x_prevprev[j]);
  return d;
}

struct ScheduleInputs {
  double f0_minus_fstar = 1.0;
  double smoothness = 1.0;  // L
  double sigma_sq = 1.0;
  int workers = 1;
  double delta = 0.0;
  double c = 4000.0;  // robustness constant of the aggregator
  int rounds = 1;
};

struct ScheduleResult {
  double eta = 0.0;
  double alpha = 1.0;  // momentum alpha for t >= 2 (alpha_1 = 1)
};

// eta = min(sqrt((F + 5 c delta sigma^2 / (16 L)) / (20 L T sigma^2 (2/n + c delta))), 1/(8L))
// alpha_t = 8 L eta for t >= 2.
inline ScheduleResult thm6_schedule(const ScheduleInputs& in) {
  const double cap = 1.0 / (8.0 * in.smoothness);
  const double denom = 20.0 * in.smoothness * in.rounds * in.sigma_sq *
                       (2.0 / in.workers + in.c * in.delta);
  double eta = cap;
  if (denom > 0.0) {
    const double numer =
        in.f0_minus_fstar +
        5.0 * in.c * in.delta * in.sigma_sq / (16.0 * in.smoothness);
    eta = std::min(std::sqrt(numer / denom), cap);
  }
  return {eta, std::min(1.0, 8.0 * in.smoothness * eta)};
}

// Non-Byzantine momentum schedule:
// eta = min((1/(4 sigma)) sqrt(F / (L T)), 1/(4L)), alpha_t = 4 L eta.
inline ScheduleResult thm3_schedule(const ScheduleInputs& in) {
  const double cap = 1.0 / (4.0 * in.smoothness);
  double eta = cap;
  if (in.sigma_sq > 0.0) {
    eta = std::min(std::sqrt(in.f0_minus_fstar /
                             (in.smoothness * in.rounds)) /
                       (4.0 * std::sqrt(in.sigma_sq)),
                   cap);
  }
  return {eta, std::min(1.0, 4.0 * in.smoothness * eta)};
}

// eta = min(cbrt(F / (T 1536 L^2 sigma^2 (c delta + 1)(c delta + 1/n))), 1/(4L))
// alpha = 192 L^2 eta^2 (1 + c delta), clamped to (0, 1].
inline ScheduleResult mvr_schedule(const ScheduleInputs& in) {
  const double cap = 1.0 / (4.0 * in.smoothness);
  const double denom = static_cast<double>(in.rounds) * 1536.0 *
                       in.smoothness * in.smoothness * in.sigma_sq *
                       (in.c * in.delta + 1.0) *
                       (in.c * in.delta + 1.0 / in.workers);
  double eta = cap;
  if (denom > 0.0) eta = std::min(std::cbrt(in.f0_minus_fstar / denom), cap);
  const double alpha = 192.0 * in.smoothness * in.smoothness * eta * eta *
                       (1.0 + in.c * in.delta);
  return {eta, std::clamp(alpha, std::numeric_limits<double>::min(), 1.0)};
}

struct OptimizerSpec {
  Method method = Method::Sgd;
  StepSchedule schedule = StepSchedule::Constant;
  double eta = 0.1;
  double beta = 0.9;    // sgdm / sgdm-traditional momentum
  double alpha = 0.1;   // mvr momentum when the schedule is constant
  int local_steps = 1;  // local SGD steps per round (delta-message protocol)
  int rounds = 100;
  double schedule_c = 4000.0;  // c used by the theory schedules
};

// Full synchronous state of a run.
struct RoundState {
  Vector x;
  Vector x_prev;                 // x_{t-2}, kept for the MVR two-point draw
  std::vector<Vector> momentum;  // per-worker buffers (all n workers)
  int round = 0;                 // rounds completed
  AggregatorState aggregator;
};

// Executes the per-round server/worker protocol against one problem, one
// aggregator and one attack. Good workers and Byzantine workers both run the
// honest protocol first; the attack then replaces the Byzantine messages.
class Simulator {
 public:
  Simulator(const Problem& problem, AggregatorSpec aggregator,
            AttackSpec attack, OptimizerSpec optimizer, int workers,
            std::uint64_t seed)
      : problem_(problem),
        aggregator_(std::move(aggregator)),
        attack_(std::move(attack)),
        optimizer_(optimizer),
        workers_(workers),
        seed_(seed) {
    if (workers_ < 1) throw ConfigError("workers must be >= 1");
    if (optimizer_.local_steps < 1)
      throw ConfigError("local-steps must be >= 1");
    if (optimizer_.local_steps > 1 && optimizer_.method == Method::Mvr)
      throw ConfigError("local steps are not defined for mvr");
    if (optimizer_.method == Method::SgdmTraditional &&
        optimizer_.schedule != StepSchedule::Constant)
      throw ConfigError("theory schedules require the convex momentum form");
    std::sort(attack_.byzantine.begin(), attack_.byzantine.end());
    for (int idx : attack_.byzantine) {
      if (idx < 0 || idx >= workers_)
        throw ConfigError("byzantine index " + std::to_string(idx) +
                          " out of range");
    }
    if (attack_flips_labels(attack_) && !problem_.has_labels())
      throw ConfigError("label-flip attack requires a labeled problem");
    state_.x = problem_.initial_point();
    state_.x_prev = state_.x;
    state_.momentum.assign(static_cast<std::size_t>(workers_),
                           zeros(state_.x.size()));
    eta_ = optimizer_.eta;
    alpha_ = optimizer_.alpha;
    if (optimizer_.schedule != StepSchedule::Constant) resolve_schedule();
  }

  const RoundState& state() const { return state_; }
  Vector& model() { return state_.x; }
  double eta() const { return eta_; }
  double alpha() const { return alpha_; }

  // Runs one round and reports its metrics. Metrics may contain non-finite
  // values when an attack blows the model up; the caller decides how to
  // record that.
  MetricRecord step() {
    const int t = state_.round + 1;
    const double beta_t = round_beta(t);

    std::vector<Vector> messages(static_cast<std::size_t>(workers_));
    const bool flip = attack_flips_labels(attack_);
    for (int i = 0; i < workers_; ++i) {
      const bool byz = std::binary_search(attack_.byzantine.begin(),
                                          attack_.byzantine.end(), i);
      messages[i] = honest_message(i, t, beta_t, byz && flip);
    }

    RngStream attack_stream(seed_, kAttackLane, static_cast<std::uint64_t>(t));
    AttackContext ctx{messages, t, &state_.x, &problem_, &attack_stream};
    const AttackResult attacked = apply_attack(attack_, ctx);
    for (const auto& [idx, msg] : attacked.messages)
      messages[static_cast<std::size_t>(idx)] = msg;

    Vector good_mean = mean_of_good(messages);
    Vector agg = run_aggregator(messages, beta_t);

    const double server_eta =
        eta_ * static_cast<double>(optimizer_.local_steps);
    state_.x_prev = state_.x;
    axpy(state_.x, -server_eta, agg);
    state_.round = t;

    MetricRecord rec;
    rec.round = t;
    rec.loss = problem_.loss(state_.x);
    rec.grad_norm_sq = squared_norm(problem_.gradient(state_.x));
    rec.aggregation_error = squared_distance(agg, good_mean);
    rec.suboptimality = rec.loss - problem_.optimal_value();
    rec.attack_active = attacked.active_count;
    return rec;
  }

 private:
  void resolve_schedule() {
    ScheduleInputs in;
    in.f0_minus_fstar =
        problem_.loss(problem_.initial_point()) - problem_.optimal_value();
    in.smoothness = problem_.smoothness();
    in.sigma_sq = problem_.variance_bound();
    in.workers = workers_;
    in.delta = static_cast<double>(attack_.byzantine.size()) /
               static_cast<double>(workers_);
    in.c = optimizer_.schedule_c;
    in.rounds = optimizer_.rounds;
    ScheduleResult r;
    switch (optimizer_.schedule) {
      case StepSchedule::Thm6: r = thm6_schedule(in); break;
      case StepSchedule::Thm3: r = thm3_schedule(in); break;
      case StepSchedule::MvrTheory: r = mvr_schedule(in); break;
      case StepSchedule::Constant: return;
    }
    eta_ = r.eta;
    alpha_ = r.alpha;
    scheduled_ = true;
  }

  // Momentum beta for round t. Scheduled runs use alpha_1 = 1 (beta_1 = 0)
  // and beta_t = 1 - alpha afterwards; mvr interprets alpha directly.
  double round_beta(int t) const {
    if (optimizer_.method == Method::Sgd) return 0.0;
    if (scheduled_) return t == 1 ? 0.0 : 1.0 - alpha_;
    return optimizer_.beta;
  }

  double round_alpha(int t) const { return t == 1 ? 1.0 : alpha_; }

  // One worker's honest-protocol message for round t (its momentum, MVR
  // estimate, raw gradient, or local-steps model delta).
  Vector honest_message(int worker, int t, double beta_t, bool flip) {
    RngStream stream(seed_, static_cast<std::uint64_t>(worker),
                     static_cast<std::uint64_t>(t));
    Vector& buffer = state_.momentum[static_cast<std::size_t>(worker)];

    if (optimizer_.local_steps > 1) {
      // Local SGD(m): k steps from the shared model, message is the model
      // delta divided by (k * eta), a pseudo-gradient of unit scale.
      const int k = optimizer_.local_steps;
      Vector y = state_.x;
      for (int s = 0; s < k; ++s) {
        Vector g = problem_.sample_gradient(y, stream, flip);
        buffer = local_update(buffer, g, beta_t);
        axpy(y, -eta_, buffer);
      }
      Vector msg = subtract(state_.x, y);
      const double scale = 1.0 / (eta_ * static_cast<double>(k));
      for (double& v : msg) v *= scale;
      return msg;
    }

    switch (optimizer_.method) {
      case Method::Sgd:
        return problem_.sample_gradient(state_.x, stream, flip);
      case Method::Sgdm: {
        Vector g = problem_.sample_gradient(state_.x, stream, flip);
        buffer = worker_momentum_step(buffer, g, beta_t);
        return buffer;
      }
      case Method::SgdmTraditional: {
        Vector g = problem_.sample_gradient(state_.x, stream, flip);
        buffer = traditional_momentum_step(buffer, g, optimizer_.beta);
        return buffer;
      }
      case Method::Mvr: {
        if (t == 1) {
          buffer = problem_.sample_gradient(state_.x, stream, flip);
        } else {
          GradientPair pair =
              problem_.sample_gradient_pair(state_.x, state_.x_prev, stream, flip);
          buffer = mvr_step(buffer, pair.at_new, pair.at_old, round_alpha(t));
        }
        return buffer;
      }
    }
    throw ConfigError("unknown optimizer method");
  }

  Vector local_update(const Vector& buffer, const Vector& g,
                      double beta_t) const {
    switch (optimizer_.method) {
      case Method::Sgd: return g;
      case Method::Sgdm: return worker_momentum_step(buffer, g, beta_t);
      case Method::SgdmTraditional:
        return traditional_momentum_step(buffer, g, optimizer_.beta);
      case Method::Mvr:
        throw ConfigError("local steps are not defined for mvr");
    }
    throw ConfigError("unknown optimizer method");
  }

  Vector mean_of_good(const std::vector<Vector>& messages) const {
    std::vector<Vector> good;
    good.reserve(messages.size());
    for (int i = 0; i < workers_; ++i) {
      if (!std::binary_search(attack_.byzantine.begin(),
                              attack_.byzantine.end(), i))
        good.push_back(messages[static_cast<std::size_t>(i)]);
    }
    return mean_of(good);
  }

  // Centered clip composed with the convex momentum form scales tau by
  // (1 - beta); the traditional form keeps it fixed.
  Vector run_aggregator(const std::vector<Vector>& messages, double beta_t) {
    AggregatorSpec spec = aggregator_;
    if (spec.rule == AggregatorRule::CenteredClip &&
        optimizer_.method == Method::Sgdm && beta_t > 0.0) {
      spec.clip_radius = aggregator_.clip_radius * (1.0 - beta_t);
    }
    return aggregate(spec, state_.aggregator, messages);
  }

  const Problem& problem_;
  AggregatorSpec aggregator_;
  AttackSpec attack_;
  OptimizerSpec optimizer_;
  int workers_;
  std::uint64_t seed_;
  RoundState state_;
  double eta_ = 0.0;
  double alpha_ = 1.0;
  bool scheduled_ = false;
};

}  // namespace byzsim
