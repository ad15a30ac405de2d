#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "byzsim/errors.hpp"
#include "byzsim/problems.hpp"
#include "byzsim/rng.hpp"
#include "byzsim/stats.hpp"
#include "byzsim/vector_ops.hpp"

namespace byzsim {

enum class AttackKind {
  None,
  BitFlip,
  LabelFlip,
  Ipm,
  Alie,
  GaussianNoise,
  IndistinguishableShift,
};

// The Byzantine index set is fixed for the whole run.
struct AttackSpec {
  AttackKind kind = AttackKind::None;
  std::vector<int> byzantine;  // sorted worker indices

  double ipm_epsilon = 0.1;
  double alie_z = 0.0;      // resolved value (see alie_z below)
  double alie_sign = -1.0;  // perturbation direction: mean + sign * z * std
  double gaussian_sigma = 1e8;
  double shift_delta_tilde = 0.0;  // per-worker shift-event probability
  double shift_sigma = 0.0;        // shift magnitude = sigma * delta_tilde^{-1/2}
};

// Omniscient view of one round: every worker's honest-protocol message
// (Byzantine slots hold what they would have sent when behaving), the round
// index, the current model, and the problem for gradient queries.
struct AttackContext {
  const std::vector<Vector>& honest_messages;
  int round = 1;
  const Vector* model = nullptr;
  const Problem* problem = nullptr;
  RngStream* stream = nullptr;
};

struct AttackResult {
  std::vector<std::pair<int, Vector>> messages;  // (byzantine index, message)
  int active_count = 0;  // messages actually corrupted this round
};

// ALIE perturbation size z = Phi^{-1}((n - f - s)/(n - f)), s = floor(n/2 + 1) - f.
inline double alie_z(int n, int f) {
  if (n < 1 || f < 0 || 2 * f >= n)
    throw ConfigError("alie: need 0 <= f < n/2");
  const int s = n / 2 + 1 - f;
  const double p = static_cast<double>(n - f - s) / static_cast<double>(n - f);
  if (!(p > 0.0 && p < 1.0))
    throw ConfigError("alie: quantile argument " + std::to_string(p) +
                      " outside (0, 1); attack is vacuous");
  return normal_quantile(p);
}

// Label-flip corrupts the gradient computation itself; the round loop asks.
inline bool attack_flips_labels(const AttackSpec& spec) {
  return spec.kind == AttackKind::LabelFlip;
}

namespace detail {

inline std::vector<Vector> good_messages(const AttackSpec& spec,
                                         const AttackContext& ctx) {
  std::vector<Vector> good;
  good.reserve(ctx.honest_messages.size() - spec.byzantine.size());
  for (int i = 0; i < static_cast<int>(ctx.honest_messages.size()); ++i) {
    if (!std::binary_search(spec.byzantine.begin(), spec.byzantine.end(), i))
      good.push_back(ctx.honest_messages[i]);
  }
  return good;
}

}  // namespace detail

// Per-coordinate mean/std of the good messages; each Byzantine coordinate is
// mu_j + sign * z * s_j (sample std, divisor n_good - 1).
inline Vector alie_message(const std::vector<Vector>& good, double z,
                           double sign) {
  if (good.size() < 2)
    throw ConfigError("alie: need at least 2 good messages");
  const std::size_t d = good.front().size();
  Vector mu = mean_of(good);
  Vector out(d);
  for (std::size_t j = 0; j < d; ++j) {
    double ss = 0.0;
    for (const Vector& g : good) {
      const double dev = g[j] - mu[j];
      ss += dev * dev;
    }
    const double sd = std::sqrt(ss / static_cast<double>(good.size() - 1));
    out[j] = mu[j] + sign * z * sd;
  }
  return out;
}

// Produce the Byzantine messages for one round. Deterministic given
// (spec, ctx, stream).
inline AttackResult apply_attack(const AttackSpec& spec,
                                 const AttackContext& ctx) {
  AttackResult result;
  result.messages.reserve(spec.byzantine.size());
  const auto honest = [&](int idx) -> const Vector& {
    return ctx.honest_messages[static_cast<std::size_t>(idx)];
  };

  switch (spec.kind) {
    case AttackKind::None:
    case AttackKind::LabelFlip: {
      // none: behave honestly. label-flip: the corruption already happened at
      // the gradient stage, the protocol message is passed through.
      for (int idx : spec.byzantine) result.messages.emplace_back(idx, honest(idx));
      result.active_count =
          spec.kind == AttackKind::None ? 0 : static_cast<int>(spec.byzantine.size());
      return result;
    }
    case AttackKind::BitFlip: {
      for (int idx : spec.byzantine)
        result.messages.emplace_back(idx, scaled(honest(idx), -1.0));
      result.active_count = static_cast<int>(spec.byzantine.size());
      return result;
    }
    case AttackKind::Ipm: {
      const Vector msg =
          scaled(mean_of(detail::good_messages(spec, ctx)), -spec.ipm_epsilon);
      for (int idx : spec.byzantine) result.messages.emplace_back(idx, msg);
      result.active_count = static_cast<int>(spec.byzantine.size());
      return result;
    }
    case AttackKind::Alie: {
      const Vector msg = alie_message(detail::good_messages(spec, ctx),
                                      spec.alie_z, spec.alie_sign);
      for (int idx : spec.byzantine) result.messages.emplace_back(idx, msg);
      result.active_count = static_cast<int>(spec.byzantine.size());
      return result;
    }
    case AttackKind::GaussianNoise: {
      if (ctx.stream == nullptr)
        throw UsageError("gaussian attack requires an RNG stream");
      const std::size_t d = ctx.honest_messages.front().size();
      for (int idx : spec.byzantine) {
        Vector msg(d);
        for (double& x : msg) x = spec.gaussian_sigma * ctx.stream->gaussian();
        result.messages.emplace_back(idx, std::move(msg));
      }
      result.active_count = static_cast<int>(spec.byzantine.size());
      return result;
    }
    case AttackKind::IndistinguishableShift: {
      if (ctx.problem == nullptr ||
          ctx.problem->kind() != ProblemKind::ScalarLowerBound)
        throw ConfigError(
            "indistinguishable-shift requires the scalar-lower-bound problem");
      if (ctx.stream == nullptr)
        throw UsageError("indistinguishable-shift requires an RNG stream");
      const int n = static_cast<int>(ctx.honest_messages.size());
      const int c_t = ctx.stream->binomial(n, spec.shift_delta_tilde);
      const int k = std::min(static_cast<int>(spec.byzantine.size()), c_t);
      const double shift =
          spec.shift_delta_tilde > 0.0
              ? spec.shift_sigma / std::sqrt(spec.shift_delta_tilde)
              : 0.0;
      int applied = 0;
      for (int idx : spec.byzantine) {
        Vector msg = honest(idx);
        if (applied < k) {
          for (double& x : msg) x -= shift;
          ++applied;
        }
        result.messages.emplace_back(idx, std::move(msg));
      }
      result.active_count = shift != 0.0 ? k : 0;
      return result;
    }
  }
  throw ConfigError("unknown attack kind");
}

}  // namespace byzsim
