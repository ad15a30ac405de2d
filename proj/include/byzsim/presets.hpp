#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "byzsim/aggregators.hpp"
#include "byzsim/config.hpp"

namespace byzsim {

// Named experiment recipes covering the scenarios the library is built to
// reproduce: middle-seeker failures, time-coupled attacks, clipping behavior,
// and momentum defenses. Each returns a complete runnable config.

inline std::vector<std::string> preset_names() {
  return {"counterexample1", "counterexample3", "imbalance-gamma",
          "thm2-failure",    "thm5-contraction", "lemma4-variance",
          "ipm-cifar-analog", "alie-analog",      "tau-l-grid",
          "local-steps",     "gaussian-attack"};
}

inline ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.output = "out/" + name;
  c.seed = 1;

  if (name == "counterexample1") {
    // Bimodal +-1 gradient noise: the per-coordinate median (and any other
    // middle-seeker) returns +-1 every round and never settles, while the
    // mean concentrates near zero.
    c.problem.kind = "rademacher-scalar";
    c.problem.noise = NoiseDistribution::rademacher(1.0);
    c.aggregator.rule = "coordinate-median";
    c.optimizer = {"sgd", "constant", 0.1, 0.0, 0.1, 1, 4000.0};
    c.workers = 25;
    c.rounds = 200;
    return c;
  }
  if (name == "counterexample3") {
    // Skewed power-law gradient noise: median-seeking aggregation carries a
    // persistent bias of about median - mean = 2^(1/3) - 1.5 ~ -0.24, so
    // median-SGD parks roughly 0.24 away from the optimum.
    c.problem.kind = "heavy-tail-scalar";
    c.problem.optimum = 0.0;
    c.aggregator.rule = "coordinate-median";
    c.optimizer = {"sgd", "constant", 0.05, 0.0, 0.1, 1, 4000.0};
    c.workers = 49;
    c.rounds = 2000;
    return c;
  }
  if (name == "imbalance-gamma") {
    // Class-imbalanced softmax regression, no attackers. Sweep
    // aggregator.rule over {coordinate-median, rfa, trimmed-mean,
    // centered-clip} to compare final accuracies: the median-style rules cap
    // near the head-class share, clipping and trimming do not.
    c.problem.kind = "imbalanced-softmax";
    c.problem.softmax = SoftmaxConfig{};
    c.aggregator.rule = "centered-clip";
    c.aggregator.tau = 100.0;
    c.aggregator.iterations = 1;
    c.optimizer = {"sgd", "constant", 0.1, 0.0, 0.1, 1, 4000.0};
    c.workers = 25;
    c.rounds = 2000;
    return c;
  }
  if (name == "thm2-failure") {
    // Strongly convex scalar problem whose honest gradient noise hides a
    // rare, large, one-sided shift. The median ignores the shift and parks at
    // the wrong optimum; rerun with aggregator centered-clip and
    // optimizer.method sgdm (beta 0.9) to see the gap close.
    c.problem.kind = "scalar-lower-bound";
    c.problem.mu = 1.0;
    c.problem.sigma = 1.0;
    c.problem.delta_tilde = 0.05;
    c.aggregator.rule = "coordinate-median";
    c.optimizer = {"sgd", "constant", 0.1, 0.0, 0.1, 1, 4000.0};
    c.workers = 100;
    c.delta = 0.3;
    c.rounds = 3000;
    return c;
  }
  if (name == "thm5-contraction") {
    // Static mean estimation dressed as a zero-step-size run: good gradients
    // are i.i.d. around a fixed point with pairwise spread rho^2 = 2, the ipm
    // attackers sit at distance 10 rho in a fixed direction, and centered
    // clipping with the theory radius keeps the per-round aggregation error
    // far below the c * delta * rho^2 guarantee.
    const double rho_sq = 2.0;
    c.problem.kind = "quadratic";
    c.problem.dimension = 20;
    c.problem.smoothness = 1.0;
    c.problem.strong_convexity = 1.0;
    c.problem.noise = NoiseDistribution::gaussian(std::sqrt(rho_sq / 2.0 / 20.0));
    Vector x0(20, 0.0);
    x0[0] = 10.0 * std::sqrt(rho_sq) / 1.1;  // attacker distance 10 rho at eps 0.1
    c.problem.x0 = x0;
    c.aggregator.rule = "centered-clip";
    c.aggregator.tau = adaptive_clip_radius(rho_sq, rho_sq, 0.1).tau;
    c.aggregator.iterations = 1;
    c.attack.kind = "ipm";
    c.attack.epsilon = 0.1;
    c.optimizer = {"sgd", "constant", 0.0, 0.0, 0.1, 1, 4000.0};
    c.workers = 100;
    c.delta = 0.1;
    c.rounds = 500;
    return c;
  }
  if (name == "lemma4-variance") {
    // Worker momentum on a clean quadratic: per-worker momentum variance
    // decays like alpha + (1 - alpha)^(t-1), which is what makes momentum
    // messages easy to aggregate robustly.
    c.problem.kind = "quadratic";
    c.problem.dimension = 1;
    c.problem.noise = NoiseDistribution::gaussian(1.0);
    c.aggregator.rule = "mean";
    c.optimizer = {"sgdm", "constant", 0.01, 0.9, 0.1, 1, 4000.0};
    c.workers = 26;
    c.rounds = 50;
    return c;
  }
  if (name == "ipm-cifar-analog" || name == "alie-analog" ||
      name == "tau-l-grid") {
    // The image-classification benchmark shrunk to a noisy quadratic:
    // 25 workers, worker momentum 0.9, centered clip tau=100, l=1.
    // ipm uses 11 attackers, alie 5. For tau-l-grid, sweep aggregator.tau
    // over {0.1, 10, 1000} and aggregator.iterations over {1, 3, 5}.
    c.problem.kind = "quadratic";
    c.problem.dimension = 100;
    c.problem.smoothness = 1.0;
    c.problem.strong_convexity = 0.1;
    c.problem.noise = NoiseDistribution::gaussian(0.1);  // total variance 1
    c.aggregator.rule = "centered-clip";
    c.aggregator.tau = 100.0;
    c.aggregator.iterations = 1;
    c.optimizer = {"sgdm", "constant", 0.1, 0.9, 0.1, 1, 4000.0};
    c.workers = 25;
    c.rounds = 2000;
    if (name == "ipm-cifar-analog") {
      c.attack.kind = "ipm";
      c.attack.epsilon = 0.1;
      c.delta = 0.44;  // 11 of 25
    } else {
      c.attack.kind = "alie";
      c.delta = 0.2;  // 5 of 25
    }
    return c;
  }
  if (name == "local-steps") {
    // Centered clip composed with local SGD steps: workers send the model
    // delta over 8 local steps as a pseudo-gradient. Balanced, well-separated
    // classes so accuracy saturates quickly.
    c.problem.kind = "imbalanced-softmax";
    c.problem.softmax = SoftmaxConfig{};
    c.problem.softmax.gamma = 1.0;
    c.problem.softmax.twin_offset = 3.0;
    c.problem.softmax.spread = 0.5;
    c.aggregator.rule = "centered-clip";
    c.optimizer = {"sgd", "constant", 0.05, 0.0, 0.1, 8, 4000.0};
    c.workers = 16;
    c.rounds = 250;
    return c;
  }
  if (name == "gaussian-attack") {
    // Huge-magnitude gaussian messages against plain averaging: one poisoned
    // aggregate overflows the model and the run records a divergence instead
    // of crashing. The magnitude is scaled up from the classic 1e8 (which
    // saturates single-precision training) so the overflow is reproducible in
    // double precision. Rerun with aggregator centered-clip to see the attack
    // absorbed.
    c.problem.kind = "quadratic";
    c.problem.dimension = 10;
    c.problem.noise = NoiseDistribution::gaussian(0.3);
    c.aggregator.rule = "mean";
    c.attack.kind = "gaussian";
    c.attack.sigma = 1e160;
    c.optimizer = {"sgd", "constant", 0.1, 0.0, 0.1, 1, 4000.0};
    c.workers = 10;
    c.delta = 0.4;  // 4 of 10
    c.rounds = 50;
    return c;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

}  // namespace byzsim
