#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "byzsim/aggregators.hpp"
#include "byzsim/attacks.hpp"
#include "byzsim/errors.hpp"
#include "byzsim/noise.hpp"
#include "byzsim/optimizer.hpp"
#include "byzsim/problems.hpp"

namespace byzsim {

using json = nlohmann::json;

struct ProblemConfig {
  std::string kind = "quadratic";
  // quadratic / rademacher-scalar
  int dimension = 10;
  double smoothness = 1.0;
  double strong_convexity = 1.0;
  NoiseDistribution noise = NoiseDistribution::gaussian(1.0);
  // scalar-lower-bound
  double mu = 1.0;
  double sigma = 1.0;
  double delta_tilde = 0.05;
  // heavy-tail-scalar
  double optimum = 0.0;
  // imbalanced-softmax
  SoftmaxConfig softmax;
  std::optional<std::string> export_dataset;
  // optional starting point override
  std::optional<Vector> x0;
};

struct AggregatorConfig {
  std::string rule = "mean";
  std::optional<int> trim;    // absent: floor(delta * workers)
  int weiszfeld_iterations = 3;
  double smoothing = 1e-6;
  std::optional<int> krum_f;  // absent: floor(delta * workers)
  double tau = 100.0;
  int iterations = 1;
  bool warm_start = true;
};

struct AttackConfig {
  std::string kind = "none";
  std::optional<std::vector<int>> byzantine;  // absent: the last floor(delta*n) workers
  double epsilon = 0.1;                       // ipm strength
  std::optional<double> z;                    // alie; absent: computed from (n, f)
  double alie_sign = -1.0;
  double sigma = 1e8;                         // gaussian attack std
  std::optional<double> delta_tilde;          // shift; absent: delta / 6
  std::optional<double> shift_sigma;          // shift; absent: problem sigma
};

struct OptimizerConfig {
  std::string method = "sgd";
  std::string schedule = "constant";
  double eta = 0.1;
  double beta = 0.9;
  double alpha = 0.1;
  int local_steps = 1;
  double schedule_c = 4000.0;
};

struct ExperimentConfig {
  ProblemConfig problem;
  AggregatorConfig aggregator;
  AttackConfig attack;
  OptimizerConfig optimizer;
  int workers = 10;
  double delta = 0.0;
  std::uint64_t seed = 42;
  int rounds = 100;
  int record_every = 1;
  std::string output = "out";
};

// ---------------------------------------------------------------------------
// JSON (de)serialization. Serialization always materializes every key so a
// resolved config round-trips exactly.

namespace detail {

inline void check_keys(const json& j, const char* scope,
                       std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw ConfigError(std::string(scope) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) { ok = true; break; }
    if (!ok)
      throw ConfigError(std::string(scope) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void fetch(const json& j, const char* scope, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(scope) + "." + key + ": invalid value");
  }
}

template <typename T>
void fetch_optional(const json& j, const char* scope, const char* key,
                    std::optional<T>& out) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(scope) + "." + key + ": invalid value");
  }
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  if (v.has_value()) return json(*v);
  return json(nullptr);
}

}  // namespace detail

inline json to_json(const NoiseDistribution& n) {
  const char* kind = nullptr;
  switch (n.kind) {
    case NoiseKind::Gaussian: kind = "gaussian"; break;
    case NoiseKind::RademacherScaled: kind = "rademacher"; break;
    case NoiseKind::PowerLaw: kind = "power-law"; break;
    case NoiseKind::TwoPoint: kind = "two-point"; break;
  }
  return json{{"kind", kind},   {"sigma", n.sigma}, {"scale", n.scale},
              {"v0", n.v0},     {"v1", n.v1},       {"p0", n.p0}};
}

inline NoiseDistribution noise_from_json(const json& j) {
  detail::check_keys(j, "problem.noise", {"kind", "sigma", "scale", "v0", "v1", "p0"});
  NoiseDistribution n;
  std::string kind = "gaussian";
  detail::fetch(j, "problem.noise", "kind", kind);
  if (kind == "gaussian") n.kind = NoiseKind::Gaussian;
  else if (kind == "rademacher") n.kind = NoiseKind::RademacherScaled;
  else if (kind == "power-law") n.kind = NoiseKind::PowerLaw;
  else if (kind == "two-point") n.kind = NoiseKind::TwoPoint;
  else throw ConfigError("problem.noise.kind: unknown value '" + kind + "'");
  detail::fetch(j, "problem.noise", "sigma", n.sigma);
  detail::fetch(j, "problem.noise", "scale", n.scale);
  detail::fetch(j, "problem.noise", "v0", n.v0);
  detail::fetch(j, "problem.noise", "v1", n.v1);
  detail::fetch(j, "problem.noise", "p0", n.p0);
  if (n.sigma < 0.0) throw ConfigError("problem.noise.sigma: must be >= 0");
  if (n.p0 < 0.0 || n.p0 > 1.0)
    throw ConfigError("problem.noise.p0: must be in [0, 1]");
  return n;
}

inline json to_json(const SoftmaxConfig& s) {
  return json{{"classes", s.classes},
              {"feature-dim", s.feature_dim},
              {"dataset-size", s.dataset_size},
              {"gamma", s.gamma},
              {"batch-size", s.batch_size},
              {"separation", s.separation},
              {"twin-offset", s.twin_offset},
              {"spread", s.spread}};
}

inline SoftmaxConfig softmax_from_json(const json& j) {
  detail::check_keys(j, "problem.softmax",
                     {"classes", "feature-dim", "dataset-size", "gamma",
                      "batch-size", "separation", "twin-offset", "spread"});
  SoftmaxConfig s;
  detail::fetch(j, "problem.softmax", "classes", s.classes);
  detail::fetch(j, "problem.softmax", "feature-dim", s.feature_dim);
  detail::fetch(j, "problem.softmax", "dataset-size", s.dataset_size);
  detail::fetch(j, "problem.softmax", "gamma", s.gamma);
  detail::fetch(j, "problem.softmax", "batch-size", s.batch_size);
  detail::fetch(j, "problem.softmax", "separation", s.separation);
  detail::fetch(j, "problem.softmax", "twin-offset", s.twin_offset);
  detail::fetch(j, "problem.softmax", "spread", s.spread);
  return s;
}

inline json to_json(const ProblemConfig& p) {
  return json{{"kind", p.kind},
              {"dimension", p.dimension},
              {"smoothness", p.smoothness},
              {"strong-convexity", p.strong_convexity},
              {"noise", to_json(p.noise)},
              {"mu", p.mu},
              {"sigma", p.sigma},
              {"delta-tilde", p.delta_tilde},
              {"optimum", p.optimum},
              {"softmax", to_json(p.softmax)},
              {"export-dataset", detail::optional_json(p.export_dataset)},
              {"x0", detail::optional_json(p.x0)}};
}

inline ProblemConfig problem_from_json(const json& j) {
  detail::check_keys(j, "problem",
                     {"kind", "dimension", "smoothness", "strong-convexity",
                      "noise", "mu", "sigma", "delta-tilde", "optimum",
                      "softmax", "export-dataset", "x0"});
  ProblemConfig p;
  detail::fetch(j, "problem", "kind", p.kind);
  detail::fetch(j, "problem", "dimension", p.dimension);
  detail::fetch(j, "problem", "smoothness", p.smoothness);
  detail::fetch(j, "problem", "strong-convexity", p.strong_convexity);
  if (j.contains("noise")) p.noise = noise_from_json(j.at("noise"));
  detail::fetch(j, "problem", "mu", p.mu);
  detail::fetch(j, "problem", "sigma", p.sigma);
  detail::fetch(j, "problem", "delta-tilde", p.delta_tilde);
  detail::fetch(j, "problem", "optimum", p.optimum);
  if (j.contains("softmax")) p.softmax = softmax_from_json(j.at("softmax"));
  detail::fetch_optional(j, "problem", "export-dataset", p.export_dataset);
  detail::fetch_optional(j, "problem", "x0", p.x0);
  return p;
}

inline json to_json(const AggregatorConfig& a) {
  return json{{"rule", a.rule},
              {"trim", detail::optional_json(a.trim)},
              {"weiszfeld-iterations", a.weiszfeld_iterations},
              {"smoothing", a.smoothing},
              {"krum-f", detail::optional_json(a.krum_f)},
              {"tau", a.tau},
              {"iterations", a.iterations},
              {"warm-start", a.warm_start}};
}

inline AggregatorConfig aggregator_from_json(const json& j) {
  detail::check_keys(j, "aggregator",
                     {"rule", "trim", "weiszfeld-iterations", "smoothing",
                      "krum-f", "tau", "iterations", "warm-start"});
  AggregatorConfig a;
  detail::fetch(j, "aggregator", "rule", a.rule);
  detail::fetch_optional(j, "aggregator", "trim", a.trim);
  detail::fetch(j, "aggregator", "weiszfeld-iterations", a.weiszfeld_iterations);
  detail::fetch(j, "aggregator", "smoothing", a.smoothing);
  detail::fetch_optional(j, "aggregator", "krum-f", a.krum_f);
  detail::fetch(j, "aggregator", "tau", a.tau);
  detail::fetch(j, "aggregator", "iterations", a.iterations);
  detail::fetch(j, "aggregator", "warm-start", a.warm_start);
  return a;
}

inline json to_json(const AttackConfig& a) {
  return json{{"kind", a.kind},
              {"byzantine", detail::optional_json(a.byzantine)},
              {"epsilon", a.epsilon},
              {"z", detail::optional_json(a.z)},
              {"alie-sign", a.alie_sign},
              {"sigma", a.sigma},
              {"delta-tilde", detail::optional_json(a.delta_tilde)},
              {"shift-sigma", detail::optional_json(a.shift_sigma)}};
}

inline AttackConfig attack_from_json(const json& j) {
  detail::check_keys(j, "attack",
                     {"kind", "byzantine", "epsilon", "z", "alie-sign", "sigma",
                      "delta-tilde", "shift-sigma"});
  AttackConfig a;
  detail::fetch(j, "attack", "kind", a.kind);
  detail::fetch_optional(j, "attack", "byzantine", a.byzantine);
  detail::fetch(j, "attack", "epsilon", a.epsilon);
  detail::fetch_optional(j, "attack", "z", a.z);
  detail::fetch(j, "attack", "alie-sign", a.alie_sign);
  detail::fetch(j, "attack", "sigma", a.sigma);
  detail::fetch_optional(j, "attack", "delta-tilde", a.delta_tilde);
  detail::fetch_optional(j, "attack", "shift-sigma", a.shift_sigma);
  return a;
}

inline json to_json(const OptimizerConfig& o) {
  return json{{"method", o.method},       {"schedule", o.schedule},
              {"eta", o.eta},             {"beta", o.beta},
              {"alpha", o.alpha},         {"local-steps", o.local_steps},
              {"schedule-c", o.schedule_c}};
}

inline OptimizerConfig optimizer_from_json(const json& j) {
  detail::check_keys(j, "optimizer",
                     {"method", "schedule", "eta", "beta", "alpha",
                      "local-steps", "schedule-c"});
  OptimizerConfig o;
  detail::fetch(j, "optimizer", "method", o.method);
  detail::fetch(j, "optimizer", "schedule", o.schedule);
  detail::fetch(j, "optimizer", "eta", o.eta);
  detail::fetch(j, "optimizer", "beta", o.beta);
  detail::fetch(j, "optimizer", "alpha", o.alpha);
  detail::fetch(j, "optimizer", "local-steps", o.local_steps);
  detail::fetch(j, "optimizer", "schedule-c", o.schedule_c);
  return o;
}

inline json to_json(const ExperimentConfig& c) {
  return json{{"problem", to_json(c.problem)},
              {"aggregator", to_json(c.aggregator)},
              {"attack", to_json(c.attack)},
              {"optimizer", to_json(c.optimizer)},
              {"workers", c.workers},
              {"delta", c.delta},
              {"seed", c.seed},
              {"rounds", c.rounds},
              {"record-every", c.record_every},
              {"output", c.output}};
}

inline ExperimentConfig config_from_json(const json& j) {
  detail::check_keys(j, "config",
                     {"problem", "aggregator", "attack", "optimizer", "workers",
                      "delta", "seed", "rounds", "record-every", "output"});
  ExperimentConfig c;
  if (j.contains("problem")) c.problem = problem_from_json(j.at("problem"));
  if (j.contains("aggregator")) c.aggregator = aggregator_from_json(j.at("aggregator"));
  if (j.contains("attack")) c.attack = attack_from_json(j.at("attack"));
  if (j.contains("optimizer")) c.optimizer = optimizer_from_json(j.at("optimizer"));
  detail::fetch(j, "config", "workers", c.workers);
  detail::fetch(j, "config", "delta", c.delta);
  detail::fetch(j, "config", "seed", c.seed);
  detail::fetch(j, "config", "rounds", c.rounds);
  detail::fetch(j, "config", "record-every", c.record_every);
  detail::fetch(j, "config", "output", c.output);
  return c;
}

inline std::string serialize_config(const ExperimentConfig& c) {
  return to_json(c).dump(2);
}

inline ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return config_from_json(j);
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return to_json(a) == to_json(b);
}

// ---------------------------------------------------------------------------
// Resolution: materialize every default, build the problem, and translate the
// string configuration into the typed specs the simulator consumes.

namespace detail {

// Forwards to an inner problem but starts optimization from a fixed point.
class WithInitialPoint final : public Problem {
 public:
  WithInitialPoint(std::unique_ptr<Problem> inner, Vector x0)
      : inner_(std::move(inner)), x0_(std::move(x0)) {
    if (static_cast<int>(x0_.size()) != inner_->dimension())
      throw ConfigError("problem.x0: dimension mismatch");
  }
  ProblemKind kind() const override { return inner_->kind(); }
  int dimension() const override { return inner_->dimension(); }
  double loss(const Vector& x) const override { return inner_->loss(x); }
  Vector gradient(const Vector& x) const override { return inner_->gradient(x); }
  GradientPair sample_gradient_pair(const Vector& xn, const Vector& xo,
                                    RngStream& s, bool f) const override {
    return inner_->sample_gradient_pair(xn, xo, s, f);
  }
  double smoothness() const override { return inner_->smoothness(); }
  double variance_bound() const override { return inner_->variance_bound(); }
  double optimal_value() const override { return inner_->optimal_value(); }
  std::optional<Vector> optimum() const override { return inner_->optimum(); }
  Vector initial_point() const override { return x0_; }
  bool has_labels() const override { return inner_->has_labels(); }
  int num_classes() const override { return inner_->num_classes(); }
  double accuracy(const Vector& x) const override { return inner_->accuracy(x); }
  const Problem& inner() const { return *inner_; }

 private:
  std::unique_ptr<Problem> inner_;
  Vector x0_;
};

}  // namespace detail

// Strips an initial-point wrapper so callers can reach the concrete problem.
inline const Problem& underlying_problem(const Problem& p) {
  if (const auto* wrapped = dynamic_cast<const detail::WithInitialPoint*>(&p))
    return wrapped->inner();
  return p;
}

inline std::unique_ptr<Problem> make_problem(const ProblemConfig& p,
                                             std::uint64_t seed) {
  std::unique_ptr<Problem> problem;
  if (p.kind == "quadratic") {
    problem = make_quadratic(p.dimension, p.smoothness, p.strong_convexity, p.noise);
  } else if (p.kind == "rademacher-scalar") {
    problem = make_rademacher_scalar(p.noise.kind == NoiseKind::RademacherScaled
                                         ? p.noise.scale
                                         : 1.0);
  } else if (p.kind == "scalar-lower-bound") {
    problem = make_scalar_lower_bound(p.mu, p.sigma, p.delta_tilde);
  } else if (p.kind == "heavy-tail-scalar") {
    problem = make_heavy_tail_scalar(p.optimum);
  } else if (p.kind == "imbalanced-softmax") {
    problem = make_imbalanced_softmax(p.softmax, seed);
  } else {
    throw ConfigError("problem.kind: unknown value '" + p.kind + "'");
  }
  if (p.x0.has_value())
    problem = std::make_unique<detail::WithInitialPoint>(std::move(problem), *p.x0);
  return problem;
}

struct ResolvedExperiment {
  ExperimentConfig config;  // every optional filled in
  std::unique_ptr<Problem> problem;
  AggregatorSpec aggregator;
  AttackSpec attack;
  OptimizerSpec optimizer;
  std::vector<std::string> warnings;
};

inline AggregatorRule aggregator_rule_from_string(const std::string& rule) {
  if (rule == "mean") return AggregatorRule::Mean;
  if (rule == "coordinate-median") return AggregatorRule::CoordinateMedian;
  if (rule == "trimmed-mean") return AggregatorRule::TrimmedMean;
  if (rule == "rfa") return AggregatorRule::Rfa;
  if (rule == "krum") return AggregatorRule::Krum;
  if (rule == "centered-clip") return AggregatorRule::CenteredClip;
  throw ConfigError("aggregator.rule: unknown value '" + rule + "'");
}

inline AttackKind attack_kind_from_string(const std::string& kind) {
  if (kind == "none") return AttackKind::None;
  if (kind == "bit-flip") return AttackKind::BitFlip;
  if (kind == "label-flip") return AttackKind::LabelFlip;
  if (kind == "ipm") return AttackKind::Ipm;
  if (kind == "alie") return AttackKind::Alie;
  if (kind == "gaussian") return AttackKind::GaussianNoise;
  if (kind == "indistinguishable-shift") return AttackKind::IndistinguishableShift;
  throw ConfigError("attack.kind: unknown value '" + kind + "'");
}

inline Method method_from_string(const std::string& m) {
  if (m == "sgd") return Method::Sgd;
  if (m == "sgdm") return Method::Sgdm;
  if (m == "sgdm-traditional") return Method::SgdmTraditional;
  if (m == "mvr") return Method::Mvr;
  throw ConfigError("optimizer.method: unknown value '" + m + "'");
}

inline StepSchedule schedule_from_string(const std::string& s) {
  if (s == "constant") return StepSchedule::Constant;
  if (s == "thm6") return StepSchedule::Thm6;
  if (s == "thm3") return StepSchedule::Thm3;
  if (s == "mvr") return StepSchedule::MvrTheory;
  throw ConfigError("optimizer.schedule: unknown value '" + s + "'");
}

inline ResolvedExperiment resolve(const ExperimentConfig& input) {
  ResolvedExperiment r;
  r.config = input;
  ExperimentConfig& c = r.config;

  if (c.workers < 1) throw ConfigError("workers: must be >= 1");
  if (c.rounds < 1) throw ConfigError("rounds: must be >= 1");
  if (c.record_every < 1) throw ConfigError("record-every: must be >= 1");
  if (c.delta < 0.0 || c.delta >= 0.5)
    throw ConfigError("delta: must be in [0, 0.5)");

  const int budget =
      static_cast<int>(std::floor(c.delta * c.workers + 1e-9));
  if (!c.attack.byzantine.has_value()) {
    std::vector<int> byz;
    for (int i = c.workers - budget; i < c.workers; ++i) byz.push_back(i);
    c.attack.byzantine = byz;
  } else {
    std::vector<int>& byz = *c.attack.byzantine;
    std::sort(byz.begin(), byz.end());
    if (std::adjacent_find(byz.begin(), byz.end()) != byz.end())
      throw ConfigError("attack.byzantine: duplicate index");
    for (int idx : byz)
      if (idx < 0 || idx >= c.workers)
        throw ConfigError("attack.byzantine: index out of range");
    if (static_cast<int>(byz.size()) != budget)
      throw ConfigError(
          "attack.byzantine: size must equal floor(delta * workers) = " +
          std::to_string(budget));
  }

  r.problem = make_problem(c.problem, c.seed);

  // Aggregator spec.
  r.aggregator.rule = aggregator_rule_from_string(c.aggregator.rule);
  if (!c.aggregator.trim.has_value()) c.aggregator.trim = budget;
  if (!c.aggregator.krum_f.has_value()) c.aggregator.krum_f = budget;
  r.aggregator.trim_count = *c.aggregator.trim;
  r.aggregator.weiszfeld_iterations = c.aggregator.weiszfeld_iterations;
  r.aggregator.weiszfeld_smoothing = c.aggregator.smoothing;
  r.aggregator.krum_byzantine = *c.aggregator.krum_f;
  r.aggregator.clip_radius = c.aggregator.tau;
  r.aggregator.clip_iterations = c.aggregator.iterations;
  r.aggregator.warm_start = c.aggregator.warm_start;
  if (r.aggregator.rule == AggregatorRule::TrimmedMean &&
      2 * r.aggregator.trim_count >= c.workers)
    throw ConfigError("aggregator.trim: need 2b < workers");
  if (r.aggregator.rule == AggregatorRule::Krum &&
      c.workers - r.aggregator.krum_byzantine - 2 < 1)
    throw ConfigError("aggregator.krum-f: need workers - f - 2 >= 1");
  if (r.aggregator.rule == AggregatorRule::CenteredClip && c.delta > 0.1)
    r.warnings.push_back(
        "delta exceeds the centered-clip breakdown guarantee (0.1); the run "
        "proceeds but the robustness bound no longer applies");

  // Attack spec.
  r.attack.kind = attack_kind_from_string(c.attack.kind);
  r.attack.byzantine = *c.attack.byzantine;
  r.attack.ipm_epsilon = c.attack.epsilon;
  r.attack.alie_sign = c.attack.alie_sign;
  r.attack.gaussian_sigma = c.attack.sigma;
  if (r.attack.kind == AttackKind::Alie && !c.attack.z.has_value())
    c.attack.z = alie_z(c.workers, static_cast<int>(r.attack.byzantine.size()));
  if (c.attack.z.has_value()) r.attack.alie_z = *c.attack.z;
  if (!c.attack.delta_tilde.has_value()) c.attack.delta_tilde = c.delta / 6.0;
  r.attack.shift_delta_tilde = *c.attack.delta_tilde;
  if (!c.attack.shift_sigma.has_value()) {
    c.attack.shift_sigma =
        c.problem.kind == "scalar-lower-bound" ? c.problem.sigma : 1.0;
  }
  r.attack.shift_sigma = *c.attack.shift_sigma;
  if (r.attack.kind == AttackKind::IndistinguishableShift &&
      r.problem->kind() != ProblemKind::ScalarLowerBound)
    throw ConfigError(
        "attack.kind: indistinguishable-shift requires problem.kind = "
        "scalar-lower-bound");
  if (r.attack.kind == AttackKind::LabelFlip && !r.problem->has_labels())
    throw ConfigError("attack.kind: label-flip requires a labeled problem");

  // Optimizer spec.
  r.optimizer.method = method_from_string(c.optimizer.method);
  r.optimizer.schedule = schedule_from_string(c.optimizer.schedule);
  r.optimizer.eta = c.optimizer.eta;
  r.optimizer.beta = c.optimizer.beta;
  r.optimizer.alpha = c.optimizer.alpha;
  r.optimizer.local_steps = c.optimizer.local_steps;
  r.optimizer.rounds = c.rounds;
  r.optimizer.schedule_c = c.optimizer.schedule_c;
  if (c.optimizer.eta < 0.0) throw ConfigError("optimizer.eta: must be >= 0");
  if (c.optimizer.beta < 0.0 || c.optimizer.beta >= 1.0)
    throw ConfigError("optimizer.beta: must be in [0, 1)");

  return r;
}

}  // namespace byzsim
