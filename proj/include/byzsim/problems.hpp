#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "byzsim/errors.hpp"
#include "byzsim/noise.hpp"
#include "byzsim/rng.hpp"
#include "byzsim/vector_ops.hpp"

namespace byzsim {

enum class ProblemKind {
  Quadratic,
  ScalarLowerBound,
  HeavyTailScalar,
  ImbalancedSoftmax,
  RademacherScalar,
};

struct GradientPair {
  Vector at_new;  // stochastic gradient at x_new
  Vector at_old;  // same draw evaluated at x_old
};

// A synthetic stochastic optimization problem with analytically known
// curvature and (where defined) optimum. Stochastic gradients are unbiased
// with variance below variance_bound().
class Problem {
 public:
  virtual ~Problem() = default;

  virtual ProblemKind kind() const = 0;
  virtual int dimension() const = 0;
  virtual double loss(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;

  // Both gradients of the pair use the same minibatch / noise draw, as the
  // MVR correction term requires.
  virtual GradientPair sample_gradient_pair(const Vector& x_new,
                                            const Vector& x_old,
                                            RngStream& stream,
                                            bool flip_labels = false) const = 0;

  virtual double smoothness() const = 0;       // L
  virtual double variance_bound() const = 0;   // sigma^2
  virtual double optimal_value() const = 0;    // f*
  virtual std::optional<Vector> optimum() const { return std::nullopt; }
  virtual Vector initial_point() const { return Vector(dimension(), 1.0); }

  virtual bool has_labels() const { return false; }
  virtual int num_classes() const { return 0; }
  virtual double accuracy(const Vector&) const {
    throw UsageError("accuracy is undefined for this problem");
  }

  Vector sample_gradient(const Vector& x, RngStream& stream,
                         bool flip_labels = false) const {
    return sample_gradient_pair(x, x, stream, flip_labels).at_new;
  }
};

// Counterexample stream: n i.i.d. +-1 draws (n must be odd so the median of
// the draw is never 0).
inline std::vector<double> rademacher_stream(int n, RngStream& stream) {
  if (n < 1 || n % 2 == 0)
    throw ConfigError("rademacher_stream: n must be odd and positive");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (double& x : out) x = stream.uniform() < 0.5 ? -1.0 : 1.0;
  return out;
}

namespace detail {

// f(x) = 1/2 x^T H x with diagonal H, eigenvalues spread linearly over
// [mu, L]. Stochastic gradient adds centered i.i.d. noise per coordinate.
class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(ProblemKind kind, int dim, double l_smooth, double mu,
                   NoiseDistribution noise)
      : kind_(kind), noise_(noise), eigenvalues_(static_cast<std::size_t>(dim)) {
    if (dim < 1) throw ConfigError("quadratic: dimension must be >= 1");
    if (!(mu > 0.0) || !(l_smooth >= mu))
      throw ConfigError("quadratic: need 0 < mu <= L");
    for (int j = 0; j < dim; ++j) {
      eigenvalues_[j] =
          dim == 1 ? l_smooth
                   : mu + (l_smooth - mu) * static_cast<double>(j) /
                             static_cast<double>(dim - 1);
    }
    l_ = l_smooth;
    noise_mean_ = noise_.population_mean();
  }

  ProblemKind kind() const override { return kind_; }
  int dimension() const override { return static_cast<int>(eigenvalues_.size()); }

  double loss(const Vector& x) const override {
    double s = 0.0;
    for (std::size_t j = 0; j < eigenvalues_.size(); ++j)
      s += eigenvalues_[j] * x[j] * x[j];
    return 0.5 * s;
  }

  Vector gradient(const Vector& x) const override {
    Vector g(eigenvalues_.size());
    for (std::size_t j = 0; j < eigenvalues_.size(); ++j)
      g[j] = eigenvalues_[j] * x[j];
    return g;
  }

  GradientPair sample_gradient_pair(const Vector& x_new, const Vector& x_old,
                                    RngStream& stream,
                                    bool flip_labels) const override {
    if (flip_labels) throw ConfigError("label flip requires a labeled problem");
    GradientPair pair{gradient(x_new), gradient(x_old)};
    for (std::size_t j = 0; j < eigenvalues_.size(); ++j) {
      const double xi = noise_.sample_one(stream) - noise_mean_;
      pair.at_new[j] += xi;
      pair.at_old[j] += xi;
    }
    return pair;
  }

  double smoothness() const override { return l_; }
  double variance_bound() const override {
    return static_cast<double>(eigenvalues_.size()) * noise_.population_variance();
  }
  double optimal_value() const override { return 0.0; }
  std::optional<Vector> optimum() const override {
    return zeros(eigenvalues_.size());
  }

 private:
  ProblemKind kind_;
  NoiseDistribution noise_;
  std::vector<double> eigenvalues_;
  double l_ = 1.0;
  double noise_mean_ = 0.0;
};

// The strongly-convex scalar construction behind the permutation-invariance
// lower bound: f(x) = mu/2 x^2 - G x with G = sigma sqrt(delta_tilde) and
// g(x) = mu x - sigma delta_tilde^{-1/2} with probability delta_tilde.
class ScalarLowerBoundProblem final : public Problem {
 public:
  ScalarLowerBoundProblem(double mu, double sigma, double delta_tilde)
      : mu_(mu), sigma_(sigma), delta_tilde_(delta_tilde) {
    if (!(mu > 0.0)) throw ConfigError("scalar-lower-bound: mu must be > 0");
    if (!(sigma >= 0.0)) throw ConfigError("scalar-lower-bound: sigma must be >= 0");
    if (!(delta_tilde > 0.0 && delta_tilde <= 1.0))
      throw ConfigError("scalar-lower-bound: delta-tilde must be in (0, 1]");
    shift_ = sigma_ / std::sqrt(delta_tilde_);
    g_ = sigma_ * std::sqrt(delta_tilde_);
  }

  ProblemKind kind() const override { return ProblemKind::ScalarLowerBound; }
  int dimension() const override { return 1; }

  double loss(const Vector& x) const override {
    return 0.5 * mu_ * x[0] * x[0] - g_ * x[0];
  }

  Vector gradient(const Vector& x) const override { return {mu_ * x[0] - g_}; }

  GradientPair sample_gradient_pair(const Vector& x_new, const Vector& x_old,
                                    RngStream& stream,
                                    bool flip_labels) const override {
    if (flip_labels) throw ConfigError("label flip requires a labeled problem");
    const bool shifted = stream.uniform() < delta_tilde_;
    const double s = shifted ? shift_ : 0.0;
    return {{mu_ * x_new[0] - s}, {mu_ * x_old[0] - s}};
  }

  double smoothness() const override { return mu_; }
  double variance_bound() const override { return sigma_ * sigma_; }
  double optimal_value() const override { return -0.5 * g_ * g_ / mu_; }
  std::optional<Vector> optimum() const override { return Vector{g_ / mu_}; }

  double shift_magnitude() const { return shift_; }

 private:
  double mu_;
  double sigma_;
  double delta_tilde_;
  double shift_ = 0.0;
  double g_ = 0.0;
};

// f(x) = 1/2 (x - x*)^2 with power-law gradient noise centered by its known
// mean 1.5, so SGD with the plain average is unbiased while median-style
// aggregates are biased by (median - mean) ~ -0.24.
class HeavyTailScalarProblem final : public Problem {
 public:
  explicit HeavyTailScalarProblem(double x_star)
      : x_star_(x_star), noise_(NoiseDistribution::power_law()) {}

  ProblemKind kind() const override { return ProblemKind::HeavyTailScalar; }
  int dimension() const override { return 1; }
  double loss(const Vector& x) const override {
    const double d = x[0] - x_star_;
    return 0.5 * d * d;
  }
  Vector gradient(const Vector& x) const override { return {x[0] - x_star_}; }

  GradientPair sample_gradient_pair(const Vector& x_new, const Vector& x_old,
                                    RngStream& stream,
                                    bool flip_labels) const override {
    if (flip_labels) throw ConfigError("label flip requires a labeled problem");
    const double xi = noise_.sample_one(stream) - 1.5;
    return {{x_new[0] - x_star_ + xi}, {x_old[0] - x_star_ + xi}};
  }

  double smoothness() const override { return 1.0; }
  double variance_bound() const override { return 0.75; }
  double optimal_value() const override { return 0.0; }
  std::optional<Vector> optimum() const override { return Vector{x_star_}; }

 private:
  double x_star_;
  NoiseDistribution noise_;
};

}  // namespace detail

struct SoftmaxConfig {
  int classes = 10;
  int feature_dim = 20;
  int dataset_size = 4096;  // pre-imbalance size; class k keeps ceil(gamma^k size/K)
  double gamma = 0.5;
  int batch_size = 1;
  double separation = 3.0;   // head-class center radius
  double twin_offset = 1.5;  // tail centers sit this far from a head center
  double spread = 0.8;       // within-class gaussian spread
};

namespace detail {

// Imbalanced softmax regression on synthetic gaussian clusters. The two head
// classes get well-separated centers; each tail class is a fine-grained twin
// of a head class (center = head center + small offset), so learning the tail
// takes aggregation precision that middle-seeking rules lack. Parameters are
// a row-major K x (d+1) matrix, last column acting on a constant 1 feature.
class ImbalancedSoftmaxProblem final : public Problem {
 public:
  ImbalancedSoftmaxProblem(const SoftmaxConfig& cfg, std::uint64_t seed)
      : cfg_(cfg) {
    if (cfg.classes < 2) throw ConfigError("softmax: need at least 2 classes");
    if (cfg.feature_dim < 1) throw ConfigError("softmax: feature-dim must be >= 1");
    if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0))
      throw ConfigError("softmax: gamma must be in (0, 1]");
    if (cfg.dataset_size < cfg.classes)
      throw ConfigError("softmax: dataset-size must be >= classes");
    if (cfg.batch_size < 1) throw ConfigError("softmax: batch-size must be >= 1");

    RngStream stream(seed, kDatasetLane, 0);
    const int k = cfg.classes;
    const int d = cfg.feature_dim;
    std::vector<Vector> centers(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
      Vector dir(static_cast<std::size_t>(d));
      for (double& x : dir) x = stream.gaussian();
      const double len = norm(dir);
      if (c < 2 || k <= 2) {
        centers[c] = scaled(dir, cfg.separation / len);
      } else {
        centers[c] = centers[c % 2];
        axpy(centers[c], cfg.twin_offset / len, dir);
      }
    }

    const double base = static_cast<double>(cfg.dataset_size) /
                        static_cast<double>(k);
    for (int c = 0; c < k; ++c) {
      const int count = static_cast<int>(
          std::ceil(std::pow(cfg.gamma, c) * base));
      for (int i = 0; i < count; ++i) {
        Vector x = centers[c];
        for (double& xj : x) xj += cfg.spread * stream.gaussian();
        features_.push_back(std::move(x));
        labels_.push_back(c);
      }
    }

    double max_sq = 0.0;
    for (const Vector& x : features_)
      max_sq = std::max(max_sq, squared_norm(x) + 1.0);  // +1 for the bias feature
    smoothness_ = 0.5 * max_sq;
    variance_bound_ = 8.0 * max_sq;

    if (cfg.batch_size > static_cast<int>(features_.size()))
      throw ConfigError("softmax: batch-size exceeds dataset size");
  }

  ProblemKind kind() const override { return ProblemKind::ImbalancedSoftmax; }
  int dimension() const override {
    return cfg_.classes * (cfg_.feature_dim + 1);
  }
  bool has_labels() const override { return true; }
  int num_classes() const override { return cfg_.classes; }

  double loss(const Vector& w) const override {
    double total = 0.0;
    std::vector<double> logits(static_cast<std::size_t>(cfg_.classes));
    for (std::size_t i = 0; i < features_.size(); ++i) {
      compute_logits(w, features_[i], logits);
      const double m = *std::max_element(logits.begin(), logits.end());
      double z = 0.0;
      for (double l : logits) z += std::exp(l - m);
      total += std::log(z) + m - logits[labels_[i]];
    }
    return total / static_cast<double>(features_.size());
  }

  Vector gradient(const Vector& w) const override {
    Vector g(w.size(), 0.0);
    for (std::size_t i = 0; i < features_.size(); ++i)
      accumulate_sample_gradient(w, i, labels_[i], g);
    const double inv = 1.0 / static_cast<double>(features_.size());
    for (double& x : g) x *= inv;
    return g;
  }

  GradientPair sample_gradient_pair(const Vector& x_new, const Vector& x_old,
                                    RngStream& stream,
                                    bool flip_labels) const override {
    GradientPair pair{zeros(x_new.size()), zeros(x_old.size())};
    for (int b = 0; b < cfg_.batch_size; ++b) {
      const std::size_t i = static_cast<std::size_t>(
          stream.uniform() * static_cast<double>(features_.size()));
      int label = labels_[i];
      if (flip_labels) label = cfg_.classes - 1 - label;
      accumulate_sample_gradient(x_new, i, label, pair.at_new);
      accumulate_sample_gradient(x_old, i, label, pair.at_old);
    }
    const double inv = 1.0 / static_cast<double>(cfg_.batch_size);
    for (double& x : pair.at_new) x *= inv;
    for (double& x : pair.at_old) x *= inv;
    return pair;
  }

  double smoothness() const override { return smoothness_; }
  double variance_bound() const override { return variance_bound_; }
  double optimal_value() const override { return 0.0; }
  Vector initial_point() const override { return zeros(dimension()); }

  double accuracy(const Vector& w) const override {
    std::vector<double> logits(static_cast<std::size_t>(cfg_.classes));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < features_.size(); ++i) {
      compute_logits(w, features_[i], logits);
      const std::size_t pred = static_cast<std::size_t>(
          std::max_element(logits.begin(), logits.end()) - logits.begin());
      if (static_cast<int>(pred) == labels_[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(features_.size());
  }

  const std::vector<Vector>& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  int class_count(int c) const {
    int n = 0;
    for (int l : labels_)
      if (l == c) ++n;
    return n;
  }

 private:
  void compute_logits(const Vector& w, const Vector& x,
                      std::vector<double>& logits) const {
    const int d = cfg_.feature_dim;
    for (int c = 0; c < cfg_.classes; ++c) {
      const double* row = w.data() + static_cast<std::size_t>(c) * (d + 1);
      double z = row[d];  // bias
      for (int j = 0; j < d; ++j) z += row[j] * x[j];
      logits[c] = z;
    }
  }

  // g += (softmax(Wx) - e_label) (x, 1)^T
  void accumulate_sample_gradient(const Vector& w, std::size_t i, int label,
                                  Vector& g) const {
    const Vector& x = features_[i];
    const int d = cfg_.feature_dim;
    std::vector<double> p(static_cast<std::size_t>(cfg_.classes));
    compute_logits(w, x, p);
    const double m = *std::max_element(p.begin(), p.end());
    double z = 0.0;
    for (double& v : p) {
      v = std::exp(v - m);
      z += v;
    }
    for (double& v : p) v /= z;
    p[label] -= 1.0;
    for (int c = 0; c < cfg_.classes; ++c) {
      double* row = g.data() + static_cast<std::size_t>(c) * (d + 1);
      for (int j = 0; j < d; ++j) row[j] += p[c] * x[j];
      row[d] += p[c];
    }
  }

  SoftmaxConfig cfg_;
  std::vector<Vector> features_;
  std::vector<int> labels_;
  double smoothness_ = 0.0;
  double variance_bound_ = 0.0;
};

}  // namespace detail

inline std::unique_ptr<Problem> make_quadratic(int dim, double l_smooth,
                                               double mu,
                                               NoiseDistribution noise) {
  return std::make_unique<detail::QuadraticProblem>(ProblemKind::Quadratic, dim,
                                                    l_smooth, mu, noise);
}

inline std::unique_ptr<Problem> make_rademacher_scalar(double scale = 1.0) {
  return std::make_unique<detail::QuadraticProblem>(
      ProblemKind::RademacherScalar, 1, 1.0, 1.0,
      NoiseDistribution::rademacher(scale));
}

inline std::unique_ptr<Problem> make_scalar_lower_bound(double mu, double sigma,
                                                        double delta_tilde) {
  return std::make_unique<detail::ScalarLowerBoundProblem>(mu, sigma,
                                                           delta_tilde);
}

inline std::unique_ptr<Problem> make_heavy_tail_scalar(double x_star = 0.0) {
  return std::make_unique<detail::HeavyTailScalarProblem>(x_star);
}

inline std::unique_ptr<Problem> make_imbalanced_softmax(const SoftmaxConfig& cfg,
                                                        std::uint64_t seed) {
  return std::make_unique<detail::ImbalancedSoftmaxProblem>(cfg, seed);
}

}  // namespace byzsim
