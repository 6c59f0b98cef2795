#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace policytwin {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
  double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
  bool operator==(const Interval&) const = default;
};

struct Trial {
  std::vector<double> x;
  double loss = 0.0;
};

/// Proposes the next point given every completed trial.
class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual std::vector<double> suggest(std::span<const Trial> history) = 0;
};

class RandomSampler final : public Sampler {
 public:
  RandomSampler(std::vector<Interval> space, std::uint64_t seed);
  std::vector<double> suggest(std::span<const Trial> history) override;

 private:
  std::vector<Interval> space_;
  std::mt19937_64 rng_;
};

struct TpeOptions {
  double gamma = 0.25;       // fraction of trials forming the "good" density
  int startup_trials = 10;   // random proposals before the model kicks in
  int candidates = 24;       // draws from l(x) scored per suggestion
  double prior_weight = 1.0;
  double min_bandwidth = 0.01;  // as a fraction of each dimension's width
};

/// Multivariate Tree-structured Parzen Estimator.
///
/// Completed trials are split into the best ceil(gamma * n) and the rest.
/// Each group becomes a Parzen mixture of product truncated Gaussians (one
/// kernel per trial, Scott-rule bandwidths, plus a broad prior kernel at the
/// center of the space). Candidates are drawn from the good mixture l(x) and
/// the one maximizing log l(x) - log g(x) is proposed.
class TpeSampler final : public Sampler {
 public:
  TpeSampler(std::vector<Interval> space, std::uint64_t seed, TpeOptions options = {});
  std::vector<double> suggest(std::span<const Trial> history) override;

 private:
  struct Mixture;
  Mixture build_mixture(std::span<const Trial* const> trials) const;
  std::vector<double> draw(const Mixture& m);
  double log_density(const Mixture& m, std::span<const double> x) const;

  std::vector<Interval> space_;
  std::mt19937_64 rng_;
  TpeOptions options_;
};

struct SearchResult {
  std::vector<Trial> trials;
  std::size_t best_index = 0;

  const Trial& best() const { return trials[best_index]; }
};

/// Evaluates `initial` as trial 0, then asks `sampler` for trials-1 more.
/// The best trial is the lowest loss, earliest on ties, so the result is
/// never worse than the initializer.
SearchResult minimize(const std::function<double(std::span<const double>)>& objective,
                      std::vector<double> initial, int trials, Sampler& sampler);

}  // namespace policytwin
