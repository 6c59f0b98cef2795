#include "policytwin/tpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "policytwin/digest.hpp"
#include "policytwin/error.hpp"

namespace policytwin {
namespace {

void check_space(const std::vector<Interval>& space) {
  if (space.empty()) throw ConfigError("search space has no dimensions");
  for (const auto& iv : space) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.lo < iv.hi)) {
      throw ConfigError("search interval must satisfy lo < hi");
    }
  }
}

double uniform(std::mt19937_64& rng, const Interval& iv) {
  return iv.lo + unit_interval(rng()) * iv.width();
}

double standard_normal(std::mt19937_64& rng) {
  double u1 = unit_interval(rng());
  while (u1 <= 0.0) u1 = unit_interval(rng());
  const double u2 = unit_interval(rng());
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

RandomSampler::RandomSampler(std::vector<Interval> space, std::uint64_t seed)
    : space_(std::move(space)), rng_(seed) {
  check_space(space_);
}

std::vector<double> RandomSampler::suggest(std::span<const Trial>) {
  std::vector<double> x(space_.size());
  for (std::size_t d = 0; d < space_.size(); ++d) x[d] = uniform(rng_, space_[d]);
  return x;
}

struct TpeSampler::Mixture {
  std::vector<std::vector<double>> mu;
  std::vector<std::vector<double>> sigma;
  std::vector<double> weight;
  double total_weight = 0.0;
};

TpeSampler::TpeSampler(std::vector<Interval> space, std::uint64_t seed, TpeOptions options)
    : space_(std::move(space)), rng_(seed), options_(options) {
  check_space(space_);
  if (!(options_.gamma > 0.0 && options_.gamma < 1.0)) throw ConfigError("tpe gamma must lie in (0, 1)");
  if (options_.candidates < 1) throw ConfigError("tpe candidates must be >= 1");
  if (options_.startup_trials < 1) throw ConfigError("tpe startup_trials must be >= 1");
  if (!(options_.prior_weight > 0.0)) throw ConfigError("tpe prior_weight must be > 0");
  if (!(options_.min_bandwidth > 0.0 && options_.min_bandwidth <= 1.0)) {
    throw ConfigError("tpe min_bandwidth must lie in (0, 1]");
  }
}

TpeSampler::Mixture TpeSampler::build_mixture(std::span<const Trial* const> trials) const {
  const std::size_t dims = space_.size();
  const std::size_t n = trials.size();
  Mixture m;

  // Scott-rule scale on the dimension width, shrinking with the group size.
  const double groups = static_cast<double>(std::max<std::size_t>(n, 1));
  const double shrink = std::pow(groups, -1.0 / (static_cast<double>(dims) + 4.0));
  std::vector<double> bandwidth(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    const double width = space_[d].width();
    bandwidth[d] = std::clamp(0.2 * width * shrink, options_.min_bandwidth * width, width);
  }

  std::vector<double> center(dims), broad(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    center[d] = 0.5 * (space_[d].lo + space_[d].hi);
    broad[d] = space_[d].width();
  }
  m.mu.push_back(std::move(center));
  m.sigma.push_back(std::move(broad));
  m.weight.push_back(options_.prior_weight);

  for (const Trial* t : trials) {
    std::vector<double> mu(dims);
    for (std::size_t d = 0; d < dims; ++d) mu[d] = space_[d].clamp(t->x[d]);
    m.mu.push_back(std::move(mu));
    m.sigma.push_back(bandwidth);
    m.weight.push_back(1.0);
  }
  for (double w : m.weight) m.total_weight += w;
  return m;
}

std::vector<double> TpeSampler::draw(const Mixture& m) {
  double pick = unit_interval(rng_()) * m.total_weight;
  std::size_t k = 0;
  for (; k + 1 < m.weight.size(); ++k) {
    if (pick < m.weight[k]) break;
    pick -= m.weight[k];
  }
  std::vector<double> x(space_.size());
  for (std::size_t d = 0; d < space_.size(); ++d) {
    double v = 0.0;
    bool ok = false;
    for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
      v = m.mu[k][d] + m.sigma[k][d] * standard_normal(rng_);
      ok = space_[d].contains(v);
    }
    x[d] = ok ? v : uniform(rng_, space_[d]);
  }
  return x;
}

double TpeSampler::log_density(const Mixture& m, std::span<const double> x) const {
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  std::vector<double> terms(m.weight.size());
  for (std::size_t k = 0; k < m.weight.size(); ++k) {
    double lp = std::log(m.weight[k] / m.total_weight);
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double s = m.sigma[k][d];
      const double z = (x[d] - m.mu[k][d]) / s;
      const double mass = normal_cdf((space_[d].hi - m.mu[k][d]) / s) - normal_cdf((space_[d].lo - m.mu[k][d]) / s);
      lp += -0.5 * z * z - std::log(s) - kHalfLog2Pi - std::log(std::max(mass, 1e-300));
    }
    terms[k] = lp;
  }
  const double top = *std::max_element(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - top);
  return top + std::log(sum);
}

std::vector<double> TpeSampler::suggest(std::span<const Trial> history) {
  if (history.size() < static_cast<std::size_t>(options_.startup_trials)) {
    std::vector<double> x(space_.size());
    for (std::size_t d = 0; d < space_.size(); ++d) x[d] = uniform(rng_, space_[d]);
    return x;
  }
  std::vector<const Trial*> order;
  order.reserve(history.size());
  for (const auto& t : history) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(), [](const Trial* a, const Trial* b) { return a->loss < b->loss; });

  const auto n_good = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(options_.gamma * static_cast<double>(order.size()))));
  const std::span<const Trial* const> all(order);
  const Mixture good = build_mixture(all.first(n_good));
  const Mixture bad = build_mixture(all.subspan(n_good));

  std::vector<double> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < options_.candidates; ++c) {
    std::vector<double> x = draw(good);
    const double score = log_density(good, x) - log_density(bad, x);
    if (best.empty() || score > best_score) {
      best_score = score;
      best = std::move(x);
    }
  }
  return best;
}

SearchResult minimize(const std::function<double(std::span<const double>)>& objective,
                      std::vector<double> initial, int trials, Sampler& sampler) {
  if (trials < 1) throw ConfigError("trial budget must be >= 1");
  auto evaluate = [&](const std::vector<double>& x) {
    const double loss = objective(x);
    return std::isnan(loss) ? std::numeric_limits<double>::infinity() : loss;
  };
  SearchResult result;
  result.trials.reserve(static_cast<std::size_t>(trials));
  result.trials.push_back(Trial{initial, evaluate(initial)});
  for (int t = 1; t < trials; ++t) {
    std::vector<double> x = sampler.suggest(result.trials);
    const double loss = evaluate(x);
    result.trials.push_back(Trial{std::move(x), loss});
    if (loss < result.trials[result.best_index].loss) result.best_index = result.trials.size() - 1;
  }
  return result;
}

}  // namespace policytwin
