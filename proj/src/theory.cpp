#include "advicl/theory.hpp"

#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "advicl/errors.hpp"

namespace advicl::theory {

namespace {

void check_dims(const FiniteDistribution& a, const FiniteDistribution& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("distributions over supports of size " + std::to_string(a.size()) + " and " +
                            std::to_string(b.size()));
  }
}

// p ln(p / q) with 0 ln 0 = 0
double xlogy_ratio(double p, double q) { return p > 0.0 ? p * std::log(p / q) : 0.0; }

}  // namespace

FiniteDistribution::FiniteDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw InvalidArgument("distribution support must be nonempty");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidArgument("probabilities must be finite and nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw InvalidArgument("probabilities must sum to 1");
}

FiniteDistribution FiniteDistribution::from_weights(std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("weights must be finite and nonnegative");
    sum += w;
  }
  if (!(sum > 0.0)) throw InvalidArgument("weights must not all be zero");
  for (double& w : weights) w /= sum;
  return FiniteDistribution(std::move(weights));
}

std::vector<double> optimal_discriminator(const FiniteDistribution& p_data, const FiniteDistribution& p_g) {
  check_dims(p_data, p_g);
  std::vector<double> d(p_data.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double s = p_data[i] + p_g[i];
    d[i] = s > 0.0 ? p_data[i] / s : 0.5;
  }
  return d;
}

double ideal_loss(const FiniteDistribution& p_data, const FiniteDistribution& p_g) {
  check_dims(p_data, p_g);
  double j = 0.0;
  for (std::size_t i = 0; i < p_data.size(); ++i) {
    const double s = p_data[i] + p_g[i];
    if (s == 0.0) continue;
    // pd ln(pd/s) + pg ln(pg/s), each with 0 ln 0 = 0
    j += xlogy_ratio(p_data[i], s) + xlogy_ratio(p_g[i], s);
  }
  return j;
}

double jsd(const FiniteDistribution& p, const FiniteDistribution& q) {
  check_dims(p, q);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    total += 0.5 * xlogy_ratio(p[i], m) + 0.5 * xlogy_ratio(q[i], m);
  }
  return std::max(0.0, total);
}

ConvergenceTrajectory simulate_convergence(const FiniteDistribution& p_data, const FiniteDistribution& p_g0,
                                           std::size_t steps, double step_size) {
  check_dims(p_data, p_g0);
  if (steps == 0) throw InvalidArgument("steps must be positive");
  if (!(step_size > 0.0 && step_size <= 1.0)) throw InvalidArgument("step_size must lie in (0, 1]");
  for (std::size_t i = 0; i < p_data.size(); ++i) {
    if (p_data[i] > 0.0 && p_g0[i] == 0.0) {
      throw InvalidArgument("p_g0 must cover the support of p_data (index " + std::to_string(i) + ")");
    }
  }

  ConvergenceTrajectory traj;
  std::vector<double> pg(p_g0.probs().begin(), p_g0.probs().end());
  auto record = [&] {
    FiniteDistribution current(pg);
    traj.steps.push_back({pg, ideal_loss(p_data, current), jsd(p_data, current)});
  };
  record();
  std::vector<double> next(pg.size());
  for (std::size_t t = 0; t < steps; ++t) {
    const auto d_star = optimal_discriminator(p_data, FiniteDistribution(pg));
    double sum = 0.0;
    for (std::size_t i = 0; i < pg.size(); ++i) {
      if (pg[i] == 0.0) {
        next[i] = 0.0;
        continue;
      }
      const double grad = std::log1p(-d_star[i]);  // ln(pg / (pd + pg))
      next[i] = pg[i] * std::exp(-step_size * grad);
      sum += next[i];
    }
    bool floored = false;
    for (std::size_t i = 0; i < pg.size(); ++i) {
      next[i] /= sum;
      if (pg[i] > 0.0 && next[i] < kProbabilityFloor) {
        next[i] = kProbabilityFloor;
        floored = true;
        ++traj.floored;
      }
    }
    if (floored) {
      spdlog::warn("simulate_convergence: step {} floored probabilities below {}", t + 1, kProbabilityFloor);
      const double s = std::accumulate(next.begin(), next.end(), 0.0);
      for (double& v : next) v /= s;
    }
    pg.swap(next);
    record();
  }
  return traj;
}

}  // namespace advicl::theory
