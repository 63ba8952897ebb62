#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace advicl::theory {

// Probability vector over a finite support. Entries are >= 0 and sum to 1
// within 1e-12 (validated at construction).
class FiniteDistribution {
 public:
  explicit FiniteDistribution(std::vector<double> probs);
  // Normalises nonnegative weights.
  static FiniteDistribution from_weights(std::vector<double> weights);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
};

// D*_i = pd_i / (pd_i + pg_i); 0.5 where both vanish.
std::vector<double> optimal_discriminator(const FiniteDistribution& p_data, const FiniteDistribution& p_g);

// sum pd_i ln D*_i + sum pg_i ln(1 - D*_i) with 0 ln 0 = 0.
double ideal_loss(const FiniteDistribution& p_data, const FiniteDistribution& p_g);

// Jensen-Shannon divergence in nats, in [0, ln 2].
double jsd(const FiniteDistribution& p, const FiniteDistribution& q);

struct TrajectoryStep {
  std::vector<double> p_g;
  double loss = 0.0;
  double jsd = 0.0;
};

struct ConvergenceTrajectory {
  std::vector<TrajectoryStep> steps;  // steps[0] is the starting point
  std::size_t floored = 0;            // probabilities raised to the floor along the way
};

inline constexpr double kProbabilityFloor = 1e-15;

// Alternates the optimal discriminator with a mirror-descent step on p_g:
//   p_g <- normalise(p_g * exp(-step_size * dJ/dp_g)),  dJ/dp_g,i = ln(1 - D*_i).
// Entries that fall below kProbabilityFloor are floored and renormalised.
ConvergenceTrajectory simulate_convergence(const FiniteDistribution& p_data, const FiniteDistribution& p_g0,
                                           std::size_t steps, double step_size);

}  // namespace advicl::theory
