#pragma once

// Tracking error, path length, dynamic regret and closed-form bounds.

#include "tvvi/algorithms.hpp"
#include "tvvi/vi_core.hpp"

#include <string>
#include <variant>
#include <vector>

namespace tvvi {

/// sum_t |Z_t - Z*_t|^2. Throws ContractViolation without solutions.
double tracking_error(const Trajectory& traj);
/// Prefix sums of the tracking error; entry t-1 covers rounds 1..t.
std::vector<double> tracking_error_series(const Trajectory& traj);

/// sum_{t >= 2} |Z*_t - Z*_{t-1}|^2
double quadratic_path_length(const std::vector<Point>& solutions);

/// sum_t <F_t(Z_t), Z_t - C_t> - (mu/2) |Z_t - C_t|^2 from recorded op values.
double dynamic_regret(const Trajectory& traj, const std::vector<Point>& comparators, double mu);
std::vector<double> dynamic_regret_series(const Trajectory& traj,
                                          const std::vector<Point>& comparators, double mu);

// ---- bounds ---------------------------------------------------------------

/// Contraction factor C, path length P*, initial distance |Z_1 - Z*_1|.
struct Thm1Bound {
  double C, P_star, init_dist;
};
/// Cyclic forward-backward tuned with the true period k.
struct Cor1Bound {
  double k, G, mu, T;
};
/// Regret of fixed-rate aggregation.
struct Thm3Bound {
  double G, mu, D, k, K, T;
};
/// Tracking of fixed-rate aggregation.
struct Cor2Bound {
  double G, mu, D, k, K, T;
};
/// Constant tracking of adaptive aggregation; kappa = L / mu.
struct Thm4Bound {
  double D0, kappa, k, K;
};
/// Adversarial lower bound D^2 T / 16.
struct Lemma1LowerBound {
  double D, T;
};

using BoundSpec = std::variant<Thm1Bound, Cor1Bound, Thm3Bound, Cor2Bound, Thm4Bound, Lemma1LowerBound>;

/// Throws ContractViolation on arguments outside the formula's domain.
double theoretical_bound(const BoundSpec& spec);
bool is_lower_bound(const BoundSpec& spec);
std::string bound_name(const BoundSpec& spec);

enum class BoundTarget { Tracking, Regret };

struct BoundCheck {
  bool holds = false;
  double measured = 0.0;
  double bound = 0.0;
};

/// Upper-bound kinds hold when measured <= bound + 1e-9, the lower-bound
/// kind when measured >= bound - 1e-9. Regret uses the solutions as
/// comparators and `mu` from the spec where it has one.
BoundCheck bound_check(const Trajectory& traj, const BoundSpec& spec, BoundTarget which,
                       double mu = 0.0);

}  // namespace tvvi
