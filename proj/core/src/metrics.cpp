#include "tvvi/metrics.hpp"

#include <cmath>
#include <type_traits>

namespace tvvi {

namespace {

const std::vector<Point>& require_solutions(const Trajectory& traj) {
  if (!traj.solutions) throw ContractViolation("trajectory has no solutions");
  if (traj.solutions->size() != traj.plays.size())
    throw ContractViolation("trajectory solutions/plays length mismatch");
  return *traj.solutions;
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw ContractViolation(std::string("bound: ") + what + " must be > 0");
}

double log_checked(double x, const char* what) {
  if (!(x > 0.0)) throw ContractViolation(std::string("bound: log of nonpositive ") + what);
  return std::log(x);
}

}  // namespace

std::vector<double> tracking_error_series(const Trajectory& traj) {
  const auto& sols = require_solutions(traj);
  std::vector<double> out;
  out.reserve(sols.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < sols.size(); ++t) {
    acc += (traj.plays[t] - sols[t]).squaredNorm();
    out.push_back(acc);
  }
  return out;
}

double tracking_error(const Trajectory& traj) {
  auto s = tracking_error_series(traj);
  return s.empty() ? 0.0 : s.back();
}

double quadratic_path_length(const std::vector<Point>& solutions) {
  double acc = 0.0;
  for (std::size_t t = 1; t < solutions.size(); ++t)
    acc += (solutions[t] - solutions[t - 1]).squaredNorm();
  return acc;
}

std::vector<double> dynamic_regret_series(const Trajectory& traj,
                                          const std::vector<Point>& comparators, double mu) {
  if (comparators.size() != traj.plays.size() || traj.op_values.size() != traj.plays.size())
    throw ContractViolation("dynamic_regret: length mismatch");
  std::vector<double> out;
  out.reserve(comparators.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < comparators.size(); ++t) {
    Vector d = traj.plays[t] - comparators[t];
    acc += traj.op_values[t].dot(d) - 0.5 * mu * d.squaredNorm();
    out.push_back(acc);
  }
  return out;
}

double dynamic_regret(const Trajectory& traj, const std::vector<Point>& comparators, double mu) {
  auto s = dynamic_regret_series(traj, comparators, mu);
  return s.empty() ? 0.0 : s.back();
}

double theoretical_bound(const BoundSpec& spec) {
  return std::visit(
      [](const auto& b) -> double {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, Thm1Bound>) {
          if (!(b.C >= 0.0 && b.C < 1.0)) throw ContractViolation("bound: C must lie in [0, 1)");
          const double r = 1.0 - b.C;
          return b.P_star / (r * r) + b.init_dist * b.init_dist / r;
        } else if constexpr (std::is_same_v<B, Cor1Bound>) {
          require_positive(b.k, "k");
          require_positive(b.mu, "mu");
          return b.k * b.G * b.G / (2.0 * b.mu) * (log_checked(b.T / b.k, "T/k") + 1.0);
        } else if constexpr (std::is_same_v<B, Thm3Bound> || std::is_same_v<B, Cor2Bound>) {
          require_positive(b.k, "k");
          require_positive(b.mu, "mu");
          if (!(b.K >= b.k)) throw ContractViolation("bound: K must be >= k");
          const double s = b.G + b.mu * b.D;
          const double inner =
              b.k * log_checked(b.T / b.k, "T/k") + b.k + 8.0 * log_checked(b.K, "K");
          if constexpr (std::is_same_v<B, Thm3Bound>)
            return s * s / (2.0 * b.mu) * inner;
          else
            return s * s / (b.mu * b.mu) * inner;
        } else if constexpr (std::is_same_v<B, Thm4Bound>) {
          if (!(b.kappa >= 1.0)) throw ContractViolation("bound: kappa must be >= 1");
          if (!(b.k >= 1.0 && b.K >= b.k)) throw ContractViolation("bound: need 1 <= k <= K");
          const double kp = b.kappa, logK = log_checked(b.K, "K");
          return 4.0 * b.D0 * b.D0 * (2.0 + kp) *
                 (2.0 * (2.0 * kp * kp + 1.0) * (2.0 + kp) * logK + (2.0 * kp + 1.0) * kp * b.k +
                  1.0);
        } else {
          return b.D * b.D * b.T / 16.0;
        }
      },
      spec);
}

bool is_lower_bound(const BoundSpec& spec) {
  return std::holds_alternative<Lemma1LowerBound>(spec);
}

std::string bound_name(const BoundSpec& spec) {
  static const char* names[] = {"thm1", "cor1", "thm3", "cor2", "thm4", "lemma1_lb"};
  return names[spec.index()];
}

BoundCheck bound_check(const Trajectory& traj, const BoundSpec& spec, BoundTarget which,
                       double mu) {
  BoundCheck out;
  out.bound = theoretical_bound(spec);
  if (which == BoundTarget::Tracking) {
    out.measured = tracking_error(traj);
  } else {
    std::visit(
        [&](const auto& b) {
          if constexpr (requires { b.mu; }) mu = b.mu;
        },
        spec);
    out.measured = dynamic_regret(traj, require_solutions(traj), mu);
  }
  out.holds = is_lower_bound(spec) ? out.measured >= out.bound - 1e-9
                                   : out.measured <= out.bound + 1e-9;
  return out;
}

}  // namespace tvvi
