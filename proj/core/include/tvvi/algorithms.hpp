#pragma once

// Online trackers: contractive one-step solvers, the cyclic forward-backward
// base learner and exponential-weights aggregation over K base learners.

#include "tvvi/vi_core.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

namespace tvvi {

// ---- step sizes -----------------------------------------------------------

struct StepSchedule {
  enum class Kind { Constant, InverseMuT };
  Kind kind = Kind::Constant;
  double value = 1.0;  // eta for Constant, mu for InverseMuT

  static StepSchedule constant(double eta);
  /// eta_s = 1 / (mu s)
  static StepSchedule inverse_mu_t(double mu);

  double at(long s) const;
};

// ---- single-iterate solvers -----------------------------------------------

/// project(z - eta F(z))
Point forward_step(const Operator& op, const Domain& domain, const Point& z, double eta);

/// z' with z' + F(z') = z for affine F, i.e. (I + A) z' = z - b.
/// Throws ContractViolation for non-affine F or singular I + A.
Point resolvent_step(const Operator& op, const Point& z);

/// z -> g + mu (z - z_t); carries mu and lipschitz = mu.
Operator make_surrogate(const Vector& g, const Point& z_t, double mu);

// ---- cyclic forward-backward ----------------------------------------------

/// i independent iterates, one per phase of an assumed period i.
struct CyclicFBState {
  int period = 1;
  std::vector<Point> slots;
  std::vector<long> slot_steps;
  StepSchedule schedule;
  /// Slot (t mod i) instead of ((t - 1) mod i); t = 1 then touches slot 2.
  bool literal_indexing = false;

  CyclicFBState(int period, const Point& z1, StepSchedule schedule, bool literal_indexing = false);

  /// Zero-based slot used at time t.
  int slot_for(long t) const;
  const Point& play(long t) const { return slots[static_cast<std::size_t>(slot_for(t))]; }
};

/// Returns the play of time t and updates its slot with `op_input`.
Point cyclic_fb_step(CyclicFBState& state, const Domain& domain, long t, const Operator& op_input);

// ---- exponential weights --------------------------------------------------

inline constexpr double kInfiniteRate = std::numeric_limits<double>::infinity();

/// p_i proportional to exp(-lambda L_i), normalized through log-sum-exp.
/// lambda = infinity degenerates to argmin_uniform.
Vector exp_weights(const Vector& cum_loss, double lambda);

/// -(1/lambda) log sum_i p_i exp(-lambda l_i). lambda = 0 gives <p, l>,
/// lambda = infinity the minimum of l over the support of p.
double mix_loss(const Vector& p, const Vector& losses, double lambda);

/// Uniform over indices within `tol` of the minimum.
Vector argmin_uniform(const Vector& cum_loss, double tol = 1e-12);

// ---- aggregation ----------------------------------------------------------

enum class RateMode { Fixed, Adaptive };

struct MetaState {
  int K = 1;
  double mu = 0.0;
  std::vector<CyclicFBState> bases;  // periods 1..K
  Vector weights;                    // p_t, used for the next play
  Vector cum_loss;
  RateMode mode = RateMode::Fixed;
  double lambda = kInfiniteRate;     // rate that produced `weights`
  double cum_gap = 0.0;              // sum_{s >= T0} (avg_loss - mix_loss)_+
  bool t0_passed = false;
  std::optional<long> T0;

  /// lambda = 1 / (4 mu (D + G/mu)^2); bases step with 1/(mu s) on surrogates.
  static MetaState fixed(int K, const Point& z1, double mu, double D, double G);
  /// AdaHedge-style rate; bases step with 1/L on the true operator.
  static MetaState adaptive(int K, const Point& z1, double mu, double L);

  std::vector<Point> base_plays(long t) const;
  Point play(long t) const;
};

struct MetaRound {
  Point play;
  std::vector<Point> base_plays;
  Vector weights;  // p_t used for the play
  Vector op_value;  // F_t(play)
  Vector losses;
  double avg_loss = 0.0;
  double mix_loss = 0.0;
  double lambda = 0.0;  // rate used for mix_loss
};

/// One evaluation of `op` (at the play); bases see the surrogate.
MetaRound meta_step_fixed(MetaState& state, const Domain& domain, long t, const Operator& op);

/// K + 1 evaluations of `op`: one at the play, one per base.
MetaRound meta_step_adaptive(MetaState& state, const Domain& domain, long t, const Operator& op);

// ---- tracker --------------------------------------------------------------

struct ContractiveForward {
  double eta = 1.0;
};
struct Resolvent {};
struct CyclicFB {
  int period = 1;
  StepSchedule schedule;
  bool literal_indexing = false;
};
struct MetaFixed {
  int K = 1;
  double mu = 0.0;
  std::optional<double> D;  // defaults to the domain diameter
  std::optional<double> G;
};
struct MetaAdaptive {
  int K = 1;
  double mu = 0.0;
  double L = 0.0;
};

using AlgorithmSpec = std::variant<ContractiveForward, Resolvent, CyclicFB, MetaFixed, MetaAdaptive>;

struct TrackerOptions {
  double divergence_threshold = 1e6;
};

struct Trajectory {
  std::vector<Point> plays;
  std::vector<Vector> op_values;
  std::optional<std::vector<Point>> solutions;
  std::vector<std::vector<Point>> per_base_plays;  // [t][i], meta runs only
  std::vector<Vector> weights;                     // [t], meta runs only
  std::optional<long> diverged_at;                 // first t with |Z_t| above threshold
  std::optional<Point> diverged_play;

  std::size_t size() const { return plays.size(); }
  bool diverged() const { return diverged_at.has_value(); }
};

/// Online protocol for t = 1..T: commit Z_t, then observe F_t (adaptive
/// sequences see Z_t first) and update. Stops at the first Z_t that is
/// non-finite or exceeds the threshold in norm, or whose evaluation fails.
Trajectory run_tracker(ProblemSequence& seq, const AlgorithmSpec& algo, const Domain& domain,
                       const Point& z1, long T, TrackerOptions opts = {});

/// Solution of VIP(F, domain) by extragradient iterations with step eta
/// (eta < 1/L for L-Lipschitz monotone F). Stops once the projected forward
/// residual |z - project(z - eta F(z))| drops below `tol`; absent when
/// `max_iter` iterations do not get there.
std::optional<Point> solve_numerically(const Operator& op, const Domain& domain, const Point& z0,
                                       double eta, double tol = 1e-12, int max_iter = 100000);

}  // namespace tvvi
