#pragma once

// Concrete problem instances: drifting and periodic quadratics, the
// exp-quadratic family behind the chaos and star experiments, a Kelly
// auction, streaming regression, a generalized linear model, a non-monotone
// zero-sum game and an adaptive lower-bound adversary.

#include "tvvi/vi_core.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tvvi {

/// Scenario name plus string-valued parameters. Typed getters throw
/// ConfigError naming "scenario.<key>".
struct ScenarioId {
  std::string name;
  std::map<std::string, std::string> params;

  bool has(const std::string& key) const { return params.count(key) != 0; }
  double get_double(const std::string& key, double fallback) const;
  std::optional<double> get_optional_double(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  /// Comma-separated reals; fractions such as 3/4 are accepted.
  std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const;
  /// Matrices separated by ';', entries row-major separated by ','.
  std::vector<Matrix> get_matrices(const std::string& key, int dim,
                                   std::vector<Matrix> fallback) const;
  /// Rejects parameters outside `allowed`.
  void check_known(const std::vector<std::string>& allowed) const;
};

/// Constants shared by every operator of the sequence.
struct ScenarioMetadata {
  std::optional<double> mu, L, G, D;
  std::optional<int> k;
  bool known_solutions = false;
  /// Restricted-secant constant around the solution, for non-monotone games.
  std::optional<double> mu_rsi;
};

struct Scenario {
  std::string name;
  std::shared_ptr<ProblemSequence> sequence;
  Domain domain = Domain::unbounded(1);
  ScenarioMetadata meta;
  /// One full period F_1..F_k for pure periodic sequences.
  std::vector<Operator> cycle;
  Point default_start;
};

std::vector<std::string> scenario_names();

/// Throws ConfigError for unknown names and invalid parameters.
Scenario build_scenario(const ScenarioId& id);

// ---- operator families ----------------------------------------------------

double sigmoid(double u);
double softplus(double u);

/// sup_q sigma(q) + 2 q sigma(q) (1 - sigma(q)); the exp-quadratic potential
/// with matrix A is (c * lambda_max(A))-smooth.
inline constexpr double kExpQuadraticSmoothness = 1.3008194650058740;

/// F(x) = sigma(x'Ax/2) A x, gradient of log(1 + exp(x'Ax/2)); A symmetric
/// positive definite. mu = lambda_min/2, L = c lambda_max, solution 0.
Operator exp_quadratic_operator(const Matrix& A);

/// F(x) = A (x - c), gradient of (x-c)'A(x-c)/2 for symmetric A.
Operator quadratic_operator(const Matrix& A, const Vector& c);

enum class GlmLink { Identity, ScaledLogistic };

/// F(Z) = (1/n) sum_s a_s [phi(<Z, a_s>) - b_s] + lambda Z with rows a_s of
/// `features`; phi(u) = u or scale * sigma(u).
Operator glm_operator(const Matrix& features, const Vector& targets, GlmLink link, double scale,
                      double lambda_reg);

/// Regularized Kelly auction: F_i(x) = -v_i (R + S - x_i)/(R + S)^2 + 1 + lambda x_i
/// with S = sum_j x_j; player i's loss is -v_i x_i/(R+S) + x_i + lambda x_i^2/2.
Operator kelly_operator(const Vector& values, double reserve, double lambda_reg);

/// Pseudo-gradient (d_x l, -d_y l) of
/// l(x, y) = x^2 + 3 sin^2 x + a sin^2 x sin^2 y - y^2 - 3 sin^2 y,
/// x minimizing and y maximizing l. Solution (0, 0).
Operator rsi_game_operator(double a);

/// Largest spectral norm of the game's pseudo-gradient Jacobian on a grid over
/// one period [0, pi)^2, for every a in `a_values`.
double rsi_game_lipschitz(const std::vector<double>& a_values, int grid = 256);

// ---- lower-bound adversary ------------------------------------------------

struct AdversaryState {
  double prev_solution = 0.0;
};

struct AdversaryMove {
  Point solution;
  Operator op;
};

/// Picks Z*_t in {-1, 0, 1} after seeing the play so that the play stays at
/// distance >= 1/2 from it; emits F_t(x) = x - Z*_t on [-1, 1]. Plays
/// outside [-1, 1] are clamped with a warning on stderr.
AdversaryMove adversary_step(AdversaryState& state, const Point& play);

class AdversarySequence final : public ProblemSequence {
 public:
  AdversarySequence() = default;
  int dim() const override { return 1; }
  bool adaptive() const override { return true; }
  Operator at(long t) const override;
  Round observe(long t, const Point& play) override;
  const std::vector<Point>& history() const { return history_; }

 private:
  AdversaryState state_;
  long last_t_ = 0;
  std::vector<Point> history_;
};

}  // namespace tvvi
