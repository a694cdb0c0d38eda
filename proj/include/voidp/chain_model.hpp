#pragma once

// Discrete chain graphical models and exact inference on them.
//
// Variables are indexed 1..n. Index 0 and n+1 denote the dummy endpoints that
// the dynamic programs use as sub-chain boundaries; they carry a single state
// and are independent of everything else.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "voidp/matrix.hpp"

namespace voidp {

using Index = int;
using State = int;

/// Absolute tolerance for probability normalization checks.
inline constexpr double kProbTolerance = 1e-9;

enum class Mode { Filtering, Smoothing };

const char* to_string(Mode mode);
Mode mode_from_string(const std::string& text);

/// Prior plus per-step transitions of a (possibly nonstationary) Markov chain.
struct ChainModel {
  std::vector<double> prior;
  /// transitions[i-1] holds P(X_{i+1} | X_i), a d_i x d_{i+1} row-stochastic matrix.
  std::vector<Matrix> transitions;
  /// Either empty or one value per state of each variable (bin centers).
  std::vector<std::vector<double>> state_values;

  static ChainModel stationary(std::vector<double> prior, const Matrix& transition, int n);

  int size() const noexcept { return static_cast<int>(transitions.size()) + 1; }
  /// State count of X_j; the dummy endpoints 0 and n+1 have one state.
  int states(Index j) const;
  int max_states() const;
  /// P(X_{i+1} | X_i) for i in 1..n-1.
  const Matrix& transition(Index i) const { return transitions[static_cast<std::size_t>(i - 1)]; }
  bool has_state_values() const noexcept { return !state_values.empty(); }
  std::span<const double> values(Index j) const;

  friend bool operator==(const ChainModel&, const ChainModel&) = default;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const noexcept { return violations.empty(); }
};

ValidationReport validate_model(const ChainModel& model);
/// Throws ValidationError listing every violation.
void require_valid(const ChainModel& model);

struct HmmModel {
  ChainModel hidden;
  /// emissions[i-1] holds P(Y_i | X_i), a d_i x e_i row-stochastic matrix.
  std::vector<Matrix> emissions;
};

ValidationReport validate_hmm(const HmmModel& hmm);

/// Conditions the HMM on a full emission sequence and returns the posterior
/// chain P(X_1..X_n | Y = y).
ChainModel fold_hmm(const HmmModel& hmm, std::span<const State> emissions);

struct Observation {
  Index index = 0;
  State state = 0;
  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Partial assignment X_A = x_A with the filtering/smoothing tag.
class Evidence {
 public:
  Evidence() = default;
  /// Throws ValidationError unless indices are strictly increasing and positive.
  explicit Evidence(std::vector<Observation> entries, Mode mode = Mode::Smoothing);

  const std::vector<Observation>& entries() const noexcept { return entries_; }
  Mode mode() const noexcept { return mode_; }
  bool empty() const noexcept { return entries_.empty(); }

  std::optional<State> state_at(Index j) const;
  /// Nearest observation with index <= j.
  std::optional<Observation> at_or_before(Index j) const;
  /// Nearest observation with index >= j.
  std::optional<Observation> at_or_after(Index j) const;
  /// Evidence restricted to indices <= j, same mode.
  Evidence truncated(Index j) const;
  Evidence with(Observation obs) const;

  friend bool operator==(const Evidence&, const Evidence&) = default;

 private:
  std::vector<Observation> entries_;
  Mode mode_ = Mode::Smoothing;
};

/// Throws ValidationError for out-of-range indices or states.
void check_evidence_domain(const ChainModel& model, const Evidence& evidence);

/// Conditional distribution over one variable's domain.
struct Dist {
  std::vector<double> p;
  friend bool operator==(const Dist&, const Dist&) = default;
};

/// Per-state max-marginals; entries need not sum to one.
struct MaxMarg {
  std::vector<double> values;
};

struct InferenceOptions {
  /// Run message passing in log space instead of rescaled linear space.
  bool log_space = false;
};

/// P(X_j | evidence), using the nearest observed ancestor and (when smoothing)
/// the nearest observed descendant as separators.
Dist posterior_marginal(const ChainModel& model, const Evidence& evidence, Index j,
                        InferenceOptions options = {});

/// Joint P(X_a, X_b | evidence) for a < b, indexed (x_a, x_b). In filtering
/// mode only evidence at indices <= b is used.
Matrix pairwise_posterior(const ChainModel& model, const Evidence& evidence, Index a, Index b,
                          InferenceOptions options = {});

/// For each x_j, max over full assignments consistent with the evidence of
/// P(x_V | evidence). In filtering mode only evidence at indices <= j is used.
MaxMarg max_marginal(const ChainModel& model, const Evidence& evidence, Index j);

/// Ancestral sample of a full assignment; states are 0-based, position j-1 holds X_j.
std::vector<State> sample(const ChainModel& model, std::mt19937_64& rng);

/// Uniform double in [0,1) from 53 random bits; identical across standard libraries.
double uniform01(std::mt19937_64& rng);
/// Draws an index from a probability vector using `uniform01`.
State draw(std::span<const double> probabilities, std::mt19937_64& rng);

/// Precomputed segment quantities for chains without interior evidence:
/// marginals, multi-step transition products and their max-product analogues.
/// The dynamic programs evaluate every conditional through this cache.
class ChainTables {
 public:
  explicit ChainTables(const ChainModel& model, bool with_max_products = false);

  const ChainModel& model() const noexcept { return *model_; }
  int size() const noexcept { return n_; }
  int states(Index j) const { return model_->states(j); }

  const std::vector<double>& marginal(Index j) const {
    return marginals_[static_cast<std::size_t>(j - 1)];
  }

  /// P(X_a = x_a, X_b = x_b) for 0 <= a < b <= n+1 (or a == b); dummies contribute factor 1.
  double joint(Index a, State xa, Index b, State xb) const;

  /// P(X_j | X_a = x_a, X_b = x_b) for a < j < b. Caller guarantees joint(...) > 0.
  void conditional(Index j, Index a, State xa, Index b, State xb, std::span<double> out) const;

  /// P(X_{j-1}, X_j | X_a = x_a, X_b = x_b) for a <= j-1, j < b, j >= 2.
  void pair_conditional(Index j, Index a, State xa, Index b, State xb, Matrix& out) const;

  /// Max-marginal of X_j given only X_a = x_a, X_b = x_b (a < j < b), or given
  /// X_j itself when a == j == b. Requires `with_max_products`.
  void max_conditional(Index j, Index a, State xa, Index b, State xb, std::span<double> out) const;

  bool has_max_products() const noexcept { return with_max_; }

 private:
  double step(Index a, State xa, Index b, State xb) const;
  double max_step(Index a, State xa, Index b, State xb) const;
  std::size_t pair_slot(Index a, Index b) const;

  const ChainModel* model_;
  int n_;
  bool with_max_;
  std::vector<std::vector<double>> marginals_;
  // products_[pair_slot(a,b)] = P(X_b | X_a) for 1 <= a < b <= n.
  std::vector<Matrix> products_;
  std::vector<Matrix> max_products_;
  // forward_max_[j-1](x) = max_{x_<j} P(x_<=j); backward_max_[j-1](x) = max_{x_>j} P(x_>j | x_j).
  std::vector<std::vector<double>> forward_max_;
  std::vector<std::vector<double>> backward_max_;
};

}  // namespace voidp
