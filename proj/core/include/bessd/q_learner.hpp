#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bessd/dispatch_env.hpp"
#include "bessd/rng.hpp"
#include "bessd/scenario_gen.hpp"
#include "bessd/tree_search.hpp"

namespace bessd {

struct LearnerConfig {
  double epsilon = 0.01;
  double step_size = 0.01;  ///< alpha
  double gamma = 0.95;
  int bootstrap_depth = 4;  ///< n
  int episodes = 30;
  bool rules_enabled = true;
  /// Episodes at the start of training whose targets are the one-step
  /// realized reward (warm start before the n-step targets take over).
  int warm_start_episodes = 0;
  int hidden = 32;
  /// Output scale of the network; 0 picks one from the timeline's rewards.
  double target_scale = 0.0;
  double weight_limit = 1e6;  ///< DivergenceGuard threshold on |theta|

  void validate() const;
};

/// Min-max normalization of the raw input vector onto [-1, 1].
///
/// Raw layout: soc, p_sum, tariff_sell, tariff_buy, p_pcc_set, p_pcc,
/// action, then the pool's lower and upper bound for each of the n
/// lookahead steps (lower_1, upper_1, lower_2, ...).
class FeatureEncoder {
 public:
  FeatureEncoder() = default;
  /// Throws InvalidArgument on size mismatch or hi < lo.
  FeatureEncoder(std::vector<double> lo, std::vector<double> hi);

  static constexpr std::size_t kBaseFeatures = 7;
  static std::size_t dimension(int lookahead) { return kBaseFeatures + 2 * static_cast<std::size_t>(lookahead); }

  /// Unnormalized features. A pool shorter than `lookahead` repeats its last
  /// step's bounds; a longer one is truncated.
  static std::vector<double> raw(const DispatchState& state, double action_kw,
                                 const ScenarioPool& pool, int lookahead);

  /// Fits per-feature ranges over sample raw rows.
  static FeatureEncoder fit(std::span<const std::vector<double>> rows);

  std::vector<double> encode(const DispatchState& state, double action_kw,
                             const ScenarioPool& pool) const;
  /// Normalizes a raw row in place; constant features map to 0.
  void normalize(std::vector<double>& x) const;

  int lookahead() const noexcept {
    return static_cast<int>((lo_.size() - kBaseFeatures) / 2);
  }
  std::size_t size() const noexcept { return lo_.size(); }
  const std::vector<double>& lo() const noexcept { return lo_; }
  const std::vector<double>& hi() const noexcept { return hi_; }

 private:
  std::vector<double> lo_;
  std::vector<double> hi_;
};

/// One tanh hidden layer and a linear scalar output, times `output_scale`.
///
/// theta = [W1 (hidden x inputs, row-major), b1 (hidden), w2 (hidden), b2].
class QNetwork {
 public:
  QNetwork() = default;
  QNetwork(FeatureEncoder encoder, std::size_t hidden, double output_scale);

  std::size_t inputs() const noexcept { return encoder_.size(); }
  std::size_t hidden() const noexcept { return hidden_; }
  std::size_t parameter_count() const noexcept { return theta_.size(); }
  double output_scale() const noexcept { return output_scale_; }
  const FeatureEncoder& encoder() const noexcept { return encoder_; }

  std::span<double> weights() noexcept { return theta_; }
  std::span<const double> weights() const noexcept { return theta_; }
  /// Replaces theta; throws InvalidArgument on a size mismatch.
  void set_weights(std::vector<double> theta);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
  void randomize(RngStream& rng);

  /// Output for an already-normalized input.
  double forward(std::span<const double> x) const;
  /// Output and d(output)/d(theta) for a normalized input.
  double gradient(std::span<const double> x, std::vector<double>& grad) const;

 private:
  FeatureEncoder encoder_;
  std::size_t hidden_ = 0;
  double output_scale_ = 1.0;
  std::vector<double> theta_;
};

/// Q(s, a; theta) in currency.
double q_value(const QNetwork& net, const DispatchState& state, double action_kw,
               const ScenarioPool& pool);

/// Index of the largest value among `feasible` (lowest index on ties).
std::size_t greedy_index(std::span<const double> q, std::span<const std::size_t> feasible);

/// Epsilon-greedy choice over `feasible` (indices into `actions`). One
/// uniform draw decides exploration, a second picks the random action.
/// Throws EmptyFeasibleSet when `feasible` is empty.
std::size_t select_action(const QNetwork& net, const DispatchState& state,
                          const ActionSpace& actions, std::span<const std::size_t> feasible,
                          const ScenarioPool& pool, double epsilon, RngStream& rng);

struct TrainingExample {
  std::vector<double> features;  ///< normalized
  double target = 0.0;           ///< currency
};

/// One gradient step on 0.5 * ((target - Q) / output_scale)^2. Throws
/// InvalidArgument for a non-finite target and DivergenceGuard when a
/// weight leaves [-weight_limit, weight_limit] or turns non-finite.
void update(QNetwork& net, const TrainingExample& example, double alpha,
            double weight_limit = 1e6);

/// Linear model on one-hot features: the tabular special case of `update`.
class TabularQ {
 public:
  explicit TabularQ(std::size_t entries, double initial = 0.0) : q_(entries, initial) {}
  double value(std::size_t entry) const { return q_.at(entry); }
  void set(std::size_t entry, double v) { q_.at(entry) = v; }
  /// Gradient step of the linear model with features e_entry, giving
  /// Q <- Q + alpha * (target - Q).
  void update(std::size_t entry, double target, double alpha);

 private:
  std::vector<double> q_;
};

/// R_{t+1} of the realized transition s_t --a_t--> s_{t+1}.
double warm_start_target(const DispatchState& state, double action_kw,
                         const DispatchState& realized_next, const DispatchModel& model);

/// Realized exogenous series plus the forecast-error history the scenario
/// pools are fitted from.
struct TrainingTimeline {
  std::vector<ExogenousStep> realized;
  std::vector<double> forecast;                   ///< p_sum forecast per row
  std::vector<std::vector<double>> error_buckets; ///< error samples per bucket
  std::vector<std::size_t> bucket_of;             ///< row -> bucket
  double initial_soc = 0.5;
  double confidence_level = 0.95;

  std::size_t size() const noexcept { return realized.size(); }
  void validate() const;
  /// Decision-time observation at row 0.
  DispatchState initial_state() const;
  /// Pool over rows t+1 .. t+k with k = min(n, size - 1 - t).
  ScenarioPool pool_at(std::size_t t, int n) const;
  /// Deterministic exogenous rows t+1 .. t+k.
  std::span<const ExogenousStep> lookahead(std::size_t t, std::size_t k) const;
};

struct TrainingResult {
  QNetwork net;
  std::vector<double> learning_curve;  ///< cumulative realized reward per episode
  long searches = 0;
  long dead_ends = 0;
};

/// Fits the encoder over the timeline's reachable feature ranges.
FeatureEncoder fit_encoder(const TrainingTimeline& timeline, const DispatchModel& model, int lookahead);

/// Episode loop of the learner. An episode is one pass over the timeline;
/// decisions run at rows 0 .. size-2 and the lookahead shrinks near the end.
/// Aborts with DivergenceGuard.
TrainingResult train(const TrainingTimeline& timeline, const LearnerConfig& cfg,
                     const MctsConfig& mcts, const DispatchModel& model, std::uint64_t seed);

/// Versioned JSON weights artifact with architecture and normalization.
void save_weights(const QNetwork& net, const std::filesystem::path& path);
QNetwork load_weights(const std::filesystem::path& path);

}  // namespace bessd
