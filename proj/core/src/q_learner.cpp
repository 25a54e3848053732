#include "bessd/q_learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bessd/errors.hpp"
#include "bessd/network_model.hpp"

namespace bessd {

void LearnerConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidArgument("LearnerConfig: epsilon outside [0, 1]");
  if (!(step_size >= 0.0 && step_size <= 1.0)) throw InvalidArgument("LearnerConfig: step_size outside [0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("LearnerConfig: gamma outside [0, 1]");
  if (bootstrap_depth < 1) throw InvalidArgument("LearnerConfig: bootstrap_depth must be >= 1");
  if (episodes < 1) throw InvalidArgument("LearnerConfig: episodes must be >= 1");
  if (warm_start_episodes < 0) throw InvalidArgument("LearnerConfig: warm_start_episodes must be >= 0");
  if (hidden < 1) throw InvalidArgument("LearnerConfig: hidden must be >= 1");
  if (!(target_scale >= 0.0)) throw InvalidArgument("LearnerConfig: target_scale must be >= 0");
  if (!(weight_limit > 0.0)) throw InvalidArgument("LearnerConfig: weight_limit must be positive");
}

// ---------------------------------------------------------------- features

FeatureEncoder::FeatureEncoder(std::vector<double> lo, std::vector<double> hi)
    : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != hi_.size() || lo_.size() < kBaseFeatures ||
      (lo_.size() - kBaseFeatures) % 2 != 0) {
    throw InvalidArgument(fmt::format("FeatureEncoder: bad range sizes {} / {}", lo_.size(), hi_.size()));
  }
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (!(std::isfinite(lo_[i]) && std::isfinite(hi_[i]) && lo_[i] <= hi_[i])) {
      throw InvalidArgument(fmt::format("FeatureEncoder: invalid range for feature {}", i));
    }
  }
}

std::vector<double> FeatureEncoder::raw(const DispatchState& state, double action_kw,
                                        const ScenarioPool& pool, int lookahead) {
  if (pool.horizon() == 0) throw InvalidArgument("FeatureEncoder::raw: empty pool");
  std::vector<double> x{state.soc,       state.p_sum, state.tariff_sell, state.tariff_buy,
                        state.p_pcc_set, state.p_pcc, action_kw};
  x.reserve(dimension(lookahead));
  for (int k = 0; k < lookahead; ++k) {
    const std::size_t j = std::min(static_cast<std::size_t>(k), pool.horizon() - 1);
    x.push_back(pool.lower[j]);
    x.push_back(pool.upper[j]);
  }
  return x;
}

FeatureEncoder FeatureEncoder::fit(std::span<const std::vector<double>> rows) {
  if (rows.empty()) throw InsufficientData("FeatureEncoder::fit: no rows");
  std::vector<double> lo = rows.front();
  std::vector<double> hi = rows.front();
  for (const auto& r : rows) {
    if (r.size() != lo.size()) throw InvalidArgument("FeatureEncoder::fit: ragged rows");
    for (std::size_t i = 0; i < r.size(); ++i) {
      lo[i] = std::min(lo[i], r[i]);
      hi[i] = std::max(hi[i], r[i]);
    }
  }
  return FeatureEncoder(std::move(lo), std::move(hi));
}

void FeatureEncoder::normalize(std::vector<double>& x) const {
  if (x.size() != lo_.size()) {
    throw InvalidArgument(fmt::format("FeatureEncoder: got {} features, expected {}", x.size(), lo_.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double span = hi_[i] - lo_[i];
    x[i] = span > 0.0 ? 2.0 * (x[i] - lo_[i]) / span - 1.0 : 0.0;
  }
}

std::vector<double> FeatureEncoder::encode(const DispatchState& state, double action_kw,
                                           const ScenarioPool& pool) const {
  std::vector<double> x = raw(state, action_kw, pool, lookahead());
  normalize(x);
  return x;
}

// ----------------------------------------------------------------- network

QNetwork::QNetwork(FeatureEncoder encoder, std::size_t hidden, double output_scale)
    : encoder_(std::move(encoder)), hidden_(hidden), output_scale_(output_scale) {
  if (hidden_ == 0) throw InvalidArgument("QNetwork: hidden width must be positive");
  if (!(output_scale_ > 0.0 && std::isfinite(output_scale_))) {
    throw InvalidArgument("QNetwork: output scale must be positive and finite");
  }
  theta_.assign(hidden_ * inputs() + 2 * hidden_ + 1, 0.0);
}

void QNetwork::set_weights(std::vector<double> theta) {
  if (theta.size() != theta_.size()) {
    throw InvalidArgument(fmt::format("QNetwork: expected {} weights, got {}", theta_.size(), theta.size()));
  }
  theta_ = std::move(theta);
}

void QNetwork::randomize(RngStream& rng) {
  const std::size_t in = inputs();
  const double a1 = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(in, 1)));
  const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
  std::size_t i = 0;
  for (; i < hidden_ * in + hidden_; ++i) theta_[i] = a1 * (2.0 * rng.uniform() - 1.0);
  for (; i < theta_.size(); ++i) theta_[i] = a2 * (2.0 * rng.uniform() - 1.0);
}

double QNetwork::forward(std::span<const double> x) const {
  const std::size_t in = inputs();
  if (x.size() != in) throw InvalidArgument("QNetwork::forward: input size mismatch");
  const double* w1 = theta_.data();
  const double* b1 = w1 + hidden_ * in;
  const double* w2 = b1 + hidden_;
  double out = w2[hidden_];
  for (std::size_t h = 0; h < hidden_; ++h) {
    double z = b1[h];
    const double* row = w1 + h * in;
    for (std::size_t i = 0; i < in; ++i) z += row[i] * x[i];
    out += w2[h] * std::tanh(z);
  }
  return output_scale_ * out;
}

double QNetwork::gradient(std::span<const double> x, std::vector<double>& grad) const {
  const std::size_t in = inputs();
  if (x.size() != in) throw InvalidArgument("QNetwork::gradient: input size mismatch");
  grad.assign(theta_.size(), 0.0);
  const double* w1 = theta_.data();
  const double* b1 = w1 + hidden_ * in;
  const double* w2 = b1 + hidden_;
  double* g_w1 = grad.data();
  double* g_b1 = g_w1 + hidden_ * in;
  double* g_w2 = g_b1 + hidden_;
  double out = w2[hidden_];
  g_w2[hidden_] = output_scale_;
  for (std::size_t h = 0; h < hidden_; ++h) {
    double z = b1[h];
    const double* row = w1 + h * in;
    for (std::size_t i = 0; i < in; ++i) z += row[i] * x[i];
    const double a = std::tanh(z);
    out += w2[h] * a;
    g_w2[h] = output_scale_ * a;
    const double dz = output_scale_ * w2[h] * (1.0 - a * a);
    g_b1[h] = dz;
    for (std::size_t i = 0; i < in; ++i) g_w1[h * in + i] = dz * x[i];
  }
  return output_scale_ * out;
}

double q_value(const QNetwork& net, const DispatchState& state, double action_kw,
               const ScenarioPool& pool) {
  return net.forward(net.encoder().encode(state, action_kw, pool));
}

std::size_t greedy_index(std::span<const double> q, std::span<const std::size_t> feasible) {
  if (feasible.empty()) throw EmptyFeasibleSet("greedy_index: no feasible action");
  std::size_t best = feasible.front();
  for (std::size_t a : feasible) {
    if (q[a] > q[best] || (q[a] == q[best] && a < best)) best = a;
  }
  return best;
}

std::size_t select_action(const QNetwork& net, const DispatchState& state,
                          const ActionSpace& actions, std::span<const std::size_t> feasible,
                          const ScenarioPool& pool, double epsilon, RngStream& rng) {
  if (feasible.empty()) throw EmptyFeasibleSet("select_action: no feasible action");
  const double u = rng.uniform();
  if (u < epsilon) return feasible[rng.index(feasible.size())];
  std::vector<double> q(actions.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t a : feasible) q[a] = q_value(net, state, actions[a], pool);
  return greedy_index(q, feasible);
}

void update(QNetwork& net, const TrainingExample& example, double alpha, double weight_limit) {
  if (!std::isfinite(example.target)) throw InvalidArgument("update: non-finite target");
  std::vector<double> grad;
  const double q = net.gradient(example.features, grad);
  // gradient of the squared error in output-scale units
  const double s2 = net.output_scale() * net.output_scale();
  const double coef = alpha * (example.target - q) / s2;
  auto theta = net.weights();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    theta[i] += coef * grad[i];
    if (!std::isfinite(theta[i]) || std::abs(theta[i]) > weight_limit) {
      throw DivergenceGuard(fmt::format(
          "weight {} reached {} (limit {}); reduce the step size", i, theta[i], weight_limit));
    }
  }
}

void TabularQ::update(std::size_t entry, double target, double alpha) {
  // linear model q = w . e_entry: the gradient is e_entry itself
  double& w = q_.at(entry);
  w += alpha * (target - w);
}

double warm_start_target(const DispatchState& state, double action_kw,
                         const DispatchState& realized_next, const DispatchModel& model) {
  return step_reward(state, action_kw, realized_next, model.batt, model.weights).total;
}

// ---------------------------------------------------------------- timeline

void TrainingTimeline::validate() const {
  if (realized.size() < 2) throw InsufficientData("TrainingTimeline: need at least two rows");
  if (forecast.size() != realized.size() || bucket_of.size() != realized.size()) {
    throw InvalidArgument("TrainingTimeline: forecast/bucket vectors must match the rows");
  }
  for (std::size_t b : bucket_of) {
    if (b >= error_buckets.size()) throw InvalidArgument("TrainingTimeline: bucket index out of range");
  }
  if (!(initial_soc >= 0.0 && initial_soc <= 1.0)) throw InvalidArgument("TrainingTimeline: initial soc");
}

DispatchState TrainingTimeline::initial_state() const {
  const ExogenousStep& r = realized.front();
  DispatchState s;
  s.soc = initial_soc;
  s.p_sum = r.p_sum;
  s.tariff_sell = r.tariff_sell;
  s.tariff_buy = r.tariff_buy;
  s.p_pcc_set = r.p_pcc_set;
  s.p_pcc = pcc_power(r.p_sum, 0.0);
  s.t = 0;
  return s;
}

ScenarioPool TrainingTimeline::pool_at(std::size_t t, int n) const {
  if (t + 1 >= size()) throw InvalidArgument(fmt::format("pool_at: no row after {}", t));
  const std::size_t k = std::min(static_cast<std::size_t>(n), size() - 1 - t);
  std::vector<std::vector<double>> history;
  std::vector<double> fc;
  for (std::size_t j = 1; j <= k; ++j) {
    history.push_back(error_buckets[bucket_of[t + j]]);
    fc.push_back(forecast[t + j]);
  }
  return fit_pool(history, fc, confidence_level);
}

std::span<const ExogenousStep> TrainingTimeline::lookahead(std::size_t t, std::size_t k) const {
  return std::span<const ExogenousStep>(realized).subspan(t + 1, k);
}

// ---------------------------------------------------------------- training

FeatureEncoder fit_encoder(const TrainingTimeline& timeline, const DispatchModel& model,
                           int lookahead) {
  double ps_lo = std::numeric_limits<double>::infinity();
  double ps_hi = -ps_lo;
  double bound_lo = ps_lo, bound_hi = -ps_lo;
  double c1_lo = ps_lo, c1_hi = -ps_lo, c2_lo = ps_lo, c2_hi = -ps_lo, set_lo = ps_lo, set_hi = -ps_lo;
  for (std::size_t t = 0; t < timeline.size(); ++t) {
    const auto& r = timeline.realized[t];
    ps_lo = std::min(ps_lo, r.p_sum);
    ps_hi = std::max(ps_hi, r.p_sum);
    c1_lo = std::min(c1_lo, r.tariff_sell);
    c1_hi = std::max(c1_hi, r.tariff_sell);
    c2_lo = std::min(c2_lo, r.tariff_buy);
    c2_hi = std::max(c2_hi, r.tariff_buy);
    set_lo = std::min(set_lo, r.p_pcc_set);
    set_hi = std::max(set_hi, r.p_pcc_set);
    if (t + 1 < timeline.size()) {
      const ScenarioPool pool = timeline.pool_at(t, 1);
      bound_lo = std::min(bound_lo, pool.lower[0]);
      bound_hi = std::max(bound_hi, pool.upper[0]);
    }
  }
  const auto levels = model.actions.levels();
  const double a_lo = levels.front();
  const double a_hi = levels.back();
  const double p_lo = std::min(ps_lo, bound_lo);
  const double p_hi = std::max(ps_hi, bound_hi);
  std::vector<double> lo{model.batt.soc_min, p_lo, c1_lo, c2_lo, set_lo, -(p_hi + a_hi), a_lo};
  std::vector<double> hi{model.batt.soc_max, p_hi, c1_hi, c2_hi, set_hi, -(p_lo + a_lo), a_hi};
  for (int k = 0; k < lookahead; ++k) {
    lo.insert(lo.end(), {bound_lo, bound_lo});
    hi.insert(hi.end(), {bound_hi, bound_hi});
  }
  return FeatureEncoder(std::move(lo), std::move(hi));
}

namespace {

double auto_target_scale(const TrainingTimeline& timeline, const DispatchModel& model) {
  double scale = 1.0;
  DispatchState probe = timeline.initial_state();
  probe.soc = 0.5 * (model.batt.soc_min + model.batt.soc_max);
  for (std::size_t t = 0; t < timeline.size(); ++t) {
    const auto& r = timeline.realized[t];
    probe.p_sum = r.p_sum;
    probe.tariff_sell = r.tariff_sell;
    probe.tariff_buy = r.tariff_buy;
    probe.p_pcc_set = r.p_pcc_set;
    for (double a : model.actions.levels()) {
      scale = std::max(scale, std::abs(reward(probe, a, model.batt, model.weights).total));
    }
  }
  return scale;
}

}  // namespace

TrainingResult train(const TrainingTimeline& timeline, const LearnerConfig& cfg,
                     const MctsConfig& mcts, const DispatchModel& model_in, std::uint64_t seed) {
  cfg.validate();
  mcts.validate();
  timeline.validate();
  DispatchModel model = model_in;
  if (!cfg.rules_enabled) model.rules.reset();
  model.validate();

  MctsConfig search = mcts;
  search.gamma = cfg.gamma;

  const int n = cfg.bootstrap_depth;
  const std::size_t decisions = timeline.size() - 1;
  std::vector<ScenarioPool> pools;
  pools.reserve(decisions);
  for (std::size_t t = 0; t < decisions; ++t) pools.push_back(timeline.pool_at(t, n));

  const double scale = cfg.target_scale > 0.0 ? cfg.target_scale : auto_target_scale(timeline, model);
  TrainingResult result;
  result.net = QNetwork(fit_encoder(timeline, model, n), static_cast<std::size_t>(cfg.hidden), scale);
  {
    RngStream init(seed, {0});
    result.net.randomize(init);
    // a zero output layer starts every Q at 0: rewards are mostly negative,
    // so untried actions look better than tried ones early on
    auto theta = result.net.weights();
    const std::size_t out_begin = result.net.hidden() * result.net.inputs() + result.net.hidden();
    std::fill(theta.begin() + static_cast<std::ptrdiff_t>(out_begin), theta.end(), 0.0);
  }

  std::vector<TrainingExample> warm_batch;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const bool warm = ep < cfg.warm_start_episodes;
    DispatchState state = timeline.initial_state();
    double cumulative = 0.0;
    for (std::size_t t = 0; t < decisions; ++t) {
      const auto e = static_cast<std::uint64_t>(ep);
      const auto tt = static_cast<std::uint64_t>(t);
      const ScenarioPool& pool = pools[t];
      const std::vector<std::size_t> feasible =
          filter_with_fallback(state, model.actions, pool.mean[0], model.rules_ptr(), model.batt).actions;

      RngStream pick(seed, {1, e, tt});
      const std::size_t a = select_action(result.net, state, model.actions, feasible, pool, cfg.epsilon, pick);
      const double p_b = model.actions[a];
      const DispatchState next = transition(state, p_b, timeline.realized[t + 1], model.batt);

      if (warm) {
        // initial values: the one-step realized reward of every physically
        // admissible action, not just the rule-filtered ones, so the fit sees
        // both sides of each reward kink
        for (std::size_t b : admissible_actions(state, model.actions, model.batt)) {
          const double p = model.actions[b];
          const DispatchState nb = transition(state, p, timeline.realized[t + 1], model.batt);
          warm_batch.push_back(
              TrainingExample{result.net.encoder().encode(state, p, pool), warm_start_target(state, p, nb, model)});
        }
      } else {
        const auto steps = timeline.lookahead(t, pool.horizon());
        const ValueEstimate est =
            expected_max_value(state, a, pool, steps, model, search, derive_seed(seed, {2, e, tt}));
        const double target = est.value;
        result.dead_ends += est.dead_ends;
        if (pool.horizon() > 1) result.searches += est.scenarios_used;
        update(result.net, TrainingExample{result.net.encoder().encode(state, p_b, pool), target},
               cfg.step_size, cfg.weight_limit);
      }

      cumulative += step_reward(state, p_b, next, model.batt, model.weights).total;
      state = next;
    }
    if (warm) {
      // consecutive hours are strongly correlated; a shuffled pass fits the
      // whole day instead of chasing the most recent hours
      RngStream order(seed, {3, static_cast<std::uint64_t>(ep)});
      for (std::size_t i = warm_batch.size(); i > 1; --i) {
        std::swap(warm_batch[i - 1], warm_batch[order.index(i)]);
      }
      for (const TrainingExample& ex : warm_batch) update(result.net, ex, cfg.step_size, cfg.weight_limit);
      warm_batch.clear();
    }
    result.learning_curve.push_back(cumulative);
  }
  return result;
}

// ------------------------------------------------------------- persistence

namespace {
constexpr int kWeightsVersion = 1;
}

void save_weights(const QNetwork& net, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "bessd-qnetwork";
  j["version"] = kWeightsVersion;
  j["architecture"] = {{"inputs", net.inputs()},
                       {"hidden", net.hidden()},
                       {"activation", "tanh"},
                       {"lookahead", net.encoder().lookahead()},
                       {"output_scale", net.output_scale()}};
  j["normalization"] = {{"lo", net.encoder().lo()}, {"hi", net.encoder().hi()}};
  j["weights"] = std::vector<double>(net.weights().begin(), net.weights().end());
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write weights to {}", path.string()));
  out << j.dump(1) << '\n';
}

QNetwork load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read weights from {}", path.string()));
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("format") != "bessd-qnetwork") throw SchemaError("not a bessd weights file");
    if (j.at("version").get<int>() != kWeightsVersion) {
      throw SchemaError(fmt::format("unsupported weights version {}", j.at("version").dump()));
    }
    const auto& arch = j.at("architecture");
    FeatureEncoder enc(j.at("normalization").at("lo").get<std::vector<double>>(),
                       j.at("normalization").at("hi").get<std::vector<double>>());
    QNetwork net(std::move(enc), arch.at("hidden").get<std::size_t>(), arch.at("output_scale").get<double>());
    net.set_weights(j.at("weights").get<std::vector<double>>());
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(fmt::format("malformed weights file {}: {}", path.string(), e.what()));
  }
}

}  // namespace bessd
