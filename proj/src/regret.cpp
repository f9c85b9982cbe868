#include "drregret/regret.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "drregret/errors.hpp"

namespace drr {

namespace {

void require_same_horizon(int a, int b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": horizon mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
  }
}

// Runs body(begin, end) over contiguous chunks of [0, count).
template <typename Body>
void parallel_for(int count, int threads, Body&& body) {
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, std::max(count, 1));
  if (workers == 1) {
    body(0, count);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const int chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int begin = w * chunk;
    const int end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

EffectiveWeights effective_weights(const CostSpec& cost, const Policy& policy) {
  require_same_horizon(cost.horizon(), policy.horizon(), "effective_weights");
  EffectiveWeights out;
  out.Q.reserve(policy.horizon() + 1);
  for (const MatrixXd& k : policy.gains()) {
    if (k.cols() != cost.Q().rows() || k.rows() != cost.R().rows()) {
      throw DimensionError("effective_weights: gain shape does not match cost weights");
    }
    out.Q.push_back(symmetrize(cost.Q() + k.transpose() * cost.R() * k));
  }
  out.Q.push_back(cost.Qf());
  return out;
}

double expected_cost_analytic(const MomentTrajectory& moments,
                              const EffectiveWeights& weights) {
  require_same_horizon(moments.horizon(), weights.horizon(), "expected_cost_analytic");
  double total = 0.0;
  for (std::size_t k = 0; k < weights.Q.size(); ++k) {
    total += (weights.Q[k] * moments.covs[k]).trace();
    total += moments.means[k].dot(weights.Q[k] * moments.means[k]);
  }
  return total;
}

ErrorModel error_model(const MomentTrajectory& moments) {
  ErrorModel out;
  out.covs.reserve(moments.covs.size());
  out.omegas.reserve(moments.covs.size());
  for (const MatrixXd& cov : moments.covs) {
    out.covs.push_back(2.0 * cov);
    out.omegas.push_back(SecondMomentMatrix::from_covariance(out.covs.back()));
  }
  return out;
}

double pseudo_regret(const MomentTrajectory& moments_true,
                     const MomentTrajectory& moments_worst,
                     const EffectiveWeights& weights) {
  require_same_horizon(moments_true.horizon(), moments_worst.horizon(), "pseudo_regret");
  return expected_cost_analytic(moments_true, weights) -
         expected_cost_analytic(moments_worst, weights);
}

RolloutBatch simulate_rollouts(const LinearSystem& sys, const Policy& policy,
                               const CostSpec& cost, const ModelPair& models,
                               int count, const RngSpec& rng,
                               const RolloutOptions& options) {
  if (count < 1) throw InvalidInput("rollout count must be >= 1");
  if (models.x0.moments.dim() != sys.state_dim() ||
      models.w.moments.dim() != sys.disturbance_dim()) {
    throw DimensionError("simulate_rollouts: model dimensions do not match system");
  }
  const EffectiveWeights weights = effective_weights(cost, policy);
  const int T = policy.horizon();
  const auto n = sys.state_dim();
  std::vector<MatrixXd> closed(T);
  for (int k = 0; k < T; ++k) closed[k] = sys.A() + sys.B() * policy.gain(k);

  RolloutBatch batch;
  batch.costs.resize(count);
  if (options.keep_states) batch.states.assign(T + 1, MatrixXd(n, count));

  const Sampler x0_sampler(models.x0);
  const Sampler w_sampler(models.w);
  parallel_for(count, options.threads, [&](int begin, int end) {
    VectorXd x(n), next(n), w(sys.disturbance_dim());
    for (int i = begin; i < end; ++i) {
      RandomStream stream(rng.substream(static_cast<std::uint64_t>(i)));
      x0_sampler.draw(stream, x);
      double total = 0.0;
      for (int k = 0; k <= T; ++k) {
        if (options.keep_states) batch.states[k].col(i) = x;
        total += x.dot(weights.Q[k] * x);
        if (k == T) break;
        w_sampler.draw(stream, w);
        next.noalias() = closed[k] * x;
        next.noalias() += sys.D() * w;
        x.swap(next);
      }
      batch.costs[i] = total;
    }
  });
  return batch;
}

double bootstrap_std_error_difference(std::span<const double> a,
                                      std::span<const double> b,
                                      const Statistic& stat, int resamples,
                                      const RngSpec& rng) {
  if (a.empty() || b.empty()) throw InvalidInput("bootstrap: empty sample set");
  if (resamples < 2) throw InvalidInput("bootstrap: need >= 2 resamples");
  // Kept apart from the per-rollout substreams, which use small indices.
  RandomStream stream(rng.substream(0xb0075eedULL << 20));
  auto& engine = stream.engine();
  std::vector<double> ra(a.size()), rb(b.size()), diffs(resamples);
  std::uniform_int_distribution<std::size_t> pick_a(0, a.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_b(0, b.size() - 1);
  for (int r = 0; r < resamples; ++r) {
    for (auto& v : ra) v = a[pick_a(engine)];
    for (auto& v : rb) v = b[pick_b(engine)];
    diffs[r] = stat(ra) - stat(rb);
  }
  const double m = mean_of(diffs);
  double ss = 0.0;
  for (double d : diffs) ss += (d - m) * (d - m);
  return std::sqrt(ss / static_cast<double>(resamples - 1));
}

RoleStreams RoleStreams::independent(const RngSpec& base) {
  return {RngSpec{base.seed, 2 * base.stream}, RngSpec{base.seed, 2 * base.stream + 1}};
}

RoleStreams RoleStreams::shared(const RngSpec& base) {
  return {RngSpec{base.seed, 2 * base.stream}, RngSpec{base.seed, 2 * base.stream}};
}

DistributionalRegret empirical_distributional_regret(
    const LinearSystem& sys, const Policy& policy, const CostSpec& cost,
    const ModelPair& true_models, const ModelPair& worst_models,
    RiskLevel alpha, int count, const RoleStreams& streams, int threads) {
  constexpr double kMembershipTol = 1e-9;
  if (!membership_check(true_models.x0, worst_models.x0.moments, kMembershipTol) ||
      !membership_check(true_models.w, worst_models.w.moments, kMembershipTol)) {
    throw InvalidInput("true and worst-case models do not share the same moment sets");
  }
  const auto min_count = static_cast<int>(std::ceil(1.0 / alpha.value() - 1e-9));
  if (count < min_count) {
    throw InvalidInput("need at least ceil(1/alpha) = " + std::to_string(min_count) +
                       " rollouts, got " + std::to_string(count));
  }
  RolloutOptions options;
  options.threads = threads;
  DistributionalRegret out;
  out.costs_true =
      simulate_rollouts(sys, policy, cost, true_models, count, streams.true_stream, options)
          .costs;
  out.costs_worst =
      simulate_rollouts(sys, policy, cost, worst_models, count, streams.worst_stream, options)
          .costs;
  out.cvar_true = empirical_cvar(out.costs_true, alpha);
  out.cvar_worst = empirical_cvar(out.costs_worst, alpha);
  out.regret.value = out.cvar_true - out.cvar_worst;
  out.regret.std_error = bootstrap_std_error_difference(
      out.costs_true, out.costs_worst,
      [alpha](std::span<const double> v) { return empirical_cvar(v, alpha); },
      kBootstrapResamples, streams.true_stream);
  return out;
}

Estimate monte_carlo_pseudo_regret(std::span<const double> costs_true,
                                   std::span<const double> costs_worst,
                                   const RngSpec& rng) {
  if (costs_true.empty() || costs_worst.empty()) {
    throw InvalidInput("monte_carlo_pseudo_regret: empty cost set");
  }
  Estimate out;
  out.value = mean_of(costs_true) - mean_of(costs_worst);
  out.std_error = bootstrap_std_error_difference(costs_true, costs_worst, mean_of,
                                                 kBootstrapResamples, rng);
  return out;
}

double BoundDecomposition::trace_sum() const {
  return std::accumulate(trace_terms.begin(), trace_terms.end(), 0.0);
}

double BoundDecomposition::g_sum() const {
  return std::accumulate(g_terms.begin(), g_terms.end(), 0.0);
}

BoundDecomposition regret_bound(const ErrorModel& errors,
                                const EffectiveWeights& weights,
                                RiskLevel alpha,
                                const std::vector<MatrixXd>& nominal_states) {
  if (!(alpha.value() < 1.0)) throw InvalidInput("regret_bound: alpha must lie in (0, 1)");
  require_same_horizon(errors.horizon(), weights.horizon(), "regret_bound");
  require_same_horizon(static_cast<int>(nominal_states.size()) - 1, weights.horizon(),
                       "regret_bound");
  BoundDecomposition out;
  const std::size_t steps = weights.Q.size();
  out.trace_terms.resize(steps);
  out.g_terms.resize(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const MatrixXd& samples = nominal_states[k];
    if (samples.cols() < 1) throw InvalidInput("regret_bound: empty nominal sample set");
    if (samples.rows() != weights.Q[k].rows()) {
      throw DimensionError("regret_bound: nominal state dimension mismatch");
    }
    out.trace_terms[k] = (errors.covs[k] * weights.Q[k]).trace() / alpha.value();
    double g = 0.0;
    for (Eigen::Index i = 0; i < samples.cols(); ++i) {
      const VectorXd q = weights.Q[k] * samples.col(i);
      g += worst_case_cvar_linear(errors.covs[k], q, alpha);
    }
    out.g_terms[k] = g / static_cast<double>(samples.cols());
  }
  out.total = out.trace_sum() + out.g_sum();
  return out;
}

double sample_percentile(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidInput("sample_percentile: empty sample set");
  if (!(p >= 0.0 && p <= 100.0)) throw InvalidInput("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<ErrorStatRow> error_statistics(const RolloutBatch& true_batch,
                                           const RolloutBatch& worst_batch,
                                           std::span<const double> percentiles) {
  if (true_batch.states.empty() || true_batch.states.size() != worst_batch.states.size()) {
    throw DimensionError("error_statistics: both batches need states over the same horizon");
  }
  std::vector<ErrorStatRow> rows;
  for (std::size_t k = 0; k < true_batch.states.size(); ++k) {
    const MatrixXd e = true_batch.states[k] - worst_batch.states[k];
    const auto count = e.cols();
    if (count < 2) throw InvalidInput("error_statistics: need >= 2 rollouts");
    for (Eigen::Index c = 0; c < e.rows(); ++c) {
      ErrorStatRow row;
      row.k = static_cast<int>(k);
      row.component = static_cast<int>(c) + 1;
      std::vector<double> values(static_cast<std::size_t>(count));
      for (Eigen::Index i = 0; i < count; ++i) values[i] = e(c, i);
      row.mean = mean_of(values);
      double ss = 0.0;
      for (double v : values) ss += (v - row.mean) * (v - row.mean);
      row.std_error = std::sqrt(ss / static_cast<double>(count - 1) / static_cast<double>(count));
      for (double p : percentiles) row.percentiles.push_back(sample_percentile(values, p));
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace drr
