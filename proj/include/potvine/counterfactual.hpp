#ifndef POTVINE_COUNTERFACTUAL_HPP
#define POTVINE_COUNTERFACTUAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "potvine/errors.hpp"
#include "potvine/margins.hpp"
#include "potvine/numeric.hpp"
#include "potvine/rng.hpp"
#include "potvine/vine.hpp"

namespace potvine {

// Marginal extreme event: variable i above its tail threshold.
struct CauseEvent {
  int variable_index = 0;
  double threshold = 0.0;
};

inline CauseEvent cause_from_marginal(int variable_index, const MarginalModel& m) {
  return CauseEvent{variable_index, m.gpd.threshold};
}

// Linear impact event: weighted sum of H-transformed future coordinates above
// v. Weights live on the simplex over k*d coordinates, time-major (slice l,
// variable j) -> (l-1)*d + j. include_cause=false marks the cause variable's
// columns inadmissible for weight mass (ablation studies).
struct ImpactEvent {
  int horizon = 1;
  std::vector<double> weights;
  double impact_threshold = 0.0;
  TransformSpec transform;
  bool include_cause = true;
};

inline std::vector<double> uniform_weights(int k, int d) {
  return std::vector<double>(static_cast<std::size_t>(k) * d,
                             1.0 / (static_cast<double>(k) * d));
}

// Uniform over the admissible coordinates only.
inline std::vector<double> uniform_weights_masked(int k, int d, int cause_index) {
  std::vector<double> w(static_cast<std::size_t>(k) * d, 0.0);
  const double val = 1.0 / (static_cast<double>(k) * (d - 1));
  for (int l = 0; l < k; ++l)
    for (int j = 0; j < d; ++j)
      if (j != cause_index) w[static_cast<std::size_t>(l) * d + j] = val;
  return w;
}

// true where weight mass is admissible
inline std::vector<char> admissible_mask(const ImpactEvent& event, int cause_index,
                                         int d) {
  std::vector<char> mask(event.weights.size(), 1);
  if (!event.include_cause)
    for (std::size_t c = 0; c < mask.size(); ++c)
      if (static_cast<int>(c) % d == cause_index) mask[c] = 0;
  return mask;
}

struct WorldSplit {
  std::vector<std::size_t> factual;         // indices t with X^i_t > threshold
  std::vector<std::size_t> counterfactual;  // the complement, t <= N-k-1

  std::size_t n_f() const { return factual.size(); }
  std::size_t n_cf() const { return counterfactual.size(); }
};

// Factual/counterfactual index sets over rows whose k-step future exists.
inline WorldSplit split_worlds(const Matrix& data, const CauseEvent& cause, int k) {
  if (k < 1) throw ConfigError("split_worlds: k must be >= 1");
  if (data.rows() <= static_cast<std::size_t>(k))
    throw InsufficientData("split_worlds: series shorter than horizon");
  WorldSplit split;
  const std::size_t limit = data.rows() - static_cast<std::size_t>(k);
  for (std::size_t t = 0; t < limit; ++t) {
    if (data(t, static_cast<std::size_t>(cause.variable_index)) > cause.threshold)
      split.factual.push_back(t);
    else
      split.counterfactual.push_back(t);
  }
  if (split.factual.empty())
    throw EmptyWorld("split_worlds: cause never exceeds threshold " +
                     std::to_string(cause.threshold) + " (factual world empty)");
  if (split.counterfactual.empty())
    throw EmptyWorld("split_worlds: cause always exceeds threshold " +
                     std::to_string(cause.threshold) + " (counterfactual world empty)");
  return split;
}

// h(x; w) = sum_c w_c H(F(x_c)); raw mode skips the PIT and uses x directly.
inline double impact_value(std::span<const double> block_future, const ImpactEvent& event,
                           std::span<const MarginalModel> marginals) {
  const int d = static_cast<int>(marginals.size());
  if (block_future.size() != event.weights.size())
    throw DomainError("impact_value: weight/block size mismatch");
  double s = 0.0;
  for (std::size_t c = 0; c < block_future.size(); ++c) {
    const double w = event.weights[c];
    if (w == 0.0) continue;
    if (event.transform.kind == TransformKind::Raw) {
      s += w * block_future[c];
    } else {
      const double u =
          pit_forward(block_future[c], marginals[static_cast<std::size_t>(
                                           static_cast<int>(c) % d)]);
      s += w * transform_margin_H(u, event.transform);
    }
  }
  return s;
}

enum class WorldSide { Factual, Counterfactual };

// Empirical world probability: fraction of the side's indices whose following
// k*d block has impact value above the event threshold.
inline double empirical_world_probability(const Matrix& data, const WorldSplit& split,
                                          const ImpactEvent& event, WorldSide side,
                                          std::span<const MarginalModel> marginals) {
  const auto& idx = (side == WorldSide::Factual) ? split.factual : split.counterfactual;
  if (idx.empty()) throw EmptyWorld("empirical_world_probability: empty side");
  const int d = static_cast<int>(data.cols());
  const int k = event.horizon;
  std::vector<double> block(static_cast<std::size_t>(k) * d);
  std::size_t hits = 0;
  for (std::size_t t : idx) {
    for (int l = 1; l <= k; ++l)
      for (int j = 0; j < d; ++j)
        block[static_cast<std::size_t>(l - 1) * d + j] =
            data(t + static_cast<std::size_t>(l), static_cast<std::size_t>(j));
    if (impact_value(block, event, marginals) > event.impact_threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(idx.size());
}

struct PcTriple {
  double pn = 0.0;
  double ps = 0.0;
  double pns = 0.0;
  bool degenerate = false;  // p_f = 0 or p_cf = 1 denominator mapped to 0
};

// PN = (1 - p_cf/p_f)+, PS = (1 - (1-p_f)/(1-p_cf))+, PNS = (p_f - p_cf)+.
inline PcTriple probabilities_of_causation(double p_f, double p_cf) {
  if (!(p_f >= 0.0 && p_f <= 1.0 && p_cf >= 0.0 && p_cf <= 1.0))
    throw DomainError("probabilities_of_causation: probabilities outside [0,1]");
  PcTriple pc;
  if (p_f > 0.0) {
    pc.pn = std::max(0.0, 1.0 - p_cf / p_f);
  } else {
    pc.degenerate = true;
  }
  if (p_cf < 1.0) {
    pc.ps = std::max(0.0, 1.0 - (1.0 - p_f) / (1.0 - p_cf));
  } else {
    pc.degenerate = true;
  }
  pc.pns = std::max(0.0, p_f - p_cf);
  return pc;
}

struct CausationReport {
  double v = 0.0;
  double p_f = 0.0;
  double p_cf = 0.0;
  double pn = 0.0;
  double ps = 0.0;
  double pns = 0.0;
  std::string source;  // empirical | synthetic | tail_approx
  std::size_t n_f = 0;
  std::size_t n_cf = 0;
  std::uint64_t seed = 0;
  bool degenerate = false;
};

inline CausationReport make_report(double v, double p_f, double p_cf,
                                   std::string source, std::size_t n_f,
                                   std::size_t n_cf, std::uint64_t seed = 0) {
  const PcTriple pc = probabilities_of_causation(p_f, p_cf);
  CausationReport r;
  r.v = v;
  r.p_f = p_f;
  r.p_cf = p_cf;
  r.pn = pc.pn;
  r.ps = pc.ps;
  r.pns = pc.pns;
  r.source = std::move(source);
  r.n_f = n_f;
  r.n_cf = n_cf;
  r.seed = seed;
  r.degenerate = pc.degenerate;
  return r;
}

// Factual/counterfactual conditional draws from the fitted vine. For each
// sample a conditioning row is drawn (with replacement) from the observed
// rows of that world, PIT-transformed, propagated through the vine, and the
// simulated future block is mapped back to data scale.
struct WorldSamples {
  Matrix factual;         // n_per_world x (k d), data scale
  Matrix counterfactual;  // same shape
  std::size_t n_f_rows = 0;   // observed conditioning pool sizes
  std::size_t n_cf_rows = 0;
};

inline WorldSamples generate_counterfactual_samples(
    const StationaryVine& vine, const Matrix& data,
    std::span<const MarginalModel> marginals, const CauseEvent& cause, int k,
    std::size_t n_per_world, std::uint64_t seed) {
  if (k > vine.p)
    throw HorizonExceedsOrder("generate_counterfactual_samples: k exceeds Markov order");
  const WorldSplit split = split_worlds(data, cause, k);
  const int d = static_cast<int>(data.cols());

  WorldSamples out;
  out.n_f_rows = split.n_f();
  out.n_cf_rows = split.n_cf();
  std::vector<double> cond(static_cast<std::size_t>(d));
  for (int side = 0; side < 2; ++side) {
    const auto& pool = (side == 0) ? split.factual : split.counterfactual;
    const char* name = (side == 0) ? "counterfactual.rows.factual"
                                   : "counterfactual.rows.counterfactual";
    Matrix samples(n_per_world, static_cast<std::size_t>(k) * d);
    rng::Stream pick(seed, name);
    for (std::size_t s = 0; s < n_per_world; ++s) {
      const std::size_t row = pool[pick.below(pool.size())];
      for (int j = 0; j < d; ++j)
        cond[static_cast<std::size_t>(j)] =
            pit_forward(data(row, static_cast<std::size_t>(j)),
                        marginals[static_cast<std::size_t>(j)]);
      const Matrix u = simulate_conditional(
          vine, cond, k, 1,
          rng::splitmix64(seed ^ (static_cast<std::uint64_t>(side) << 32) ^ s));
      for (std::size_t c = 0; c < u.cols(); ++c)
        samples(s, c) = pit_inverse(
            u(0, c), marginals[static_cast<std::size_t>(static_cast<int>(c) % d)]);
    }
    (side == 0 ? out.factual : out.counterfactual) = std::move(samples);
  }
  return out;
}

// Tail continuation of an empirical estimate anchored at w^T H(mu0): survival
// of the reference GPD scales the anchored probability out to v. The anchor
// lives in gpd_ref.threshold.
inline double tail_probability_approx(double data_probability_at_anchor, double v,
                                      const GpdParams& gpd_ref) {
  if (!(data_probability_at_anchor >= 0.0 && data_probability_at_anchor <= 1.0))
    throw DomainError("tail_probability_approx: anchor probability outside [0,1]");
  if (v < gpd_ref.threshold)
    throw AnchorViolation("tail_probability_approx: v below the anchor");
  return data_probability_at_anchor * gpd_survival(v, gpd_ref);
}

// w^T H(mu0): the anchor point of the tail approximation for this event.
inline double impact_anchor(const ImpactEvent& event,
                            std::span<const MarginalModel> marginals) {
  if (event.transform.kind == TransformKind::Raw)
    throw DomainError("impact_anchor: raw mode has no H anchor");
  const int d = static_cast<int>(marginals.size());
  double s = 0.0;
  for (std::size_t c = 0; c < event.weights.size(); ++c) {
    const double q =
        marginals[static_cast<std::size_t>(static_cast<int>(c) % d)].gpd.threshold_quantile;
    s += event.weights[c] * transform_margin_H(q, event.transform);
  }
  return s;
}

// PC curve over a v grid from the observed series (empirical estimator).
inline std::vector<CausationReport> pc_curve_empirical(
    const Matrix& data, std::span<const MarginalModel> marginals,
    const CauseEvent& cause, const ImpactEvent& event_template,
    std::span<const double> v_grid) {
  const WorldSplit split = split_worlds(data, cause, event_template.horizon);
  std::vector<CausationReport> out;
  ImpactEvent ev = event_template;
  for (double v : v_grid) {
    ev.impact_threshold = v;
    const double pf =
        empirical_world_probability(data, split, ev, WorldSide::Factual, marginals);
    const double pcf = empirical_world_probability(data, split, ev,
                                                   WorldSide::Counterfactual, marginals);
    out.push_back(make_report(v, pf, pcf, "empirical", split.n_f(), split.n_cf()));
  }
  return out;
}

// PC curve from generated world samples (synthetic estimator).
inline std::vector<CausationReport> pc_curve_from_samples(
    const WorldSamples& samples, std::span<const MarginalModel> marginals,
    const ImpactEvent& event_template, std::span<const double> v_grid,
    std::uint64_t seed = 0) {
  ImpactEvent ev = event_template;
  auto frac_above = [&](const Matrix& m, double v) {
    std::size_t hits = 0;
    for (std::size_t r = 0; r < m.rows(); ++r)
      if (impact_value(m.row(r), ev, marginals) > v) ++hits;
    return static_cast<double>(hits) / static_cast<double>(m.rows());
  };
  std::vector<CausationReport> out;
  for (double v : v_grid) {
    ev.impact_threshold = v;
    const double pf = frac_above(samples.factual, v);
    const double pcf = frac_above(samples.counterfactual, v);
    out.push_back(
        make_report(v, pf, pcf, "synthetic", samples.n_f_rows, samples.n_cf_rows, seed));
  }
  return out;
}

}  // namespace potvine

#endif  // POTVINE_COUNTERFACTUAL_HPP
