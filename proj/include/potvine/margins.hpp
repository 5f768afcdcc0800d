#ifndef POTVINE_MARGINS_HPP
#define POTVINE_MARGINS_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "potvine/errors.hpp"
#include "potvine/gpd.hpp"
#include "potvine/rng.hpp"

namespace potvine {

struct ThresholdSelectionResult {
  std::vector<double> candidates;      // ascending thresholds (data units)
  std::vector<double> quantiles;       // the candidate quantile levels
  std::vector<double> p_values;        // one GoF p-value per candidate
  std::size_t rejected_count = 0;
  std::size_t chosen_index = 0;
};

// Semiparametric margin: empirical body below the selected threshold, GPD tail
// above it. Immutable once fitted.
struct MarginalModel {
  std::vector<double> sorted_sample;
  GpdParams gpd;
  std::string name;
  double se_shape = 0.0;
  double se_scale = 0.0;
};

namespace margins {

// Anderson-Darling statistic of `sorted` (ascending) against the fitted GPD.
inline double anderson_darling(std::span<const double> sorted, const GpdParams& p) {
  const auto n = sorted.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = std::clamp(gpd_cdf(sorted[i], p), 1e-12, 1.0 - 1e-12);
    const double wj = std::clamp(gpd_cdf(sorted[n - 1 - i], p), 1e-12, 1.0 - 1e-12);
    s += (2.0 * static_cast<double>(i) + 1.0) * (std::log(wi) + std::log1p(-wj));
  }
  return -static_cast<double>(n) - s / static_cast<double>(n);
}

}  // namespace margins

// Parametric-bootstrap p-value for the Anderson-Darling GPD goodness-of-fit
// test. Replicates draw from the fitted model, refit, and recompute the
// statistic; the p-value is the fraction of replicate statistics at or above
// the observed one. Deterministic for fixed seed; replicate substreams are
// independent, so results do not depend on evaluation order.
inline double bootstrap_gof_pvalue(std::span<const double> exceedances,
                                   double threshold, int replicates,
                                   std::uint64_t seed) {
  if (replicates < 100)
    throw ConfigError("bootstrap_gof_pvalue: replicates must be >= 100");
  const GpdFit fit = fit_gpd_mle(exceedances, threshold);
  std::vector<double> sorted(exceedances.begin(), exceedances.end());
  std::sort(sorted.begin(), sorted.end());
  const double observed = margins::anderson_darling(sorted, fit.params);

  const auto n = exceedances.size();
  int exceed = 0, valid = 0, failed = 0;
  std::vector<double> sim(n);
  for (int r = 0; r < replicates; ++r) {
    rng::Stream stream(seed, "margins.gof_bootstrap", static_cast<std::uint64_t>(r));
    for (std::size_t i = 0; i < n; ++i) {
      sim[i] = gpd_quantile(stream.uniform(), fit.params);
      // tiny draws can round onto the threshold itself
      if (sim[i] <= threshold)
        sim[i] = std::nextafter(threshold, std::numeric_limits<double>::infinity());
    }
    try {
      const GpdFit refit = fit_gpd_mle(sim, threshold);
      std::sort(sim.begin(), sim.end());
      const double stat = margins::anderson_darling(sim, refit.params);
      ++valid;
      if (stat >= observed) ++exceed;
    } catch (const NumericError&) {
      ++failed;
    }
  }
  if (failed * 5 > replicates)
    throw ConvergenceFailure("bootstrap_gof_pvalue: more than 20% of replicate fits failed");
  return static_cast<double>(exceed) / static_cast<double>(valid);
}

// ForwardStop rule: number of leading hypotheses rejected at FDR level alpha.
// rejected = max{ k : (1/k) sum_{i<=k} -log(1-p_i) <= alpha }, 0 if none.
inline std::size_t forward_stop_rejected_count(std::span<const double> p_values,
                                               double alpha) {
  std::size_t rejected = 0;
  double acc = 0.0;
  for (std::size_t k = 0; k < p_values.size(); ++k) {
    const double p = p_values[k];
    acc += (p < 1.0) ? -std::log1p(-p) : std::numeric_limits<double>::infinity();
    if (acc / static_cast<double>(k + 1) <= alpha) rejected = k + 1;
  }
  return rejected;
}

// Sequential GoF testing over candidate thresholds (empirical quantiles of the
// sample) with the ForwardStop rule; the chosen threshold is the first
// non-rejected candidate.
inline ThresholdSelectionResult select_threshold_forward_stop(
    std::span<const double> sample, std::span<const double> candidate_quantiles,
    double alpha, std::uint64_t seed, int replicates = 500) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ConfigError("select_threshold_forward_stop: alpha outside (0,1)");
  for (std::size_t i = 0; i < candidate_quantiles.size(); ++i) {
    const double q = candidate_quantiles[i];
    if (!(q > 0.0 && q < 1.0))
      throw ConfigError("select_threshold_forward_stop: quantile outside (0,1)");
    if (i > 0 && !(q > candidate_quantiles[i - 1]))
      throw ConfigError("select_threshold_forward_stop: quantiles not ascending");
  }
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());

  ThresholdSelectionResult res;
  for (std::size_t l = 0; l < candidate_quantiles.size(); ++l) {
    const double q = candidate_quantiles[l];
    const double thr = numeric::sorted_quantile(sorted, q);
    std::vector<double> exc;
    for (auto it = std::upper_bound(sorted.begin(), sorted.end(), thr);
         it != sorted.end(); ++it)
      exc.push_back(*it);
    res.candidates.push_back(thr);
    res.quantiles.push_back(q);
    res.p_values.push_back(bootstrap_gof_pvalue(
        exc, thr, replicates, rng::splitmix64(seed ^ (0x51ecu + l))));
  }
  res.rejected_count = forward_stop_rejected_count(res.p_values, alpha);
  if (res.rejected_count >= res.candidates.size())
    throw AllThresholdsRejected(
        "select_threshold_forward_stop: every candidate threshold rejected");
  res.chosen_index = res.rejected_count;
  return res;
}

// Fit the tail at a fixed, user-supplied threshold quantile (manual override).
inline MarginalModel fit_marginal_model_at(std::span<const double> sample,
                                           double threshold_quantile,
                                           std::string name = {}) {
  MarginalModel m;
  m.name = std::move(name);
  m.sorted_sample.assign(sample.begin(), sample.end());
  std::sort(m.sorted_sample.begin(), m.sorted_sample.end());
  const double thr = numeric::sorted_quantile(m.sorted_sample, threshold_quantile);
  std::vector<double> exc;
  for (auto it = std::upper_bound(m.sorted_sample.begin(), m.sorted_sample.end(), thr);
       it != m.sorted_sample.end(); ++it)
    exc.push_back(*it);
  const GpdFit fit = fit_gpd_mle(exc, thr);
  m.gpd = fit.params;
  m.gpd.threshold_quantile = threshold_quantile;
  m.se_shape = fit.se_shape;
  m.se_scale = fit.se_scale;
  return m;
}

// Threshold selection followed by the final tail fit. The stored threshold is
// the empirical quantile of the sorted sample at the chosen level.
inline MarginalModel fit_marginal_model(std::span<const double> sample,
                                        std::span<const double> candidate_quantiles,
                                        double alpha, std::uint64_t seed,
                                        int replicates = 500,
                                        std::string name = {}) {
  if (sample.size() < 500)
    throw InsufficientData("fit_marginal_model: need at least 500 observations");
  const auto sel =
      select_threshold_forward_stop(sample, candidate_quantiles, alpha, seed, replicates);
  return fit_marginal_model_at(sample, sel.quantiles[sel.chosen_index],
                               std::move(name));
}

namespace margins {

// Rank-based empirical cdf value, rank/(n+1), average ranks on ties.
inline double ecdf_value(const std::vector<double>& sorted, double x) {
  const auto n = static_cast<double>(sorted.size());
  const auto lo = std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
  const auto hi = std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
  double r;
  if (hi > lo)
    r = 0.5 * static_cast<double>(lo + hi + 1);  // average rank of the tied group
  else
    r = static_cast<double>(hi);
  return std::clamp(r / (n + 1.0), 0.5 / (n + 1.0), 1.0 - 1e-12);
}

}  // namespace margins

// Semiparametric probability integral transform: empirical cdf below the
// threshold, rescaled GPD survival above it. Monotone, output in (0,1).
inline double pit_forward(double x, const MarginalModel& m) {
  const double fmu = margins::ecdf_value(m.sorted_sample, m.gpd.threshold);
  if (x <= m.gpd.threshold) return margins::ecdf_value(m.sorted_sample, x);
  const double u = fmu + (1.0 - fmu) * (1.0 - gpd_survival(x, m.gpd));
  return std::min(u, 1.0 - 1e-12);
}

// Inverse of pit_forward: interpolated empirical quantile in the body, GPD
// quantile of the rescaled tail probability above the threshold.
inline double pit_inverse(double u, const MarginalModel& m) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("pit_inverse: u outside (0,1)");
  const double fmu = margins::ecdf_value(m.sorted_sample, m.gpd.threshold);
  if (u > fmu) return gpd_quantile((u - fmu) / (1.0 - fmu), m.gpd);
  const auto n = m.sorted_sample.size();
  const double pos = u * static_cast<double>(n + 1);  // grid i <-> sorted[i-1]
  if (pos <= 1.0) return m.sorted_sample.front();
  if (pos >= static_cast<double>(n)) return m.sorted_sample.back();
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return m.sorted_sample[i - 1] +
         frac * (m.sorted_sample[i] - m.sorted_sample[i - 1]);
}

// Marginal transform H applied to probabilities before the weighted impact
// sum. Raw mode (skip the PIT entirely) is handled by the impact evaluation,
// not here.
enum class TransformKind { Raw, Identity, Exponential, Gpd };

struct TransformSpec {
  TransformKind kind = TransformKind::Exponential;
  double shape = 0.0;  // for TransformKind::Gpd
  double scale = 1.0;
};

inline double transform_margin_H(double u, const TransformSpec& spec) {
  switch (spec.kind) {
    case TransformKind::Identity:
      if (!(u >= 0.0 && u <= 1.0)) throw DomainError("transform_margin_H: u outside [0,1]");
      return u;
    case TransformKind::Exponential:
      if (!(u > 0.0 && u < 1.0)) throw DomainError("transform_margin_H: u outside (0,1)");
      return -std::log1p(-u);
    case TransformKind::Gpd:
      if (!(u > 0.0 && u < 1.0)) throw DomainError("transform_margin_H: u outside (0,1)");
      return gpd_quantile(u, spec.shape, spec.scale, 0.0);
    case TransformKind::Raw:
      throw DomainError("transform_margin_H: raw mode bypasses H");
  }
  throw DomainError("transform_margin_H: unknown transform");
}

}  // namespace potvine

#endif  // POTVINE_MARGINS_HPP
