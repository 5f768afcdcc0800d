#ifndef POTVINE_GPD_HPP
#define POTVINE_GPD_HPP

#include <cmath>
#include <span>
#include <vector>

#include "potvine/errors.hpp"
#include "potvine/numeric.hpp"

namespace potvine {

// Peaks-over-threshold tail: shape (gamma), scale (sigma), threshold (mu) and
// the quantile level the threshold sits at.
struct GpdParams {
  double shape = 0.0;
  double scale = 1.0;
  double threshold = 0.0;
  double threshold_quantile = 0.5;

  void validate() const {
    if (!(scale > 0.0)) throw DomainError("GpdParams: scale must be positive");
    if (!(threshold_quantile > 0.0 && threshold_quantile < 1.0))
      throw DomainError("GpdParams: threshold_quantile outside (0,1)");
  }
};

// |shape| at or below this is evaluated with the exponential (shape -> 0) form.
inline constexpr double kGpdShapeZeroTol = 1e-6;

inline double gpd_survival(double x, double shape, double scale, double threshold) {
  const double z = (x - threshold) / scale;
  if (z <= 0.0) return 1.0;
  if (std::abs(shape) <= kGpdShapeZeroTol) return std::exp(-z);
  const double t = 1.0 + shape * z;
  if (t <= 0.0) return 0.0;  // beyond the upper endpoint (shape < 0)
  return std::exp(-std::log1p(shape * z) / shape);
}

inline double gpd_survival(double x, const GpdParams& p) {
  return gpd_survival(x, p.shape, p.scale, p.threshold);
}

inline double gpd_cdf(double x, const GpdParams& p) { return 1.0 - gpd_survival(x, p); }

// log density; -inf outside the support.
inline double gpd_logpdf(double x, double shape, double scale, double threshold) {
  const double z = (x - threshold) / scale;
  if (z < 0.0) return -std::numeric_limits<double>::infinity();
  if (std::abs(shape) <= kGpdShapeZeroTol) return -std::log(scale) - z;
  const double t = 1.0 + shape * z;
  if (t <= 0.0) return -std::numeric_limits<double>::infinity();
  return -std::log(scale) - (1.0 + 1.0 / shape) * std::log1p(shape * z);
}

inline double gpd_quantile(double u, double shape, double scale, double threshold) {
  if (!(u >= 0.0 && u < 1.0)) throw DomainError("gpd_quantile: u outside [0,1)");
  if (std::abs(shape) <= kGpdShapeZeroTol) return threshold - scale * std::log1p(-u);
  // sigma/gamma * ((1-u)^(-gamma) - 1), computed via expm1 for accuracy.
  return threshold + scale / shape * std::expm1(-shape * std::log1p(-u));
}

inline double gpd_quantile(double u, const GpdParams& p) {
  return gpd_quantile(u, p.shape, p.scale, p.threshold);
}

struct GpdFit {
  GpdParams params;
  double se_shape = 0.0;
  double se_scale = 0.0;
  double loglik = 0.0;
  int iterations = 0;
};

namespace detail {

inline double gpd_negloglik(double shape, double scale,
                            std::span<const double> excess) {
  const auto n = static_cast<double>(excess.size());
  if (std::abs(shape) <= kGpdShapeZeroTol) {
    double s = 0.0;
    for (double z : excess) s += z;
    return n * std::log(scale) + s / scale;
  }
  double s = 0.0;
  for (double z : excess) {
    const double t = 1.0 + shape * z / scale;
    if (t <= 0.0) return std::numeric_limits<double>::infinity();
    s += std::log1p(shape * z / scale);
  }
  return n * std::log(scale) + (1.0 + 1.0 / shape) * s;
}

// Probability-weighted-moment starting values (Hosking & Wallis).
inline std::pair<double, double> gpd_pwm_init(std::span<const double> excess) {
  std::vector<double> z(excess.begin(), excess.end());
  std::sort(z.begin(), z.end());
  const auto n = z.size();
  double b0 = 0.0, b1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    b0 += z[i];
    b1 += z[i] * static_cast<double>(n - 1 - i) / static_cast<double>(n - 1);
  }
  b0 /= static_cast<double>(n);
  b1 /= static_cast<double>(n);
  const double denom = b0 - 2.0 * b1;
  double shape = 0.0, scale = b0;
  if (std::abs(denom) > 1e-12 * b0) {
    shape = 2.0 - b0 / denom;
    scale = 2.0 * b0 * b1 / denom;
  }
  shape = std::clamp(shape, -0.9, 0.9);
  if (!(scale > 0.0)) scale = b0 > 0.0 ? b0 : 1.0;
  return {shape, scale};
}

}  // namespace detail

// Maximum likelihood fit of (shape, scale) to exceedances above `threshold`.
// Nelder-Mead on (shape, log scale) from PWM starting values, one restart.
// Standard errors from the inverse observed information.
inline GpdFit fit_gpd_mle(std::span<const double> exceedances, double threshold) {
  if (exceedances.size() < 30)
    throw InsufficientData("fit_gpd_mle: need at least 30 exceedances");
  std::vector<double> excess;
  excess.reserve(exceedances.size());
  double zmin = std::numeric_limits<double>::infinity(), zmax = 0.0;
  for (double x : exceedances) {
    const double z = x - threshold;
    if (!(z > 0.0))
      throw DomainError("fit_gpd_mle: exceedance not strictly above threshold");
    excess.push_back(z);
    zmin = std::min(zmin, z);
    zmax = std::max(zmax, z);
  }
  if (zmax - zmin < 1e-12 * zmax)
    throw ConvergenceFailure("fit_gpd_mle: degenerate likelihood (all exceedances equal)");

  auto [shape0, scale0] = detail::gpd_pwm_init(excess);
  auto obj = [&](std::span<const double> p) {
    const double shape = p[0];
    const double scale = std::exp(p[1]);
    if (std::abs(shape) > 50.0 || scale > 1e10 || scale < 1e-12) return 1e12;
    const double nll = detail::gpd_negloglik(shape, scale, excess);
    if (!std::isfinite(nll)) {
      // support violated: push back toward feasibility
      return 1e10 + std::abs(shape) * 1e6;
    }
    return nll;
  };

  auto run = [&](std::vector<double> start, int budget) {
    return numeric::nelder_mead(obj, std::move(start), 0.2, 1e-10, budget);
  };
  auto r1 = run({shape0, std::log(scale0)}, 250);
  auto r2 = run(r1.x, 250);  // restart around the first optimum
  if (!r2.converged && !r1.converged)
    throw ConvergenceFailure("fit_gpd_mle: no convergence in 500 iterations");
  const auto& best = (r2.fx <= r1.fx) ? r2 : r1;

  GpdFit fit;
  fit.params.shape = best.x[0];
  fit.params.scale = std::exp(best.x[1]);
  fit.params.threshold = threshold;
  fit.params.threshold_quantile = 0.5;  // caller overwrites
  fit.loglik = -best.fx;
  fit.iterations = r1.iterations + r2.iterations;

  // Observed information via central differences in (shape, scale).
  const double g = fit.params.shape, s = fit.params.scale;
  const double hg = 1e-5 * (1.0 + std::abs(g));
  const double hs = 1e-5 * s;
  auto nll = [&](double a, double b) { return detail::gpd_negloglik(a, b, excess); };
  const double f0 = nll(g, s);
  const double dgg = (nll(g + hg, s) - 2.0 * f0 + nll(g - hg, s)) / (hg * hg);
  const double dss = (nll(g, s + hs) - 2.0 * f0 + nll(g, s - hs)) / (hs * hs);
  const double dgs = (nll(g + hg, s + hs) - nll(g + hg, s - hs) - nll(g - hg, s + hs) +
                      nll(g - hg, s - hs)) /
                     (4.0 * hg * hs);
  if (std::isfinite(dgg) && std::isfinite(dss) && std::isfinite(dgs)) {
    try {
      auto inv = numeric::invert_2x2(dgg, dgs, dss);
      if (inv[0] > 0.0) fit.se_shape = std::sqrt(inv[0]);
      if (inv[3] > 0.0) fit.se_scale = std::sqrt(inv[3]);
    } catch (const NumericError&) {
      // leave SEs at zero when the information matrix is singular
    }
  }
  return fit;
}

}  // namespace potvine

#endif  // POTVINE_GPD_HPP
