#ifndef POTVINE_DIAGNOSTICS_HPP
#define POTVINE_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "potvine/errors.hpp"
#include "potvine/numeric.hpp"
#include "potvine/rng.hpp"

namespace potvine {

enum class CorrelationKind { Acf, Pacf, Ccf, Pccf };

inline const char* correlation_kind_name(CorrelationKind k) {
  switch (k) {
    case CorrelationKind::Acf: return "acf";
    case CorrelationKind::Pacf: return "pacf";
    case CorrelationKind::Ccf: return "ccf";
    case CorrelationKind::Pccf: return "pccf";
  }
  return "?";
}

struct CorrelationSeries {
  CorrelationKind kind = CorrelationKind::Acf;
  std::vector<int> lags;
  std::vector<double> values;
  double ci_halfwidth = 0.0;  // 1.96 / sqrt(n)
};

struct AdfResult {
  double statistic = 0.0;
  int lags_used = 0;
  bool reject_at_1pct = false;  // statistic < -3.43
};

inline constexpr double kAdf1pctCritical = -3.43;

// Gaussian jitter at noise_fraction * sd, then exact rescale to unit sample
// variance. noise_fraction = 0 is a pure rescale.
inline std::vector<double> jitter_and_normalize(std::span<const double> series,
                                                double noise_fraction,
                                                std::uint64_t seed) {
  if (series.size() < 2) throw InsufficientData("jitter_and_normalize: series too short");
  const double sd = std::sqrt(numeric::variance(series));
  if (!(sd > 0.0)) throw ZeroVariance("jitter_and_normalize: constant series");
  std::vector<double> out(series.begin(), series.end());
  if (noise_fraction > 0.0) {
    rng::Stream stream(seed, "diagnostics.jitter");
    for (double& v : out) v += noise_fraction * sd * stream.normal();
  }
  const double sd2 = std::sqrt(numeric::variance(out));
  if (!(sd2 > 0.0)) throw ZeroVariance("jitter_and_normalize: degenerate after jitter");
  for (double& v : out) v /= sd2;
  return out;
}

namespace diag_detail {

// Sample cross-covariance of (x_t, y_{t+h}) with 1/n normalization.
inline double cross_cov(std::span<const double> x, std::span<const double> y, int h) {
  const auto n = x.size();
  const double mx = numeric::mean(x), my = numeric::mean(y);
  double s = 0.0;
  for (std::size_t t = 0; t + static_cast<std::size_t>(h) < n; ++t)
    s += (x[t] - mx) * (y[t + static_cast<std::size_t>(h)] - my);
  return s / static_cast<double>(n);
}

// PACF from the ACF sequence via Durbin-Levinson.
inline std::vector<double> pacf_from_acf(std::span<const double> rho, int max_lag) {
  std::vector<double> pacf(static_cast<std::size_t>(max_lag) + 1, 0.0);
  pacf[0] = 1.0;
  if (max_lag == 0) return pacf;
  std::vector<double> phi(static_cast<std::size_t>(max_lag) + 1, 0.0);
  std::vector<double> prev(static_cast<std::size_t>(max_lag) + 1, 0.0);
  double v = 1.0 - rho[1] * rho[1];
  phi[1] = rho[1];
  pacf[1] = rho[1];
  for (int k = 2; k <= max_lag; ++k) {
    prev = phi;
    double num = rho[static_cast<std::size_t>(k)];
    for (int j = 1; j < k; ++j)
      num -= prev[static_cast<std::size_t>(j)] * rho[static_cast<std::size_t>(k - j)];
    const double a = num / v;
    phi[static_cast<std::size_t>(k)] = a;
    for (int j = 1; j < k; ++j)
      phi[static_cast<std::size_t>(j)] =
          prev[static_cast<std::size_t>(j)] - a * prev[static_cast<std::size_t>(k - j)];
    v *= (1.0 - a * a);
    pacf[static_cast<std::size_t>(k)] = a;
    if (!(v > 1e-14)) break;
  }
  return pacf;
}

}  // namespace diag_detail

// Sample correlation functions at lags 0..max_lag. For acf/pacf pass one
// series; ccf/pccf correlate x_t with y_{t+h}. pccf(h) is the partial
// correlation of x_t and y_{t+h} given the intermediate y_{t+1..t+h-1}.
inline CorrelationSeries correlation_functions(std::span<const double> x,
                                               std::span<const double> y, int max_lag,
                                               CorrelationKind kind) {
  const bool cross = (kind == CorrelationKind::Ccf || kind == CorrelationKind::Pccf);
  std::span<const double> ys = cross ? y : x;
  if (ys.size() != x.size())
    throw InsufficientData("correlation_functions: length mismatch");
  const auto n = x.size();
  if (static_cast<std::size_t>(max_lag) >= n)
    throw InsufficientData("correlation_functions: lag >= series length");
  const double vx = diag_detail::cross_cov(x, x, 0);
  const double vy = diag_detail::cross_cov(ys, ys, 0);
  if (!(vx > 0.0) || !(vy > 0.0))
    throw ZeroVariance("correlation_functions: constant series");

  CorrelationSeries out;
  out.kind = kind;
  out.ci_halfwidth = 1.96 / std::sqrt(static_cast<double>(n));
  for (int h = 0; h <= max_lag; ++h) out.lags.push_back(h);

  std::vector<double> corr(static_cast<std::size_t>(max_lag) + 1);
  for (int h = 0; h <= max_lag; ++h)
    corr[static_cast<std::size_t>(h)] =
        diag_detail::cross_cov(x, ys, h) / std::sqrt(vx * vy);

  switch (kind) {
    case CorrelationKind::Acf:
    case CorrelationKind::Ccf:
      out.values = corr;
      break;
    case CorrelationKind::Pacf:
      out.values = diag_detail::pacf_from_acf(corr, max_lag);
      break;
    case CorrelationKind::Pccf: {
      // partial out y_{t+1..t+h-1} from both x_t and y_{t+h} using the
      // autocovariance structure of y and the cross-covariances
      out.values.assign(static_cast<std::size_t>(max_lag) + 1, 0.0);
      std::vector<double> ry(static_cast<std::size_t>(max_lag) + 1);
      for (int h = 0; h <= max_lag; ++h)
        ry[static_cast<std::size_t>(h)] = diag_detail::cross_cov(ys, ys, h) / vy;
      for (int h = 0; h <= max_lag; ++h) {
        if (h <= 1) {
          out.values[static_cast<std::size_t>(h)] = corr[static_cast<std::size_t>(h)];
          continue;
        }
        const int q = h - 1;  // intermediates y_{t+1..t+h-1}
        std::vector<double> gram(static_cast<std::size_t>(q) * q);
        std::vector<double> bx(static_cast<std::size_t>(q)), by(static_cast<std::size_t>(q));
        for (int a = 0; a < q; ++a) {
          for (int b = 0; b < q; ++b)
            gram[static_cast<std::size_t>(a) * q + b] =
                ry[static_cast<std::size_t>(std::abs(a - b))];
          bx[static_cast<std::size_t>(a)] = corr[static_cast<std::size_t>(a + 1)];
          by[static_cast<std::size_t>(a)] = ry[static_cast<std::size_t>(h - 1 - a)];
        }
        const auto cx = numeric::solve_linear(gram, bx);
        const auto cy = numeric::solve_linear(gram, by);
        double num = corr[static_cast<std::size_t>(h)];
        double var_x = 1.0, var_y = 1.0;
        for (int a = 0; a < q; ++a) {
          num -= cx[static_cast<std::size_t>(a)] * ry[static_cast<std::size_t>(h - 1 - a)];
          var_x -= cx[static_cast<std::size_t>(a)] * bx[static_cast<std::size_t>(a)];
          var_y -= cy[static_cast<std::size_t>(a)] * by[static_cast<std::size_t>(a)];
        }
        out.values[static_cast<std::size_t>(h)] =
            (var_x > 1e-12 && var_y > 1e-12) ? num / std::sqrt(var_x * var_y) : 0.0;
      }
      break;
    }
  }
  for (double& v : out.values) v = std::clamp(v, -1.0, 1.0);
  return out;
}

inline CorrelationSeries correlation_functions(std::span<const double> x, int max_lag,
                                               CorrelationKind kind) {
  return correlation_functions(x, x, max_lag, kind);
}

// Augmented Dickey-Fuller test, constant and no trend:
// dx_t = c + rho x_{t-1} + sum_i phi_i dx_{t-i} + e_t. The statistic is the
// t-ratio of rho, compared against the hard-coded 1% critical value -3.43.
inline AdfResult adf_test(std::span<const double> series, int max_lag = 1) {
  const auto n = series.size();
  const int m = max_lag + 2;  // constant, level, lagged differences
  if (n < static_cast<std::size_t>(m + 8))
    throw InsufficientData("adf_test: series too short for the regression");
  if (!(numeric::variance(series) > 0.0)) throw ZeroVariance("adf_test: constant series");

  std::vector<double> dx(n - 1);
  for (std::size_t t = 0; t + 1 < n; ++t) dx[t] = series[t + 1] - series[t];

  const std::size_t rows = n - 1 - static_cast<std::size_t>(max_lag);
  Matrix X(rows, static_cast<std::size_t>(m));
  std::vector<double> yv(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = r + static_cast<std::size_t>(max_lag);  // dx index
    yv[r] = dx[t];
    X(r, 0) = 1.0;
    X(r, 1) = series[t];  // x_{t-1} for the dx_t = x_t - x_{t-1} at index t
    for (int i = 1; i <= max_lag; ++i)
      X(r, static_cast<std::size_t>(1 + i)) = dx[t - static_cast<std::size_t>(i)];
  }

  // normal equations
  std::vector<double> xtx(static_cast<std::size_t>(m) * m, 0.0);
  std::vector<double> xty(static_cast<std::size_t>(m), 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (int a = 0; a < m; ++a) {
      xty[static_cast<std::size_t>(a)] += X(r, static_cast<std::size_t>(a)) * yv[r];
      for (int b = a; b < m; ++b)
        xtx[static_cast<std::size_t>(a) * m + b] +=
            X(r, static_cast<std::size_t>(a)) * X(r, static_cast<std::size_t>(b));
    }
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < a; ++b)
      xtx[static_cast<std::size_t>(a) * m + b] = xtx[static_cast<std::size_t>(b) * m + a];

  const auto beta = numeric::solve_linear(xtx, xty);
  double rss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double fitted = 0.0;
    for (int a = 0; a < m; ++a)
      fitted += beta[static_cast<std::size_t>(a)] * X(r, static_cast<std::size_t>(a));
    rss += (yv[r] - fitted) * (yv[r] - fitted);
  }
  const double s2 = rss / static_cast<double>(rows - static_cast<std::size_t>(m));

  // (X'X)^-1 column for the level coefficient
  std::vector<double> e(static_cast<std::size_t>(m), 0.0);
  e[1] = 1.0;
  const auto col = numeric::solve_linear(xtx, e);
  const double se = std::sqrt(s2 * col[1]);

  AdfResult res;
  res.statistic = beta[1] / se;
  res.lags_used = max_lag;
  res.reject_at_1pct = res.statistic < kAdf1pctCritical;
  return res;
}

// Finite-level plug-in extremal correlation: the fraction of times x_i is
// above its u-quantile for which x_j is above its own u-quantile h steps
// later. Rank-based, hence invariant under increasing marginal transforms.
inline double empirical_extremal_correlation(std::span<const double> x_i,
                                             std::span<const double> x_j, int h,
                                             double u) {
  if (!(u > 0.0 && u < 1.0))
    throw ConfigError("empirical_extremal_correlation: u outside (0,1)");
  if (x_i.size() != x_j.size())
    throw InsufficientData("empirical_extremal_correlation: length mismatch");
  if (h < 0 || static_cast<std::size_t>(h) >= x_i.size())
    throw InsufficientData("empirical_extremal_correlation: lag outside series");
  std::vector<double> si(x_i.begin(), x_i.end()), sj(x_j.begin(), x_j.end());
  std::sort(si.begin(), si.end());
  std::sort(sj.begin(), sj.end());
  const double qi = numeric::sorted_quantile(si, u);
  const double qj = numeric::sorted_quantile(sj, u);
  std::size_t exceed = 0, joint = 0;
  for (std::size_t t = 0; t + static_cast<std::size_t>(h) < x_i.size(); ++t) {
    if (x_i[t] > qi) {
      ++exceed;
      if (x_j[t + static_cast<std::size_t>(h)] > qj) ++joint;
    }
  }
  if (exceed < 20)
    throw InsufficientExceedances(
        "empirical_extremal_correlation: fewer than 20 exceedances");
  return static_cast<double>(joint) / static_cast<double>(exceed);
}

}  // namespace potvine

#endif  // POTVINE_DIAGNOSTICS_HPP
