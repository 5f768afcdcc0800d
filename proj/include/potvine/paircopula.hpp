#ifndef POTVINE_PAIRCOPULA_HPP
#define POTVINE_PAIRCOPULA_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "potvine/errors.hpp"
#include "potvine/numeric.hpp"
#include "potvine/rng.hpp"

namespace potvine {

enum class CopulaFamily { Independence, Clayton, Gumbel, Frank, Joe };

inline const char* family_name(CopulaFamily f) {
  switch (f) {
    case CopulaFamily::Independence: return "independence";
    case CopulaFamily::Clayton: return "clayton";
    case CopulaFamily::Gumbel: return "gumbel";
    case CopulaFamily::Frank: return "frank";
    case CopulaFamily::Joe: return "joe";
  }
  return "?";
}

inline CopulaFamily family_from_name(const std::string& s) {
  if (s == "independence") return CopulaFamily::Independence;
  if (s == "clayton") return CopulaFamily::Clayton;
  if (s == "gumbel") return CopulaFamily::Gumbel;
  if (s == "frank") return CopulaFamily::Frank;
  if (s == "joe") return CopulaFamily::Joe;
  throw ConfigError("unknown copula family: " + s);
}

enum class CopulaMargin { First, Second };

// One bivariate building block: family, rotation in {0,90,180,270} degrees
// and the family parameter. Negative dependence is reached through the 90/270
// rotations (Clayton/Gumbel/Joe) or a negative Frank parameter.
struct PairCopula {
  CopulaFamily family = CopulaFamily::Independence;
  int rotation = 0;
  double theta = 0.0;

  bool is_independence() const { return family == CopulaFamily::Independence; }
};

namespace pc {

// Numerical search bounds; beyond these tau > 0.93 and likelihoods are flat.
inline constexpr double kClaytonMin = 1e-4, kClaytonMax = 28.0;
inline constexpr double kGumbelMin = 1.0 + 1e-6, kGumbelMax = 50.0;
inline constexpr double kJoeMin = 1.0 + 1e-6, kJoeMax = 50.0;
inline constexpr double kFrankMax = 35.0;
inline constexpr double kClampEps = 1e-10;
inline constexpr double kFrankZeroTol = 1e-8;

inline double clamp01(double u) { return std::clamp(u, kClampEps, 1.0 - kClampEps); }

inline void validate(const PairCopula& c) {
  switch (c.family) {
    case CopulaFamily::Independence:
      break;
    case CopulaFamily::Clayton:
      if (!(c.theta > 0.0)) throw DomainError("clayton: theta must be positive");
      break;
    case CopulaFamily::Gumbel:
      if (!(c.theta >= 1.0)) throw DomainError("gumbel: theta must be >= 1");
      break;
    case CopulaFamily::Joe:
      if (!(c.theta >= 1.0)) throw DomainError("joe: theta must be >= 1");
      break;
    case CopulaFamily::Frank:
      break;
  }
  if (c.rotation != 0 && c.rotation != 90 && c.rotation != 180 && c.rotation != 270)
    throw DomainError("pair copula rotation must be one of 0/90/180/270");
}

// ---- base (unrotated) forms; all families are exchangeable ----

inline double cdf0(CopulaFamily f, double th, double u, double v) {
  switch (f) {
    case CopulaFamily::Independence:
      return u * v;
    case CopulaFamily::Clayton: {
      const double s = std::pow(u, -th) + std::pow(v, -th) - 1.0;
      return std::pow(s, -1.0 / th);
    }
    case CopulaFamily::Gumbel: {
      const double lx = std::log(-std::log(u)), ly = std::log(-std::log(v));
      const double m = std::max(lx, ly);
      const double ls = th * m + std::log1p(std::exp(th * (std::min(lx, ly) - m)));
      return std::exp(-std::exp(ls / th));
    }
    case CopulaFamily::Frank: {
      if (std::abs(th) < kFrankZeroTol) return u * v;
      const double gu = std::expm1(-th * u), gv = std::expm1(-th * v);
      const double g1 = std::expm1(-th);
      return -std::log1p(gu * gv / g1) / th;
    }
    case CopulaFamily::Joe: {
      const double la = th * std::log1p(-u), lb = th * std::log1p(-v);
      const double a = std::exp(la), b = std::exp(lb);
      const double t = a + b - a * b;
      return 1.0 - std::pow(t, 1.0 / th);
    }
  }
  return u * v;
}

inline double log_pdf0(CopulaFamily f, double th, double u, double v) {
  switch (f) {
    case CopulaFamily::Independence:
      return 0.0;
    case CopulaFamily::Clayton: {
      const double lu = std::log(u), lv = std::log(v);
      const double s = std::pow(u, -th) + std::pow(v, -th) - 1.0;
      return std::log1p(th) - (th + 1.0) * (lu + lv) - (2.0 + 1.0 / th) * std::log(s);
    }
    case CopulaFamily::Gumbel: {
      const double lu = std::log(u), lv = std::log(v);
      const double lx = std::log(-lu), ly = std::log(-lv);
      const double m = std::max(lx, ly);
      const double ls = th * m + std::log1p(std::exp(th * (std::min(lx, ly) - m)));
      const double la = ls / th;  // log S^(1/th)
      // c = C * (xy)^(th-1)/(uv) * S^(2/th - 2) * (1 + (th-1) S^(-1/th))
      return -std::exp(la) + (th - 1.0) * (lx + ly) - lu - lv +
             (2.0 / th - 2.0) * ls + std::log1p((th - 1.0) * std::exp(-la));
    }
    case CopulaFamily::Frank: {
      if (std::abs(th) < kFrankZeroTol) return 0.0;
      const double gu = std::expm1(-th * u), gv = std::expm1(-th * v);
      const double g1 = std::expm1(-th);
      const double denom = g1 + gu * gv;
      // c = th*(-g1)*exp(-th(u+v)) / (g1 + gu gv)^2
      return std::log(std::abs(th)) + std::log(std::abs(g1)) - th * (u + v) -
             2.0 * std::log(std::abs(denom));
    }
    case CopulaFamily::Joe: {
      const double la = th * std::log1p(-u), lb = th * std::log1p(-v);
      const double a = std::exp(la), b = std::exp(lb);
      const double t = a + b - a * b;
      return (1.0 / th - 2.0) * std::log(t) + (th - 1.0) / th * (la + lb) +
             std::log(th - 1.0 + t);
    }
  }
  return 0.0;
}

// h(u | v) = dC/dv: conditional cdf of the first argument given the second.
inline double hfunc0(CopulaFamily f, double th, double u, double v) {
  switch (f) {
    case CopulaFamily::Independence:
      return u;
    case CopulaFamily::Clayton: {
      const double s = std::pow(u, -th) + std::pow(v, -th) - 1.0;
      return std::pow(v, -th - 1.0) * std::pow(s, -1.0 / th - 1.0);
    }
    case CopulaFamily::Gumbel: {
      const double lu = std::log(u), lv = std::log(v);
      const double lx = std::log(-lu), ly = std::log(-lv);
      const double m = std::max(lx, ly);
      const double ls = th * m + std::log1p(std::exp(th * (std::min(lx, ly) - m)));
      const double la = ls / th;
      // h = C * y^(th-1) * S^(1/th - 1) / v
      const double lh = -std::exp(la) + (th - 1.0) * ly + (1.0 / th - 1.0) * ls - lv;
      return std::clamp(std::exp(lh), 0.0, 1.0);
    }
    case CopulaFamily::Frank: {
      if (std::abs(th) < kFrankZeroTol) return u;
      const double gu = std::expm1(-th * u), gv = std::expm1(-th * v);
      const double g1 = std::expm1(-th);
      return std::exp(-th * v) * gu / (g1 + gu * gv);
    }
    case CopulaFamily::Joe: {
      const double la = th * std::log1p(-u), lb = th * std::log1p(-v);
      const double a = std::exp(la), b = std::exp(lb);
      const double t = a + b - a * b;
      const double lh = (1.0 / th - 1.0) * std::log(t) + (th - 1.0) / th * lb +
                        std::log1p(-a);
      return std::clamp(std::exp(lh), 0.0, 1.0);
    }
  }
  return u;
}

// Inverse of hfunc0 in its first argument. Closed forms for Clayton and
// Frank; monotone bisection elsewhere (h is nondecreasing in u).
inline double hinv0(CopulaFamily f, double th, double w, double v) {
  switch (f) {
    case CopulaFamily::Independence:
      return w;
    case CopulaFamily::Clayton: {
      const double a =
          std::pow(w * std::pow(v, th + 1.0), -th / (th + 1.0)) - std::pow(v, -th) + 1.0;
      if (!(a > 0.0)) return 1.0 - kClampEps;
      return clamp01(std::pow(a, -1.0 / th));
    }
    case CopulaFamily::Frank: {
      if (std::abs(th) < kFrankZeroTol) return w;
      const double g1 = std::expm1(-th), gv = std::expm1(-th * v);
      const double ev = std::exp(-th * v);
      const double gu = w * g1 / (ev - w * gv);
      return clamp01(-std::log1p(gu) / th);
    }
    default: {
      double lo = kClampEps, hi = 1.0 - kClampEps;
      if (hfunc0(f, th, lo, v) >= w) return lo;
      if (hfunc0(f, th, hi, v) <= w) return hi;
      for (int i = 0; i < 100 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (hfunc0(f, th, mid, v) < w)
          lo = mid;
        else
          hi = mid;
      }
      return 0.5 * (lo + hi);
    }
  }
}

}  // namespace pc

// Copula cdf with the rotation transform applied.
inline double copula_cdf(double u, double v, const PairCopula& c) {
  if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0))
    throw DomainError("copula_cdf: arguments outside [0,1]");
  if (c.is_independence()) return u * v;
  const double ue = pc::clamp01(u), ve = pc::clamp01(v);
  double val;
  switch (c.rotation) {
    case 0: val = pc::cdf0(c.family, c.theta, ue, ve); break;
    case 90: val = ve - pc::cdf0(c.family, c.theta, 1.0 - ue, ve); break;
    case 180: val = ue + ve - 1.0 + pc::cdf0(c.family, c.theta, 1.0 - ue, 1.0 - ve); break;
    case 270: val = ue - pc::cdf0(c.family, c.theta, ue, 1.0 - ve); break;
    default: throw DomainError("copula_cdf: bad rotation");
  }
  // restore the exact boundary values the clamped evaluation smeared
  if (u == 0.0 || v == 0.0) return 0.0;
  if (u == 1.0) return v;
  if (v == 1.0) return u;
  return std::clamp(val, 0.0, 1.0);
}

inline double log_copula_pdf(double u, double v, const PairCopula& c) {
  const double ue = pc::clamp01(u), ve = pc::clamp01(v);
  switch (c.rotation) {
    case 0: return pc::log_pdf0(c.family, c.theta, ue, ve);
    case 90: return pc::log_pdf0(c.family, c.theta, 1.0 - ue, ve);
    case 180: return pc::log_pdf0(c.family, c.theta, 1.0 - ue, 1.0 - ve);
    case 270: return pc::log_pdf0(c.family, c.theta, ue, 1.0 - ve);
    default: throw DomainError("log_copula_pdf: bad rotation");
  }
}

inline double copula_pdf(double u, double v, const PairCopula& c) {
  return std::exp(log_copula_pdf(u, v, c));
}

// Conditional cdf: margin == Second gives dC/dv (distribution of the first
// argument given the second), margin == First gives dC/du.
inline double hfunc(double u, double v, const PairCopula& c, CopulaMargin margin) {
  const double ue = pc::clamp01(u), ve = pc::clamp01(v);
  const auto f = c.family;
  const double th = c.theta;
  double val;
  if (margin == CopulaMargin::Second) {
    switch (c.rotation) {
      case 0: val = pc::hfunc0(f, th, ue, ve); break;
      case 90: val = 1.0 - pc::hfunc0(f, th, 1.0 - ue, ve); break;
      case 180: val = 1.0 - pc::hfunc0(f, th, 1.0 - ue, 1.0 - ve); break;
      case 270: val = pc::hfunc0(f, th, ue, 1.0 - ve); break;
      default: throw DomainError("hfunc: bad rotation");
    }
  } else {
    // exchangeable base: dC/du at (u,v) equals hfunc0(v | u)
    switch (c.rotation) {
      case 0: val = pc::hfunc0(f, th, ve, ue); break;
      case 90: val = pc::hfunc0(f, th, ve, 1.0 - ue); break;
      case 180: val = 1.0 - pc::hfunc0(f, th, 1.0 - ve, 1.0 - ue); break;
      case 270: val = 1.0 - pc::hfunc0(f, th, 1.0 - ve, ue); break;
      default: throw DomainError("hfunc: bad rotation");
    }
  }
  return std::clamp(val, 0.0, 1.0);
}

// Inverse conditional cdf: returns the free coordinate x such that
// hfunc(x, cond, Second) == w (margin Second), or hfunc(cond, x, First) == w
// (margin First).
inline double hinv(double w, double cond, const PairCopula& c, CopulaMargin margin) {
  const double we = pc::clamp01(w), ce = pc::clamp01(cond);
  const auto f = c.family;
  const double th = c.theta;
  if (c.is_independence()) return we;
  if (margin == CopulaMargin::Second) {
    switch (c.rotation) {
      case 0: return pc::hinv0(f, th, we, ce);
      case 90: return 1.0 - pc::hinv0(f, th, 1.0 - we, ce);
      case 180: return 1.0 - pc::hinv0(f, th, 1.0 - we, 1.0 - ce);
      case 270: return pc::hinv0(f, th, we, 1.0 - ce);
      default: throw DomainError("hinv: bad rotation");
    }
  }
  switch (c.rotation) {
    case 0: return pc::hinv0(f, th, we, ce);
    case 90: return pc::hinv0(f, th, we, 1.0 - ce);
    case 180: return 1.0 - pc::hinv0(f, th, 1.0 - we, 1.0 - ce);
    case 270: return 1.0 - pc::hinv0(f, th, 1.0 - we, ce);
    default: throw DomainError("hinv: bad rotation");
  }
}

// Kendall's tau-b (tie-corrected) in O(n log n) via Knight's algorithm.
inline double kendall_tau_empirical(std::span<const double> x,
                                    std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2)
    throw InsufficientData("kendall_tau_empirical: need two equal-length series, n >= 2");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });

  auto pairs = [](std::size_t t) {
    return static_cast<double>(t) * static_cast<double>(t - 1) / 2.0;
  };
  const double n0 = pairs(n);

  // ties in x, and joint ties, along the sorted order
  double n1 = 0.0, n3 = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && x[idx[j]] == x[idx[i]]) ++j;
    n1 += pairs(j - i);
    for (std::size_t a = i; a < j;) {
      std::size_t b = a;
      while (b < j && y[idx[b]] == y[idx[a]]) ++b;
      n3 += pairs(b - a);
      a = b;
    }
    i = j;
  }
  if (n1 == n0) throw ZeroVariance("kendall_tau_empirical: first series is constant");

  // inversion count of y in x-order (strict), iterative merge sort
  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
  double swaps = 0.0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t a = lo, b = mid, out = lo;
      while (a < mid && b < hi) {
        if (ys[b] < ys[a]) {
          swaps += static_cast<double>(mid - a);
          buf[out++] = ys[b++];
        } else {
          buf[out++] = ys[a++];
        }
      }
      while (a < mid) buf[out++] = ys[a++];
      while (b < hi) buf[out++] = ys[b++];
    }
    std::swap(ys, buf);
  }

  // ties in y overall
  std::sort(buf.begin(), buf.end());
  double n2 = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && buf[j] == buf[i]) ++j;
    n2 += pairs(j - i);
    i = j;
  }
  if (n2 == n0) throw ZeroVariance("kendall_tau_empirical: second series is constant");

  const double num = n0 - n1 - n2 + n3 - 2.0 * swaps;
  return num / std::sqrt((n0 - n1) * (n0 - n2));
}

namespace pc {

// Kendall's tau of an Archimedean family as a function of theta, via the
// generator integral tau = 1 + 4 * int_0^1 phi(t)/phi'(t) dt.
inline double tau_of_theta(CopulaFamily f, double theta) {
  switch (f) {
    case CopulaFamily::Independence:
      return 0.0;
    case CopulaFamily::Clayton:
      return theta / (theta + 2.0);
    case CopulaFamily::Gumbel:
      return 1.0 - 1.0 / theta;
    case CopulaFamily::Frank: {
      if (std::abs(theta) < kFrankZeroTol) return 0.0;
      const double th = std::abs(theta);
      const double debye = numeric::adaptive_simpson(
                               [](double t) {
                                 if (t < 1e-8) return 1.0 - 0.5 * t;
                                 return t / std::expm1(t);
                               },
                               0.0, th, 1e-9) /
                           th;
      const double tau = 1.0 - 4.0 / th * (1.0 - debye);
      return theta > 0.0 ? tau : -tau;
    }
    case CopulaFamily::Joe: {
      const double integral = numeric::adaptive_simpson(
          [theta](double t) {
            if (t >= 1.0) return 0.0;
            const double lg = theta * std::log1p(-t);
            const double g = -std::expm1(lg);  // 1 - (1-t)^theta
            if (g <= 0.0 || g >= 1.0) return 0.0;
            return g * std::log(g) / (theta * std::exp((theta - 1.0) / theta * lg));
          },
          0.0, 1.0, 1e-9);
      return 1.0 + 4.0 * integral;
    }
  }
  return 0.0;
}

}  // namespace pc

// Moment-style initializer: parameter whose model tau matches the empirical
// tau. Frank and Joe invert the integrated tau(theta) map by bisection.
inline double tau_to_parameter(double tau, CopulaFamily family) {
  switch (family) {
    case CopulaFamily::Independence:
      return 0.0;
    case CopulaFamily::Clayton: {
      if (!(tau > 0.0)) throw OutOfRange("tau_to_parameter: clayton needs tau > 0");
      return std::clamp(2.0 * tau / (1.0 - tau), pc::kClaytonMin, pc::kClaytonMax);
    }
    case CopulaFamily::Gumbel: {
      if (!(tau > 0.0)) throw OutOfRange("tau_to_parameter: gumbel needs tau > 0");
      return std::clamp(1.0 / (1.0 - tau), pc::kGumbelMin, pc::kGumbelMax);
    }
    case CopulaFamily::Joe: {
      if (!(tau > 0.0)) throw OutOfRange("tau_to_parameter: joe needs tau > 0");
      double lo = pc::kJoeMin, hi = pc::kJoeMax;
      if (pc::tau_of_theta(family, hi) <= tau) return hi;
      for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (pc::tau_of_theta(family, mid) < tau ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    case CopulaFamily::Frank: {
      if (tau == 0.0) return 0.0;
      const double target = std::abs(tau);
      double lo = 1e-6, hi = pc::kFrankMax;
      if (pc::tau_of_theta(family, hi) <= target) return tau > 0 ? hi : -hi;
      for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (pc::tau_of_theta(family, mid) < target ? lo : hi) = mid;
      }
      const double th = 0.5 * (lo + hi);
      return tau > 0.0 ? th : -th;
    }
  }
  return 0.0;
}

struct PairFit {
  PairCopula copula;
  double loglik = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

namespace pc {

inline double loglik_at(CopulaFamily f, int rot, double th,
                        std::span<const double> u, std::span<const double> v) {
  PairCopula c{f, rot, th};
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += log_copula_pdf(u[i], v[i], c);
  return s;
}

inline std::pair<double, double> theta_bounds(CopulaFamily f) {
  switch (f) {
    case CopulaFamily::Clayton: return {kClaytonMin, kClaytonMax};
    case CopulaFamily::Gumbel: return {kGumbelMin, kGumbelMax};
    case CopulaFamily::Joe: return {kJoeMin, kJoeMax};
    case CopulaFamily::Frank: return {-kFrankMax, kFrankMax};
    default: return {0.0, 0.0};
  }
}

}  // namespace pc

// One-dimensional MLE over the family's theta domain (Brent), initialized at
// the tau inversion; never returns a fit worse than the initializer.
inline PairFit fit_pair_copula(std::span<const double> u, std::span<const double> v,
                               CopulaFamily family, int rotation) {
  PairFit out;
  out.n = u.size();
  if (family == CopulaFamily::Independence) {
    out.copula = PairCopula{CopulaFamily::Independence, 0, 0.0};
    return out;
  }
  if (u.size() != v.size() || u.size() < 10)
    throw InsufficientData("fit_pair_copula: need >= 10 paired pseudo-observations");

  // initializer: empirical tau mapped into the base (unrotated) frame
  const double tau_raw = kendall_tau_empirical(u, v);
  double tau_base = (rotation == 90 || rotation == 270) ? -tau_raw : tau_raw;
  double theta0;
  try {
    theta0 = tau_to_parameter(std::clamp(tau_base, -0.95, 0.95), family);
  } catch (const OutOfRange&) {
    const auto [lo, hi] = pc::theta_bounds(family);
    theta0 = std::clamp(family == CopulaFamily::Frank ? 0.5 : lo * 2.0 + 0.1, lo, hi);
  }

  const auto [lo, hi] = pc::theta_bounds(family);
  auto neg = [&](double th) { return -pc::loglik_at(family, rotation, th, u, v); };
  const auto res = numeric::brent_minimize(neg, lo, hi, 1e-9, 200);
  if (!res.converged)
    throw ConvergenceFailure("fit_pair_copula: Brent bracket exhausted");

  const double f_init = neg(theta0);
  double theta = res.x, fmin = res.fx;
  if (f_init < fmin) {
    theta = theta0;
    fmin = f_init;
  }
  out.copula = PairCopula{family, rotation, theta};
  out.loglik = -fmin;

  const double h = 1e-4 * (1.0 + std::abs(theta));
  if (theta - h > lo && theta + h < hi) {
    const double d2 = (neg(theta + h) - 2.0 * fmin + neg(theta - h)) / (h * h);
    if (d2 > 0.0) out.se = 1.0 / std::sqrt(d2);
  }
  return out;
}

struct IndependenceTest {
  bool dependent = false;
  double statistic = 0.0;
  double tau = 0.0;
};

// Asymptotic Kendall-tau independence test:
// T = |tau| * sqrt(9n(n-1) / (2(2n+5))) against the normal quantile.
inline IndependenceTest independence_test(std::span<const double> u,
                                          std::span<const double> v,
                                          double level = 0.05) {
  if (u.size() != v.size() || u.size() < 10)
    throw InsufficientData("independence_test: need n >= 10");
  const double n = static_cast<double>(u.size());
  IndependenceTest t;
  t.tau = kendall_tau_empirical(u, v);
  t.statistic = std::abs(t.tau) * std::sqrt(9.0 * n * (n - 1.0) / (2.0 * (2.0 * n + 5.0)));
  t.dependent = t.statistic > numeric::normal_quantile(1.0 - level / 2.0);
  return t;
}

struct FamilyCandidate {
  CopulaFamily family;
  int rotation;
};

// Default candidate menu: Frank covers both dependence signs through its
// parameter; the others pair positive rotations {0,180} or negative {90,270}.
inline std::vector<FamilyCandidate> default_candidates(
    std::span<const CopulaFamily> families, double tau) {
  std::vector<FamilyCandidate> out;
  for (CopulaFamily f : families) {
    switch (f) {
      case CopulaFamily::Independence:
        break;
      case CopulaFamily::Frank:
        out.push_back({f, 0});
        break;
      default:
        if (tau >= 0.0) {
          out.push_back({f, 0});
          out.push_back({f, 180});
        } else {
          out.push_back({f, 90});
          out.push_back({f, 270});
        }
    }
  }
  return out;
}

enum class SelectionCriterion { Aic, Bic, Mbicv };

// Family selection: keep Independence unless the independence test rejects;
// otherwise fit every feasible candidate and return the information-criterion
// minimizer.
inline PairFit select_pair_family(std::span<const double> u, std::span<const double> v,
                                  std::span<const FamilyCandidate> candidates,
                                  SelectionCriterion criterion = SelectionCriterion::Aic,
                                  double level = 0.05) {
  PairFit indep;
  indep.copula = PairCopula{CopulaFamily::Independence, 0, 0.0};
  indep.n = u.size();
  const auto test = independence_test(u, v, level);
  if (!test.dependent) return indep;

  const double n = static_cast<double>(u.size());
  auto score = [&](const PairFit& f) {
    const double penalty = (criterion == SelectionCriterion::Aic) ? 2.0 : std::log(n);
    return -2.0 * f.loglik + penalty;
  };

  bool have = false;
  PairFit best;
  double best_score = 0.0;
  for (const auto& cand : candidates) {
    const double tau_base =
        (cand.rotation == 90 || cand.rotation == 270) ? -test.tau : test.tau;
    if (cand.family != CopulaFamily::Frank && tau_base <= 0.0) continue;  // infeasible sign
    try {
      PairFit f = fit_pair_copula(u, v, cand.family, cand.rotation);
      const double sc = score(f);
      if (!have || sc < best_score) {
        have = true;
        best = f;
        best_score = sc;
      }
    } catch (const NumericError&) {
      continue;  // skip candidates that fail to fit
    }
  }
  if (!have) return indep;
  // the fitted family must actually beat independence on the criterion
  if (best_score > 0.0) return indep;
  return best;
}

// Conditional-distribution sampler: u1 uniform, u2 = hinv(w | u1).
inline Matrix sample_pair(std::size_t n, const PairCopula& c, std::uint64_t seed) {
  Matrix out(n, 2);
  rng::Stream stream(seed, "paircopula.sample");
  for (std::size_t i = 0; i < n; ++i) {
    const double w1 = stream.uniform();
    const double w2 = stream.uniform();
    out(i, 0) = w1;
    out(i, 1) = hinv(w2, w1, c, CopulaMargin::First);
  }
  return out;
}

}  // namespace potvine

#endif  // POTVINE_PAIRCOPULA_HPP
