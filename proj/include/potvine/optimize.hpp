#ifndef POTVINE_OPTIMIZE_HPP
#define POTVINE_OPTIMIZE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "potvine/counterfactual.hpp"
#include "potvine/errors.hpp"
#include "potvine/numeric.hpp"
#include "potvine/rng.hpp"

namespace potvine {

enum class PcKind { PN, PS, PNS };

inline const char* pc_kind_name(PcKind k) {
  switch (k) {
    case PcKind::PN: return "pn";
    case PcKind::PS: return "ps";
    case PcKind::PNS: return "pns";
  }
  return "?";
}

// Lasso/Ridge-style penalty on the weights: objective = PC(w) - lambda ||w||_p.
struct RegSpec {
  int norm = 1;  // p in {1,2}
  double lambda = 0.0;

  void validate() const {
    if (norm != 1 && norm != 2) throw ConfigError("RegSpec: norm must be 1 or 2");
    if (!(lambda >= 0.0)) throw ConfigError("RegSpec: lambda must be >= 0");
  }
};

struct OptConfig {
  int population_factor = 10;
  int generations = 300;
  double crossover = 0.9;
  double diff_weight = 0.8;
  int refine_iterations = 200;
  std::uint64_t seed = 0;
};

struct OptResult {
  std::vector<double> weights;  // full k*d vector, masked coordinates exactly 0
  double pc_value = 0.0;        // unpenalized PC at the returned weights
  double objective = 0.0;       // penalized objective at the returned weights
  PcKind pc_kind = PcKind::PNS;
  double entropy = 0.0;
  std::vector<double> trace;  // per-generation best objective, nondecreasing
  double lambda = 0.0;
  int norm = 1;
};

// Euclidean projection onto the probability simplex (sorting algorithm).
inline std::vector<double> project_to_simplex(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumsum = 0.0, lambda = 0.0;
  std::size_t rho = 0;
  double running = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    running += sorted[j];
    const double candidate = (running - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) {
      rho = j + 1;
      cumsum = running;
    }
  }
  lambda = (cumsum - 1.0) / static_cast<double>(rho);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max(0.0, x[i] - lambda);
  return out;
}

// w / max(w); the largest entry becomes exactly 1.
inline std::vector<double> standardize_weights(std::span<const double> w) {
  const double mx = *std::max_element(w.begin(), w.end());
  if (!(mx > 0.0)) throw ZeroVector("standardize_weights: all weights zero");
  std::vector<double> out(w.begin(), w.end());
  for (double& v : out) v /= mx;
  return out;
}

// Shannon entropy normalized by log(dim): 1 for uniform, 0 for one-hot.
inline double relative_entropy(std::span<const double> w) {
  const std::size_t n = w.size();
  if (n < 2) return 0.0;
  double h = 0.0;
  for (double v : w) {
    if (v < 0.0 || v > 1.0 + 1e-12)
      throw DomainError("relative_entropy: weight outside [0,1]");
    if (v > 0.0) h -= v * std::log(v);
  }
  return std::clamp(h / std::log(static_cast<double>(n)), 0.0, 1.0);
}

// Precomputed evaluation context: the transformed future blocks of each world
// (impact values are then plain dot products), the threshold, and optionally
// the tail-approximation pieces.
class PcEvaluationContext {
 public:
  enum class Mode { Direct, TailApprox };

  // rows of yf/ycf are H(F(x)) per coordinate (or raw x in raw mode)
  PcEvaluationContext(Matrix yf, Matrix ycf, double v, std::vector<char> mask)
      : yf_(std::move(yf)), ycf_(std::move(ycf)), v_(v), mask_(std::move(mask)) {}

  static PcEvaluationContext transform_blocks(const Matrix& factual_blocks,
                                              const Matrix& counterfactual_blocks,
                                              std::span<const MarginalModel> marginals,
                                              const ImpactEvent& event, int cause_index) {
    const int d = static_cast<int>(marginals.size());
    auto transform = [&](const Matrix& in) {
      Matrix out(in.rows(), in.cols());
      for (std::size_t r = 0; r < in.rows(); ++r)
        for (std::size_t c = 0; c < in.cols(); ++c) {
          if (event.transform.kind == TransformKind::Raw) {
            out(r, c) = in(r, c);
          } else {
            const double u = pit_forward(
                in(r, c), marginals[static_cast<std::size_t>(static_cast<int>(c) % d)]);
            out(r, c) = transform_margin_H(u, event.transform);
          }
        }
      return out;
    };
    return PcEvaluationContext(transform(factual_blocks), transform(counterfactual_blocks),
                               event.impact_threshold, admissible_mask(event, cause_index, d));
  }

  // From the observed series: future blocks of each world's indices.
  static PcEvaluationContext empirical(const Matrix& data,
                                       std::span<const MarginalModel> marginals,
                                       const CauseEvent& cause, const ImpactEvent& event) {
    const WorldSplit split = split_worlds(data, cause, event.horizon);
    const int d = static_cast<int>(data.cols());
    const int k = event.horizon;
    auto gather = [&](const std::vector<std::size_t>& idx) {
      Matrix out(idx.size(), static_cast<std::size_t>(k) * d);
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (int l = 1; l <= k; ++l)
          for (int j = 0; j < d; ++j)
            out(r, static_cast<std::size_t>(l - 1) * d + j) =
                data(idx[r] + static_cast<std::size_t>(l), static_cast<std::size_t>(j));
      return out;
    };
    return transform_blocks(gather(split.factual), gather(split.counterfactual),
                            marginals, event, cause.variable_index);
  }

  // From generated world samples.
  static PcEvaluationContext synthetic(const WorldSamples& samples,
                                       std::span<const MarginalModel> marginals,
                                       const ImpactEvent& event, int cause_index) {
    return transform_blocks(samples.factual, samples.counterfactual, marginals, event,
                            cause_index);
  }

  // Switch to the smoothed tail-approximation objective: probabilities are
  // estimated at the anchor w^T H(mu0) and continued by the reference GPD
  // survival out to v.
  void enable_tail_approx(std::span<const MarginalModel> marginals,
                          const ImpactEvent& event) {
    if (event.transform.kind != TransformKind::Exponential &&
        event.transform.kind != TransformKind::Gpd)
      throw DomainError("tail approximation requires an exponential or gpd transform");
    mode_ = Mode::TailApprox;
    tail_shape_ = event.transform.kind == TransformKind::Exponential ? 0.0
                                                                     : event.transform.shape;
    tail_scale_ = event.transform.kind == TransformKind::Exponential ? 1.0
                                                                     : event.transform.scale;
    const int d = static_cast<int>(marginals.size());
    anchor_terms_.resize(yf_.cols());
    for (std::size_t c = 0; c < yf_.cols(); ++c)
      anchor_terms_[c] = transform_margin_H(
          marginals[static_cast<std::size_t>(static_cast<int>(c) % d)].gpd.threshold_quantile,
          event.transform);
  }

  const std::vector<char>& mask() const { return mask_; }
  std::size_t dim() const { return yf_.cols(); }
  double threshold() const { return v_; }

  std::pair<double, double> world_probabilities(std::span<const double> w) const {
    if (mode_ == Mode::Direct) return {frac_above(yf_, w, v_), frac_above(ycf_, w, v_)};
    double anchor = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c) anchor += w[c] * anchor_terms_[c];
    GpdParams ref{tail_shape_, tail_scale_, anchor, 0.5};
    if (v_ < anchor) {
      // v inside the body: fall back to the direct estimate
      return {frac_above(yf_, w, v_), frac_above(ycf_, w, v_)};
    }
    return {tail_probability_approx(frac_above(yf_, w, anchor), v_, ref),
            tail_probability_approx(frac_above(ycf_, w, anchor), v_, ref)};
  }

  double pc(std::span<const double> w, PcKind kind) const {
    const auto [pf, pcf] = world_probabilities(w);
    const PcTriple t = probabilities_of_causation(pf, pcf);
    switch (kind) {
      case PcKind::PN: return t.pn;
      case PcKind::PS: return t.ps;
      case PcKind::PNS: return t.pns;
    }
    return 0.0;
  }

 private:
  static double frac_above(const Matrix& y, std::span<const double> w, double v) {
    std::size_t hits = 0;
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const auto row = y.row(r);
      double s = 0.0;
      for (std::size_t c = 0; c < row.size(); ++c) s += w[c] * row[c];
      if (s > v) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(y.rows());
  }

  Matrix yf_, ycf_;
  double v_;
  std::vector<char> mask_;
  Mode mode_ = Mode::Direct;
  double tail_shape_ = 0.0, tail_scale_ = 1.0;
  std::vector<double> anchor_terms_;
};

// PC(v, w; k) - lambda ||w||_p on the full-dimensional weight vector.
inline double regularized_pc_objective(std::span<const double> w, PcKind kind,
                                       const RegSpec& reg,
                                       const PcEvaluationContext& ctx) {
  reg.validate();
  double penalty = 0.0;
  if (reg.lambda > 0.0) {
    if (reg.norm == 1) {
      for (double v : w) penalty += std::abs(v);
    } else {
      double s = 0.0;
      for (double v : w) s += v * v;
      penalty = std::sqrt(s);
    }
  }
  return ctx.pc(w, kind) - reg.lambda * penalty;
}

namespace opt_detail {

// Embed free-coordinate vector into the full dimension (masked entries 0).
struct MaskMap {
  std::vector<std::size_t> free_index;  // free slot -> full coordinate
  std::size_t full_dim = 0;

  explicit MaskMap(const std::vector<char>& mask) : full_dim(mask.size()) {
    for (std::size_t c = 0; c < mask.size(); ++c)
      if (mask[c]) free_index.push_back(c);
    if (free_index.empty()) throw ConfigError("optimizer: every coordinate masked");
  }

  std::vector<double> embed(std::span<const double> free) const {
    std::vector<double> full(full_dim, 0.0);
    for (std::size_t i = 0; i < free_index.size(); ++i) full[free_index[i]] = free[i];
    return full;
  }
};

}  // namespace opt_detail

struct DeResult {
  std::vector<double> best;  // free coordinates, on the simplex
  double objective = 0.0;
  std::vector<double> trace;
};

// DE/rand/1/bin over [0,1]^dim; every candidate is projected to the simplex
// before evaluation. The population is seeded with the uniform vector.
// Deterministic: candidate substreams are derived from (seed, generation,
// index).
inline DeResult differential_evolution_stage(
    const std::function<double(std::span<const double>)>& objective, std::size_t dim,
    const OptConfig& cfg) {
  const std::size_t pop = std::max<std::size_t>(4, cfg.population_factor * dim);
  std::vector<std::vector<double>> raw(pop, std::vector<double>(dim));
  std::vector<std::vector<double>> proj(pop);
  std::vector<double> fitness(pop);

  for (std::size_t i = 0; i < pop; ++i) {
    rng::Stream stream(cfg.seed, "optimize.de.init", i);
    if (i == 0) {
      std::fill(raw[i].begin(), raw[i].end(), 1.0 / static_cast<double>(dim));
    } else {
      for (double& x : raw[i]) x = stream.uniform();
    }
    proj[i] = project_to_simplex(raw[i]);
    fitness[i] = objective(proj[i]);
  }

  DeResult res;
  auto best_of = [&] {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < pop; ++i)
      if (fitness[i] > fitness[arg]) arg = i;
    return arg;
  };
  std::size_t arg = best_of();
  double best_seen = fitness[arg];
  res.best = proj[arg];
  res.objective = best_seen;
  res.trace.push_back(best_seen);

  std::vector<double> trial(dim);
  for (int g = 0; g < cfg.generations; ++g) {
    for (std::size_t i = 0; i < pop; ++i) {
      rng::Stream stream(cfg.seed, "optimize.de.gen",
                         static_cast<std::uint64_t>(g) * pop + i + 1);
      std::size_t r1 = stream.below(pop), r2 = stream.below(pop), r3 = stream.below(pop);
      while (r1 == i) r1 = stream.below(pop);
      while (r2 == i || r2 == r1) r2 = stream.below(pop);
      while (r3 == i || r3 == r1 || r3 == r2) r3 = stream.below(pop);
      const std::size_t jrand = stream.below(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        if (j == jrand || stream.uniform() < cfg.crossover) {
          const double v = raw[r1][j] + cfg.diff_weight * (raw[r2][j] - raw[r3][j]);
          trial[j] = std::clamp(v, 0.0, 1.0);
        } else {
          trial[j] = raw[i][j];
        }
      }
      auto trial_proj = project_to_simplex(trial);
      const double f = objective(trial_proj);
      if (f >= fitness[i]) {
        raw[i] = trial;
        proj[i] = std::move(trial_proj);
        fitness[i] = f;
        if (f > best_seen) {
          best_seen = f;
          res.best = proj[i];
        }
      }
    }
    res.trace.push_back(best_seen);
  }
  res.objective = best_seen;
  return res;
}

// Projected Nelder-Mead polish: every vertex is projected onto the simplex
// before evaluation; the result never degrades the starting objective.
inline std::vector<double> local_refine_stage(
    const std::function<double(std::span<const double>)>& objective,
    std::span<const double> start, int iterations) {
  const double f_start = objective(start);
  auto project = [](std::vector<double>& x) { x = project_to_simplex(x); };
  auto neg = [&](std::span<const double> x) { return -objective(x); };
  const auto res = numeric::nelder_mead(neg, {start.begin(), start.end()},
                                        0.5 / static_cast<double>(start.size() + 1),
                                        1e-12, iterations, project);
  if (-res.fx >= f_start) return res.x;
  return {start.begin(), start.end()};
}

// Two-stage maximization of a probability of causation over the simplex.
inline OptResult maximize_pc(PcKind kind, const RegSpec& reg,
                             const PcEvaluationContext& ctx, const OptConfig& cfg) {
  reg.validate();
  opt_detail::MaskMap map(ctx.mask());
  auto objective = [&](std::span<const double> free) {
    return regularized_pc_objective(map.embed(free), kind, reg, ctx);
  };

  const DeResult de = differential_evolution_stage(objective, map.free_index.size(), cfg);
  const auto refined = local_refine_stage(objective, de.best, cfg.refine_iterations);

  OptResult out;
  out.weights = map.embed(refined);
  out.objective = objective(refined);
  out.pc_value = ctx.pc(out.weights, kind);
  out.pc_kind = kind;
  out.entropy = relative_entropy(out.weights);
  out.trace = de.trace;
  if (out.objective > out.trace.back()) out.trace.push_back(out.objective);
  out.lambda = reg.lambda;
  out.norm = reg.norm;
  return out;
}

}  // namespace potvine

#endif  // POTVINE_OPTIMIZE_HPP
