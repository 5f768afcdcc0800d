#ifndef POTVINE_VINE_HPP
#define POTVINE_VINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "potvine/errors.hpp"
#include "potvine/numeric.hpp"
#include "potvine/paircopula.hpp"
#include "potvine/rng.hpp"

namespace potvine {

// Sliding windows of PIT data, time-major: row t is (U_t, ..., U_{t+p})
// flattened, slice s occupying columns s*d .. s*d+d-1.
struct BlockMatrix {
  Matrix rows;  // (n - p) x ((p+1) d)
  int d = 0;
  int p = 0;

  std::size_t n_blocks() const { return rows.rows(); }
  int width() const { return (p + 1) * d; }
};

inline BlockMatrix build_blocks(const Matrix& pit_data, int p) {
  const auto n = pit_data.rows();
  const auto d = pit_data.cols();
  if (p < 0) throw ConfigError("build_blocks: negative Markov order");
  if (n <= static_cast<std::size_t>(p + 1))
    throw InsufficientData("build_blocks: series shorter than p+1");
  BlockMatrix bm;
  bm.d = static_cast<int>(d);
  bm.p = p;
  bm.rows = Matrix(n - static_cast<std::size_t>(p), (p + 1) * d);
  for (std::size_t t = 0; t + static_cast<std::size_t>(p) < n; ++t)
    for (int s = 0; s <= p; ++s)
      for (std::size_t j = 0; j < d; ++j) {
        const double u = pit_data(t + static_cast<std::size_t>(s), j);
        if (!(u > 0.0 && u < 1.0))
          throw DataError("build_blocks: PIT entry outside (0,1)");
        bm.rows(t, static_cast<std::size_t>(s) * d + j) = u;
      }
  return bm;
}

// Greedy Hamiltonian-path heuristic maximizing the sum of |Kendall tau| over
// adjacent pairs: seed with the heaviest edge, extend at either end by the
// heaviest feasible edge. Ties break toward the lowest variable index.
inline std::vector<int> select_cross_section_order(const Matrix& pit_data) {
  const int d = static_cast<int>(pit_data.cols());
  if (d == 1) return {0};
  Matrix w(d, d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const double tau =
          std::abs(kendall_tau_empirical(pit_data.col(i), pit_data.col(j)));
      w(i, j) = tau;
      w(j, i) = tau;
    }
  int best_i = 0, best_j = 1;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (w(i, j) > w(best_i, best_j)) {
        best_i = i;
        best_j = j;
      }
  std::vector<int> path{best_i, best_j};
  std::vector<bool> used(d, false);
  used[best_i] = used[best_j] = true;
  while (static_cast<int>(path.size()) < d) {
    int arg = -1, at_front = 0;
    double best = -1.0;
    for (int cand = 0; cand < d; ++cand) {
      if (used[cand]) continue;
      if (w(path.front(), cand) > best) {
        best = w(path.front(), cand);
        arg = cand;
        at_front = 1;
      }
      if (w(path.back(), cand) > best) {
        best = w(path.back(), cand);
        arg = cand;
        at_front = 0;
      }
    }
    used[arg] = true;
    if (at_front)
      path.insert(path.begin(), arg);
    else
      path.push_back(arg);
  }
  return path;
}

// One translation class of the stationary D-vine.
struct LagClass {
  PairCopula copula;
  double loglik = 0.0;
  double se = 0.0;
  std::size_t n_obs = 0;
  std::string warning;  // set when a class fit failed and fell back
};

// Translation-invariant D-vine over the time-major variable order: slice 0
// in cross_order, slice 1 in cross_order, ... Edges whose conditioned pair and
// conditioning set coincide up to a whole-slice time shift share one copula;
// for this structure the class of the edge starting at path position i in
// tree t is (t, i mod d).
struct StationaryVine {
  int d = 0;
  int p = 0;
  std::vector<int> cross_order;                // permutation of 0..d-1
  std::vector<std::vector<LagClass>> classes;  // [t-1][i mod d]

  int width() const { return (p + 1) * d; }

  int classes_in_tree(int t) const { return std::min(d, width() - t); }

  const PairCopula& edge_copula(int tree, int start_pos) const {
    return classes[tree - 1][start_pos % d].copula;
  }

  // data column backing path position j
  int column_of_position(int j) const { return (j / d) * d + cross_order[j % d]; }

  int parameter_count() const {
    int nu = 0;
    for (const auto& tr : classes)
      for (const auto& cl : tr)
        if (!cl.copula.is_independence()) ++nu;
    return nu;
  }
};

namespace vine_detail {

// Shared D-vine recursion state for one block row, in path order.
// L[t][i] = F(x_i | x_{i+1..i+t-1}), R[t][j] = F(x_j | x_{j-t+1..j-1}).
struct Recursion {
  const StationaryVine& vine;
  int m;
  std::vector<std::vector<double>> L, R;

  explicit Recursion(const StationaryVine& v)
      : vine(v), m(v.width()), L(static_cast<std::size_t>(m) + 2),
        R(static_cast<std::size_t>(m) + 2) {
    for (auto& row : L) row.assign(static_cast<std::size_t>(m), 0.0);
    for (auto& row : R) row.assign(static_cast<std::size_t>(m), 0.0);
  }

  void reset() {
    for (auto& row : L) std::fill(row.begin(), row.end(), 0.0);
    for (auto& row : R) std::fill(row.begin(), row.end(), 0.0);
  }

  // Insert the value at path position j and propagate the conditionals that
  // depend on it. Returns F(x_j | x_0..j-1).
  double push(int j, double value) {
    L[1][j] = value;
    R[1][j] = value;
    double w = value;
    for (int t = 1; t <= j; ++t) {
      const int i = j - t;
      const auto& c = vine.edge_copula(t, i);
      const double a = L[t][i];
      const double b = R[t][j];
      L[t + 1][i] = hfunc(a, b, c, CopulaMargin::Second);
      R[t + 1][j] = hfunc(a, b, c, CopulaMargin::First);
      w = R[t + 1][j];
    }
    return w;
  }

  // Inverse step: given w = F(x_j | x_0..j-1), recover x_j. Valid once
  // positions 0..j-1 have been pushed.
  double invert(int j, double w) const {
    double val = w;
    for (int i = 0; i < j; ++i) {
      const int t = j - i;
      val = hinv(val, L[t][i], vine.edge_copula(t, i), CopulaMargin::First);
    }
    return val;
  }
};

}  // namespace vine_detail

// Forward Rosenblatt transform of one block row (data column order in, one
// uniform per path position out).
inline std::vector<double> rosenblatt(std::span<const double> row,
                                      const StationaryVine& vine) {
  const int m = vine.width();
  if (static_cast<int>(row.size()) != m)
    throw DomainError("rosenblatt: row width mismatch");
  vine_detail::Recursion rec(vine);
  std::vector<double> w(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j)
    w[static_cast<std::size_t>(j)] =
        rec.push(j, pc::clamp01(row[static_cast<std::size_t>(vine.column_of_position(j))]));
  return w;
}

// Inverse Rosenblatt: uniforms in path order to a block row in data column
// order. Exact inverse of `rosenblatt`.
inline std::vector<double> inverse_rosenblatt(std::span<const double> w,
                                              const StationaryVine& vine) {
  const int m = vine.width();
  if (static_cast<int>(w.size()) != m)
    throw DomainError("inverse_rosenblatt: width mismatch");
  vine_detail::Recursion rec(vine);
  std::vector<double> row(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const double x = rec.invert(j, pc::clamp01(w[static_cast<std::size_t>(j)]));
    row[static_cast<std::size_t>(vine.column_of_position(j))] = x;
    rec.push(j, x);
  }
  return row;
}

struct VineFitOptions {
  std::vector<CopulaFamily> families{CopulaFamily::Clayton, CopulaFamily::Gumbel,
                                     CopulaFamily::Frank, CopulaFamily::Joe};
  SelectionCriterion criterion = SelectionCriterion::Aic;
  double independence_level = 0.05;
};

// Sequential tree-by-tree fit with h-function propagation. Per translation
// class, pseudo-observations from all member edges are pooled and one pair
// copula is selected and fitted; a class whose fit fails falls back to
// Independence with a warning recorded on the class.
inline StationaryVine fit_stationary_vine(const BlockMatrix& blocks,
                                          std::vector<int> cross_order,
                                          const VineFitOptions& opt = {}) {
  const int d = blocks.d;
  const int m = blocks.width();
  const auto n = blocks.n_blocks();
  if (static_cast<int>(cross_order.size()) != d)
    throw ConfigError("fit_stationary_vine: cross_order size mismatch");

  StationaryVine vine;
  vine.d = d;
  vine.p = blocks.p;
  vine.cross_order = std::move(cross_order);
  vine.classes.resize(static_cast<std::size_t>(m) - 1);

  // path-ordered copy of the data
  Matrix path(n, static_cast<std::size_t>(m));
  for (std::size_t r = 0; r < n; ++r)
    for (int j = 0; j < m; ++j)
      path(r, static_cast<std::size_t>(j)) =
          blocks.rows(r, static_cast<std::size_t>(vine.column_of_position(j)));

  Matrix L = path, R = path;
  for (int t = 1; t < m; ++t) {
    const int n_classes = vine.classes_in_tree(t);
    auto& tier = vine.classes[static_cast<std::size_t>(t) - 1];
    tier.resize(static_cast<std::size_t>(n_classes));
    for (int c = 0; c < n_classes; ++c) {
      std::vector<double> a, b;
      for (int i = c; i <= m - 1 - t; i += d) {
        for (std::size_t r = 0; r < n; ++r) {
          a.push_back(L(r, static_cast<std::size_t>(i)));
          b.push_back(R(r, static_cast<std::size_t>(i + t)));
        }
      }
      auto& cls = tier[static_cast<std::size_t>(c)];
      try {
        const double tau = kendall_tau_empirical(a, b);
        const auto cands = default_candidates(opt.families, tau);
        const PairFit fit =
            select_pair_family(a, b, cands, opt.criterion, opt.independence_level);
        cls.copula = fit.copula;
        cls.loglik = fit.loglik;
        cls.se = fit.se;
        cls.n_obs = a.size();
      } catch (const Error& e) {
        cls.copula = PairCopula{CopulaFamily::Independence, 0, 0.0};
        cls.n_obs = a.size();
        cls.warning = e.what();
      }
    }
    // propagate pseudo-observations for the next tree
    Matrix newL = L, newR = R;
    for (int i = 0; i <= m - 1 - t; ++i) {
      const auto& c = vine.edge_copula(t, i);
      for (std::size_t r = 0; r < n; ++r) {
        const double av = L(r, static_cast<std::size_t>(i));
        const double bv = R(r, static_cast<std::size_t>(i + t));
        newL(r, static_cast<std::size_t>(i)) = hfunc(av, bv, c, CopulaMargin::Second);
        newR(r, static_cast<std::size_t>(i + t)) = hfunc(av, bv, c, CopulaMargin::First);
      }
    }
    L = std::move(newL);
    R = std::move(newR);
  }
  return vine;
}

// Log-likelihood of the blocks under the fitted vine (sum over rows of the
// log vine density).
inline double vine_loglik(const StationaryVine& vine, const BlockMatrix& blocks) {
  const int m = vine.width();
  if (blocks.width() != m) throw DomainError("vine_loglik: width mismatch");
  const auto n = blocks.n_blocks();
  double total = 0.0;
  vine_detail::Recursion rec(vine);
  for (std::size_t r = 0; r < n; ++r) {
    rec.reset();
    for (int j = 0; j < m; ++j) {
      const double x =
          pc::clamp01(blocks.rows(r, static_cast<std::size_t>(vine.column_of_position(j))));
      // accumulate the edge densities ending at position j
      rec.L[1][j] = x;
      rec.R[1][j] = x;
      for (int t = 1; t <= j; ++t) {
        const int i = j - t;
        const auto& c = vine.edge_copula(t, i);
        const double a = rec.L[t][i];
        const double b = rec.R[t][j];
        const double lp = log_copula_pdf(a, b, c);
        if (!std::isfinite(lp))
          throw NonFiniteDensity("vine_loglik: non-finite pair density");
        total += lp;
        rec.L[t + 1][i] = hfunc(a, b, c, CopulaMargin::Second);
        rec.R[t + 1][j] = hfunc(a, b, c, CopulaMargin::First);
      }
    }
  }
  return total;
}

struct InformationCriteria {
  double aic = 0.0;
  double bic = 0.0;
  double mbicv = 0.0;
  double loglik = 0.0;
  int nu = 0;
};

// Criteria from summary quantities. tree_counts holds (q_t, m_t) per tree:
// non-Independence classes and total classes, the translation-shared units.
inline InformationCriteria criteria_from_loglik(
    double loglik, int nu, std::size_t n_blocks,
    std::span<const std::pair<int, int>> tree_counts, double psi0) {
  if (!(psi0 > 0.0 && psi0 < 1.0)) throw ConfigError("criteria: psi0 outside (0,1)");
  InformationCriteria ic;
  ic.loglik = loglik;
  ic.nu = nu;
  const double n = static_cast<double>(n_blocks);
  ic.aic = -2.0 * loglik + 2.0 * nu;
  ic.bic = -2.0 * loglik + nu * std::log(n);
  double prior = 0.0;
  double psi_t = 1.0;
  for (std::size_t t = 0; t < tree_counts.size(); ++t) {
    psi_t *= psi0;  // psi0^(t+1)
    const auto [q_t, m_t] = tree_counts[t];
    prior += q_t * std::log(psi_t) + (m_t - q_t) * std::log1p(-psi_t);
  }
  ic.mbicv = -2.0 * loglik + nu * std::log(n) - 2.0 * prior;
  return ic;
}

inline InformationCriteria information_criteria(const StationaryVine& vine,
                                                const BlockMatrix& blocks,
                                                double psi0 = 0.9) {
  std::vector<std::pair<int, int>> counts;
  for (const auto& tier : vine.classes) {
    int q = 0;
    for (const auto& cls : tier)
      if (!cls.copula.is_independence()) ++q;
    counts.emplace_back(q, static_cast<int>(tier.size()));
  }
  return criteria_from_loglik(vine_loglik(vine, blocks), vine.parameter_count(),
                              blocks.n_blocks(), counts, psi0);
}

namespace vine_detail {

// Draw the positions >= first_free of one block, the prefix having been
// pushed already. Uniforms come from `stream`.
inline void sample_suffix(Recursion& rec, int first_free, rng::Stream& stream,
                          std::vector<double>& path_values) {
  const int m = rec.m;
  for (int j = first_free; j < m; ++j) {
    const double x = rec.invert(j, stream.uniform());
    path_values[static_cast<std::size_t>(j)] = x;
    rec.push(j, x);
  }
}

}  // namespace vine_detail

// n independent block draws (inverse Rosenblatt of iid uniforms), rows in
// data column order. Row substreams are independent.
inline Matrix simulate_unconditional(const StationaryVine& vine, std::size_t n,
                                     std::uint64_t seed) {
  const int m = vine.width();
  Matrix out(n, static_cast<std::size_t>(m));
  vine_detail::Recursion rec(vine);
  std::vector<double> path_values(static_cast<std::size_t>(m));
  for (std::size_t r = 0; r < n; ++r) {
    rng::Stream stream(seed, "vine.simulate", r);
    rec.reset();
    vine_detail::sample_suffix(rec, 0, stream, path_values);
    for (int j = 0; j < m; ++j)
      out(r, static_cast<std::size_t>(vine.column_of_position(j))) =
          path_values[static_cast<std::size_t>(j)];
  }
  return out;
}

// Conditional simulation: fix slice 0 of the block at `conditioning_slice`
// (one value per variable, variable order, u scale) and draw slices 1..k from
// the vine's conditional law. Returns n rows of width k*d.
inline Matrix simulate_conditional(const StationaryVine& vine,
                                   std::span<const double> conditioning_slice, int k,
                                   std::size_t n, std::uint64_t seed) {
  if (k < 1) throw ConfigError("simulate_conditional: k must be >= 1");
  if (k > vine.p)
    throw HorizonExceedsOrder("simulate_conditional: horizon k exceeds Markov order p");
  if (static_cast<int>(conditioning_slice.size()) != vine.d)
    throw DomainError("simulate_conditional: conditioning slice size mismatch");
  const int m = vine.width();
  const int d = vine.d;

  // prefix state is shared by every draw
  vine_detail::Recursion prefix(vine);
  for (int j = 0; j < d; ++j)
    prefix.push(j, pc::clamp01(conditioning_slice[static_cast<std::size_t>(
                       vine.cross_order[static_cast<std::size_t>(j)])]));

  Matrix out(n, static_cast<std::size_t>(k) * d);
  vine_detail::Recursion rec(vine);
  std::vector<double> path_values(static_cast<std::size_t>(m));
  for (std::size_t r = 0; r < n; ++r) {
    rng::Stream stream(seed, "vine.simulate_conditional", r);
    rec.L = prefix.L;
    rec.R = prefix.R;
    vine_detail::sample_suffix(rec, d, stream, path_values);
    for (int j = d; j < (k + 1) * d; ++j)
      out(r, static_cast<std::size_t>(vine.column_of_position(j)) - d) =
          path_values[static_cast<std::size_t>(j)];
  }
  return out;
}

// Exact stationary path draw: an unconditional first block, then repeated
// one-slice extensions conditioning on the last p slices. Returns n_steps
// rows of width d (u scale).
inline Matrix simulate_path(const StationaryVine& vine, std::size_t n_steps,
                            std::uint64_t seed) {
  const int m = vine.width();
  const int d = vine.d;
  const int p = vine.p;
  Matrix out(n_steps, static_cast<std::size_t>(d));
  vine_detail::Recursion rec(vine);
  std::vector<double> path_values(static_cast<std::size_t>(m));
  std::vector<double> window(static_cast<std::size_t>(p) * d);  // last p slices

  rng::Stream stream0(seed, "vine.path", 0);
  vine_detail::sample_suffix(rec, 0, stream0, path_values);
  const std::size_t head = std::min<std::size_t>(n_steps, static_cast<std::size_t>(p) + 1);
  for (int pos = 0; pos < m; ++pos) {
    const int col = vine.column_of_position(pos);
    const auto slice = static_cast<std::size_t>(col / d);
    if (slice < head)
      out(slice, static_cast<std::size_t>(col % d)) =
          path_values[static_cast<std::size_t>(pos)];
  }

  for (std::size_t step = head; step < n_steps; ++step) {
    // conditioning window: slices step-p .. step-1, in data order
    for (int s = 0; s < p; ++s)
      for (int j = 0; j < d; ++j)
        window[static_cast<std::size_t>(s) * d + j] =
            out(step - static_cast<std::size_t>(p - s), static_cast<std::size_t>(j));
    rec.reset();
    for (int j = 0; j < p * d; ++j)
      rec.push(j, pc::clamp01(window[static_cast<std::size_t>(
                      (j / d) * d + vine.cross_order[static_cast<std::size_t>(j % d)])]));
    rng::Stream stream(seed, "vine.path", step);
    vine_detail::sample_suffix(rec, p * d, stream, path_values);
    for (int pos = p * d; pos < m; ++pos) {
      const int col = vine.column_of_position(pos);
      out(step, static_cast<std::size_t>(col - p * d)) =
          path_values[static_cast<std::size_t>(pos)];
    }
  }
  return out;
}

}  // namespace potvine

#endif  // POTVINE_VINE_HPP
