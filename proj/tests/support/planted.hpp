// Shared synthetic-data constructions for optimizer and acceptance tests.
#ifndef POTVINE_TESTS_SUPPORT_PLANTED_HPP
#define POTVINE_TESTS_SUPPORT_PLANTED_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "potvine/margins.hpp"
#include "potvine/numeric.hpp"
#include "potvine/paircopula.hpp"
#include "potvine/rng.hpp"

namespace planted {

// d = 3 series on the exponential data scale. Variable 0 (the cause) follows
// a Clayton Markov chain with lag-1 tau = 0.6, so its own next value is the
// planted strongest link; variable 1 at t+1 is driven by the cause at t with
// tau = 0.35; variable 2 is pure noise.
struct CauseLinkData {
  potvine::Matrix data;                          // n x 3, exponential scale
  std::vector<potvine::MarginalModel> margins;   // fitted at a fixed quantile
  double cause_threshold = 0.0;
};

inline CauseLinkData make_cause_link_series(std::size_t n, std::uint64_t seed,
                                            double tau_main = 0.6,
                                            double tau_secondary = 0.2,
                                            double margin_quantile = 0.9) {
  using namespace potvine;
  const double th_main = 2.0 * tau_main / (1.0 - tau_main);
  const double th_sec = 2.0 * tau_secondary / (1.0 - tau_secondary);
  const PairCopula main_link{CopulaFamily::Clayton, 0, th_main};
  const PairCopula sec_link{CopulaFamily::Clayton, 0, th_sec};

  rng::Stream s(seed, "planted.cause_link");
  Matrix u(n, 3);
  double prev = s.uniform();
  for (std::size_t t = 0; t < n; ++t) {
    const double cause = (t == 0)
                             ? prev
                             : hinv(s.uniform(), prev, main_link, CopulaMargin::Second);
    u(t, 0) = cause;
    // variable 1 at time t responds to the cause one step earlier
    u(t, 1) = (t == 0) ? s.uniform()
                       : hinv(s.uniform(), u(t - 1, 0), sec_link, CopulaMargin::Second);
    u(t, 2) = s.uniform();
    prev = cause;
  }

  CauseLinkData out;
  out.data = Matrix(n, 3);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t c = 0; c < 3; ++c) out.data(t, c) = -std::log1p(-u(t, c));
  for (std::size_t c = 0; c < 3; ++c)
    out.margins.push_back(potvine::fit_marginal_model_at(
        out.data.col(c), margin_quantile, "v" + std::to_string(c)));
  out.cause_threshold = out.margins[0].gpd.threshold;
  return out;
}

}  // namespace planted

#endif  // POTVINE_TESTS_SUPPORT_PLANTED_HPP
