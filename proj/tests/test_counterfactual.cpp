#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "potvine/counterfactual.hpp"
#include "support/oracles.hpp"

using namespace potvine;

namespace {

// marginal with sample 1..9 and a formal tail above the 0.9 quantile
MarginalModel toy_margin() {
  MarginalModel m;
  m.sorted_sample = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  m.gpd = GpdParams{0.1, 1.0, 9.0, 0.9};
  return m;
}

Matrix exp_scale(const Matrix& u) {
  Matrix out(u.rows(), u.cols());
  for (std::size_t r = 0; r < u.rows(); ++r)
    for (std::size_t c = 0; c < u.cols(); ++c) out(r, c) = -std::log1p(-u(r, c));
  return out;
}

std::vector<MarginalModel> fit_margins(const Matrix& data, double q) {
  std::vector<MarginalModel> out;
  for (std::size_t c = 0; c < data.cols(); ++c)
    out.push_back(fit_marginal_model_at(data.col(c), q, "var" + std::to_string(c)));
  return out;
}

StationaryVine dependent_vine_2x1(double theta) {
  StationaryVine v;
  v.d = 2;
  v.p = 1;
  v.cross_order = {0, 1};
  v.classes.resize(3);
  v.classes[0].resize(2);
  v.classes[1].resize(2);
  v.classes[2].resize(1);
  v.classes[0][0].copula = PairCopula{CopulaFamily::Gumbel, 0, theta};
  v.classes[0][1].copula = PairCopula{CopulaFamily::Gumbel, 0, theta};
  return v;
}

}  // namespace

TEST_CASE("world splitting enumerations and errors", "[counterfactual]") {
  Matrix data(10, 2);
  for (std::size_t t = 0; t < 10; ++t) {
    data(t, 0) = (t % 2 == 0) ? 2.0 : 0.5;  // alternating exceed / not
    data(t, 1) = 1.0;
  }
  const auto split = split_worlds(data, CauseEvent{0, 1.0}, 2);
  CHECK(split.n_f() == 4);
  CHECK(split.n_cf() == 4);

  CHECK_THROWS_AS(split_worlds(data, CauseEvent{0, 100.0}, 2), EmptyWorld);
  CHECK_THROWS_AS(split_worlds(data, CauseEvent{0, -100.0}, 2), EmptyWorld);
}

TEST_CASE("impact value anchors", "[counterfactual]") {
  const std::vector<MarginalModel> margins{toy_margin(), toy_margin()};

  // one-hot weight with identity transform returns F(x_j)
  ImpactEvent ev;
  ev.horizon = 1;
  ev.weights = {0.0, 1.0};
  ev.transform = TransformSpec{TransformKind::Identity, 0.0, 1.0};
  const std::vector<double> block{3.0, 8.0};
  CHECK_THAT(impact_value(block, ev, margins),
             Catch::Matchers::WithinAbs(8.0 / 10.0, 1e-14));

  // uniform weights, exponential transform, coordinates at the 80% ecdf value
  ImpactEvent unif;
  unif.horizon = 1;
  unif.weights = {0.5, 0.5};
  unif.transform = TransformSpec{TransformKind::Exponential, 0.0, 1.0};
  const std::vector<double> at80{8.0, 8.0};  // ecdf rank 8/10
  CHECK_THAT(impact_value(at80, unif, margins),
             Catch::Matchers::WithinAbs(-std::log(0.2), 1e-12));

  // two equal weights average the two transformed values
  ImpactEvent two;
  two.horizon = 1;
  two.weights = {0.5, 0.5};
  two.transform = TransformSpec{TransformKind::Identity, 0.0, 1.0};
  const std::vector<double> mixed{3.0, 8.0};
  CHECK_THAT(impact_value(mixed, two, margins),
             Catch::Matchers::WithinAbs(0.5 * (0.3 + 0.8), 1e-14));

  // raw mode is the plain weighted sum
  ImpactEvent raw;
  raw.horizon = 1;
  raw.weights = {0.25, 0.75};
  raw.transform = TransformSpec{TransformKind::Raw, 0.0, 1.0};
  CHECK_THAT(impact_value(mixed, raw, margins),
             Catch::Matchers::WithinAbs(0.25 * 3.0 + 0.75 * 8.0, 1e-14));
}

TEST_CASE("empirical world probability by hand enumeration", "[counterfactual]") {
  // 6 rows, d = 1, k = 1, cause on the only variable
  Matrix data(6, 1);
  const double vals[6] = {2.0, 1.0, 3.0, 9.0, 2.5, 0.5};
  for (std::size_t t = 0; t < 6; ++t) data(t, 0) = vals[t];
  const std::vector<MarginalModel> margins{toy_margin()};
  const auto split = split_worlds(data, CauseEvent{0, 1.5}, 1);
  // factual rows: t in {0, 2, 3, 4}, limited to t <= 4 -> {0, 2, 3, 4}
  CHECK(split.n_f() == 4);
  CHECK(split.n_cf() == 1);  // t = 1

  ImpactEvent ev;
  ev.horizon = 1;
  ev.weights = {1.0};
  ev.transform = TransformSpec{TransformKind::Raw, 0.0, 1.0};
  ev.impact_threshold = 2.2;
  // futures of factual rows: x_1=1.0, x_3=9.0, x_4=2.5, x_5=0.5 -> 2 above 2.2
  CHECK_THAT(empirical_world_probability(data, split, ev, WorldSide::Factual, margins),
             Catch::Matchers::WithinAbs(0.5, 1e-14));
  // future of the single counterfactual row: x_2=3.0 -> above
  CHECK_THAT(
      empirical_world_probability(data, split, ev, WorldSide::Counterfactual, margins),
      Catch::Matchers::WithinAbs(1.0, 1e-14));

  ev.impact_threshold = -1.0;
  CHECK(empirical_world_probability(data, split, ev, WorldSide::Factual, margins) == 1.0);
  ev.impact_threshold = 100.0;
  CHECK(empirical_world_probability(data, split, ev, WorldSide::Factual, margins) == 0.0);
}

TEST_CASE("probabilities of causation formulas", "[counterfactual]") {
  const auto equal = probabilities_of_causation(0.4, 0.4);
  CHECK(equal.pn == 0.0);
  CHECK(equal.ps == 0.0);
  CHECK(equal.pns == 0.0);

  const auto mid = probabilities_of_causation(0.5, 0.25);
  CHECK_THAT(mid.pn, Catch::Matchers::WithinAbs(0.5, 1e-15));
  CHECK_THAT(mid.ps, Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));
  CHECK_THAT(mid.pns, Catch::Matchers::WithinAbs(0.25, 1e-15));

  const auto perfect = probabilities_of_causation(1.0, 0.0);
  CHECK(perfect.pn == 1.0);
  CHECK(perfect.ps == 1.0);
  CHECK(perfect.pns == 1.0);

  // degenerate denominators map to zero with the flag set
  CHECK(probabilities_of_causation(0.0, 0.0).degenerate);
  CHECK(probabilities_of_causation(0.5, 1.0).degenerate);
  CHECK(probabilities_of_causation(0.5, 1.0).ps == 0.0);
}

TEST_CASE("lemma-1 identity holds exactly without clipping", "[counterfactual]") {
  rng::Stream s(41, "test.lemma1");
  for (int rep = 0; rep < 1000; ++rep) {
    const double p_cf = s.uniform() * 0.98;
    const double p_f = p_cf + (1.0 - p_cf - 1e-6) * s.uniform() + 1e-9;  // p_f >= p_cf
    const double prior_c = s.uniform();
    const auto pc = probabilities_of_causation(p_f, p_cf);
    const double lhs =
        pc.pn * prior_c * p_f + pc.ps * (1.0 - prior_c) * (1.0 - p_cf);
    CHECK_THAT(lhs, Catch::Matchers::WithinAbs(pc.pns, 1e-12));
  }
}

TEST_CASE("counterfactual samples from an independence vine are world-blind",
          "[counterfactual]") {
  StationaryVine vine;
  vine.d = 2;
  vine.p = 1;
  vine.cross_order = {0, 1};
  vine.classes.resize(3);
  vine.classes[0].resize(2);
  vine.classes[1].resize(2);
  vine.classes[2].resize(1);

  const auto u = simulate_unconditional(vine, 1200, 2);  // iid uniforms
  Matrix data(1200, 2);
  for (std::size_t r = 0; r < 1200; ++r)
    for (std::size_t c = 0; c < 2; ++c) data(r, c) = -std::log1p(-u(r, c));
  const auto margins = fit_margins(data, 0.9);
  const CauseEvent cause = cause_from_marginal(0, margins[0]);

  const auto samples = generate_counterfactual_samples(vine, data, margins, cause, 1, 900, 7);
  for (std::size_t c = 0; c < 2; ++c) {
    const double ks = oracles::ks_two_sample(samples.factual.col(c),
                                             samples.counterfactual.col(c));
    CHECK(ks < 1.36 * std::sqrt(2.0 / 900.0));
  }

  // reproducibility and support bounds
  const auto again = generate_counterfactual_samples(vine, data, margins, cause, 1, 900, 7);
  CHECK(samples.factual.data() == again.factual.data());
  for (double v : samples.factual.data()) {
    CHECK(std::isfinite(v));
    CHECK(v >= data.col(0)[0] - 10.0);
  }
  CHECK_THROWS_AS(generate_counterfactual_samples(vine, data, margins, cause, 5, 10, 7),
                  HorizonExceedsOrder);
}

TEST_CASE("planted positive dependence orders synthetic world probabilities",
          "[counterfactual]") {
  const auto vine = dependent_vine_2x1(2.5);
  const auto upath = simulate_path(vine, 3000, 19);
  const auto data = exp_scale(upath);
  const auto margins = fit_margins(data, 0.9);
  const CauseEvent cause = cause_from_marginal(0, margins[0]);

  const auto samples =
      generate_counterfactual_samples(vine, data, margins, cause, 1, 1200, 23);
  ImpactEvent ev;
  ev.horizon = 1;
  ev.weights = uniform_weights(1, 2);
  ev.transform = TransformSpec{TransformKind::Exponential, 0.0, 1.0};
  std::vector<double> grid;
  for (double v = 0.3; v <= 3.0; v += 0.3) grid.push_back(v);

  const auto synth = pc_curve_from_samples(samples, margins, ev, grid, 23);
  const auto emp = pc_curve_empirical(data, margins, cause, ev, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(synth[i].p_f >= synth[i].p_cf);
    CHECK(emp[i].p_f >= emp[i].p_cf);
  }
  // nonincreasing step curves in v
  for (std::size_t i = 1; i < grid.size(); ++i) {
    CHECK(emp[i].p_f <= emp[i - 1].p_f + 1e-14);
    CHECK(emp[i].p_cf <= emp[i - 1].p_cf + 1e-14);
  }
}

TEST_CASE("one-hot identity impact equals the marginal exceedance frequency",
          "[counterfactual]") {
  const auto vine = dependent_vine_2x1(2.0);
  const auto data = exp_scale(simulate_path(vine, 1500, 3));
  const auto margins = fit_margins(data, 0.9);
  const CauseEvent cause = cause_from_marginal(0, margins[0]);
  const auto split = split_worlds(data, cause, 1);

  ImpactEvent ev;
  ev.horizon = 1;
  ev.weights = {0.0, 1.0};
  ev.transform = TransformSpec{TransformKind::Identity, 0.0, 1.0};
  ev.impact_threshold = 0.8;
  const double got =
      empirical_world_probability(data, split, ev, WorldSide::Factual, margins);
  std::size_t hits = 0;
  for (std::size_t t : split.factual)
    if (pit_forward(data(t + 1, 1), margins[1]) > 0.8) ++hits;
  CHECK_THAT(got, Catch::Matchers::WithinAbs(
                      static_cast<double>(hits) / static_cast<double>(split.n_f()), 1e-14));
}

TEST_CASE("tail approximation boundary and halving", "[counterfactual]") {
  GpdParams ref{0.0, 1.0, 2.0, 0.5};  // exponential reference anchored at 2
  CHECK(tail_probability_approx(0.3, 2.0, ref) == 0.3);
  CHECK_THAT(tail_probability_approx(0.3, 2.0 + std::log(2.0), ref),
             Catch::Matchers::WithinAbs(0.15, 1e-12));
  CHECK_THROWS_AS(tail_probability_approx(0.3, 1.9, ref), AnchorViolation);
  CHECK_THROWS_AS(tail_probability_approx(1.3, 2.5, ref), DomainError);
}

TEST_CASE("tail approximation tracks the direct estimate under strong dependence",
          "[counterfactual]") {
  // strongly dependent coordinates: weighted exponential sums stay close to
  // the reference exponential tail
  rng::Stream s(29, "test.tailsim");
  const std::size_t n = 40000;
  PairCopula link{CopulaFamily::Gumbel, 0, 4.0};
  Matrix data(n, 2);
  for (std::size_t r = 0; r < n; ++r) {
    const double u0 = s.uniform();
    const double u1 = hinv(s.uniform(), u0, link, CopulaMargin::Second);
    data(r, 0) = -std::log1p(-u0);
    data(r, 1) = -std::log1p(-u1);
  }
  const auto margins = fit_margins(data, 0.9);

  ImpactEvent ev;
  ev.horizon = 1;
  ev.weights = {0.5, 0.5};
  ev.transform = TransformSpec{TransformKind::Exponential, 0.0, 1.0};

  std::vector<double> impacts(n);
  for (std::size_t r = 0; r < n; ++r) impacts[r] = impact_value(data.row(r), ev, margins);
  std::vector<double> sorted = impacts;
  std::sort(sorted.begin(), sorted.end());
  const double v95 = numeric::sorted_quantile(sorted, 0.95);
  const double anchor = impact_anchor(ev, margins);
  REQUIRE(anchor < v95);

  auto frac_above = [&](double v) {
    return static_cast<double>(std::count_if(impacts.begin(), impacts.end(),
                                             [&](double x) { return x > v; })) /
           static_cast<double>(n);
  };
  const GpdParams ref{0.0, 1.0, anchor, 0.5};
  const double approx = tail_probability_approx(frac_above(anchor), v95, ref);
  const double direct = frac_above(v95);
  CHECK(std::abs(approx - direct) / direct < 0.25);
}

TEST_CASE("pc curve endpoints and single-point grids", "[counterfactual]") {
  const auto vine = dependent_vine_2x1(2.0);
  const auto data = exp_scale(simulate_path(vine, 1200, 31));
  const auto margins = fit_margins(data, 0.9);
  const CauseEvent cause = cause_from_marginal(0, margins[0]);

  ImpactEvent ev;
  ev.horizon = 1;
  ev.weights = uniform_weights(1, 2);
  ev.transform = TransformSpec{TransformKind::Exponential, 0.0, 1.0};

  const std::vector<double> low{-1.0};
  const auto rlow = pc_curve_empirical(data, margins, cause, ev, low);
  REQUIRE(rlow.size() == 1);
  CHECK(rlow[0].p_f == 1.0);
  CHECK(rlow[0].p_cf == 1.0);
  CHECK(rlow[0].pn == 0.0);
  CHECK(rlow[0].pns == 0.0);
  CHECK(rlow[0].source == "empirical");

  // a report at the same v is identical regardless of surrounding grid points
  const std::vector<double> grid{0.5, 1.0, 1.5};
  const std::vector<double> sub{1.0};
  const auto full = pc_curve_empirical(data, margins, cause, ev, grid);
  const auto single = pc_curve_empirical(data, margins, cause, ev, sub);
  CHECK(full[1].p_f == single[0].p_f);
  CHECK(full[1].pns == single[0].pns);
}
