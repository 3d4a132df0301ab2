#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/QR>

#include "adaptscale/analysis.hpp"
#include "adaptscale/complexity.hpp"
#include "adaptscale/errors.hpp"

using namespace adaptscale;
using namespace adaptscale::analysis;

namespace {

// Least squares through a QR solve of the design matrix [x 1], sharing
// nothing with the closed-form sums used by the library.
struct OracleFit {
  double slope, intercept, r_squared;
};

OracleFit oracle_ols(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = x[static_cast<std::size_t>(i)];
    a(i, 1) = 1.0;
    b(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector2d c = a.colPivHouseholderQr().solve(b);
  const double ss_res = (a * c - b).squaredNorm();
  const double ss_tot = (b.array() - b.mean()).matrix().squaredNorm();
  return {c(0), c(1), 1.0 - ss_res / ss_tot};
}

std::vector<TracePoint> step_trace(std::size_t reach_at) {
  std::vector<TracePoint> t;
  for (std::size_t i = 1; i <= reach_at; ++i) t.push_back({i, i == reach_at ? 1e-9 : 1.0, 2 * i, 13 * i});
  return t;
}

std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

}  // namespace

TEST(Analysis, LoglinearRecoversExactExponential) {
  std::vector<double> x, y;
  for (int i = 0; i < 6; ++i) {
    x.push_back(0.5 * i);
    y.push_back(std::exp(2.0 * x.back()));
  }
  const auto f = fit_loglinear(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 0.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_EQ(f.log_base, LogBase::natural);
  const auto f10 = fit_loglinear(x, y, LogBase::base10);
  EXPECT_NEAR(f10.slope, 2.0 / std::log(10.0), 1e-12);
}

TEST(Analysis, TwoPointsGiveUnitRSquared) {
  const auto f = fit_loglinear({1.0, 2.0}, {3.0, 7.0});
  EXPECT_EQ(f.n_points, 2u);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-15);
  EXPECT_NEAR(f.slope, std::log(7.0 / 3.0), 1e-14);
}

TEST(Analysis, FitErrors) {
  EXPECT_THROW(fit_linear({1.0}, {2.0}), InsufficientData);
  EXPECT_THROW(fit_linear({1.0, 2.0}, {2.0}), Error);
  EXPECT_THROW(fit_linear({2.0, 2.0, 2.0}, {1.0, 2.0, 3.0}), DegenerateFit);
  EXPECT_THROW(fit_linear({2.0, 2.0, 2.0}, {1.0, 1.0, 1.0}), DegenerateFit);
  EXPECT_THROW(fit_linear({1.0, 2.0, 3.0}, {4.0, 4.0, 4.0}), UndefinedRSquared);
  EXPECT_THROW(fit_loglinear({1.0, 2.0, 3.0}, {1.0, -1.0, 2.0}), Error);
}

TEST(Analysis, MatchesIndependentLeastSquaresOracle) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x, y;
    const int n = 3 + trial % 20;
    for (int i = 0; i < n; ++i) {
      x.push_back(10.0 * g(rng));
      y.push_back(1.5 * x.back() - 4.0 + g(rng));
    }
    const auto f = fit_linear(x, y);
    const auto o = oracle_ols(x, y);
    EXPECT_NEAR(f.slope, o.slope, 1e-12 * std::max(1.0, std::abs(o.slope)));
    EXPECT_NEAR(f.intercept, o.intercept, 1e-12 * std::max(1.0, std::abs(o.intercept)));
    EXPECT_NEAR(f.r_squared, o.r_squared, 1e-12);
    EXPECT_GE(f.r_squared, 0.0);
    EXPECT_LE(f.r_squared, 1.0);
  }
}

TEST(Analysis, CoefficientCovarianceMatchesClassicalFormula) {
  const std::vector<double> x{1, 2, 3, 4, 5, 6}, y{1.1, 1.9, 3.2, 3.9, 5.1, 5.8};
  const auto f = fit_linear(x, y);
  const double n = 6, mean = 3.5, sxx = 17.5;
  EXPECT_NEAR(f.covariance(0, 0), f.residual_variance / sxx, 1e-15);
  EXPECT_NEAR(f.covariance(1, 1), f.residual_variance * (1.0 / n + mean * mean / sxx), 1e-15);
  EXPECT_NEAR(f.covariance(0, 1), -f.residual_variance * mean / sxx, 1e-15);
}

TEST(Analysis, AffineEquivariance) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::vector<double> x, y;
  for (int i = 0; i < 12; ++i) {
    x.push_back(i);
    y.push_back(std::exp(0.3 * i + 0.2 * g(rng)));
  }
  const auto f = fit_loglinear(x, y);
  for (double c : {-3.0, 0.5, 100.0}) {
    std::vector<double> xs = x;
    for (auto& v : xs) v += c;
    const auto h = fit_loglinear(xs, y);
    EXPECT_NEAR(h.slope, f.slope, 1e-12);
    EXPECT_NEAR(h.intercept, f.intercept - f.slope * c, 1e-10);
    EXPECT_NEAR(h.r_squared, f.r_squared, 1e-12);
  }
}

TEST(Analysis, ThresholdExamples) {
  const auto f = fit_from_coefficients(-0.002218, -2.0759);
  const auto s = solve_for_threshold(f, 1.6e-3);
  EXPECT_NEAR(s.n, 324.5, 0.3);
  EXPECT_NEAR(s.n, (std::log10(1.6e-3) + 2.0759) / -0.002218, 1e-12);
  EXPECT_NEAR(solve_for_threshold(fit_from_coefficients(-1.0, 0.0), 0.1).n, 1.0, 1e-12);
  EXPECT_THROW(solve_for_threshold(fit_from_coefficients(0.0, -1.0), 0.1), NonDecayingFit);
  EXPECT_THROW(solve_for_threshold(fit_from_coefficients(0.01, -1.0), 0.1), NonDecayingFit);
}

TEST(Analysis, ThresholdInvertsTheFit) {
  const auto f = fit_from_coefficients(-0.0137, -1.2, 1e-4, 1e-2);
  for (double n : {1.0, 17.5, 120.0, 400.0}) {
    const double eps = std::pow(10.0, f.evaluate(n));
    EXPECT_NEAR(solve_for_threshold(f, eps).n, n, 1e-10);
  }
  const auto fe = fit_from_coefficients(-0.05, 0.3, 0, 0, LogBase::natural);
  EXPECT_NEAR(solve_for_threshold(fe, std::exp(fe.evaluate(42.0))).n, 42.0, 1e-10);
}

TEST(Analysis, PropagatedIntervalMatchesMonteCarlo) {
  const double a = -0.002218, b = -2.0759, sa = 0.000028, sb = 0.0044;
  const auto f = fit_from_coefficients(a, b, sa, sb);
  const auto s = solve_for_threshold(f, 1.6e-3);
  std::mt19937_64 rng(2718);
  std::normal_distribution<double> g;
  std::vector<double> draws;
  for (int k = 0; k < 100000; ++k)
    draws.push_back((std::log10(1.6e-3) - (b + sb * g(rng))) / (a + sa * g(rng)));
  std::sort(draws.begin(), draws.end());
  const double mc_half = 0.5 * (draws[97500] - draws[2500]);
  EXPECT_NEAR(s.half_width, mc_half, 0.1 * mc_half);
}

TEST(Analysis, PredictionAtCentroidIsGeometricMean) {
  const std::vector<double> x{0.5, 1.0, 1.7, 2.2, 3.1}, y{3.0, 5.5, 9.0, 20.0, 41.0};
  const auto f = fit_loglinear(x, y);
  double mx = 0.0, mlog = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / 5.0;
    mlog += std::log(y[i]) / 5.0;
  }
  const auto p = predict_n_adapt(f, mx);
  EXPECT_NEAR(p.confidence.value, std::exp(mlog), 1e-12 * std::exp(mlog));
  EXPECT_FALSE(p.extrapolated);
  EXPECT_TRUE(predict_n_adapt(f, 10.0).extrapolated);
}

TEST(Analysis, PredictionIntervalContainsConfidenceInterval) {
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7}, y{2, 3.5, 6.1, 11, 19, 40, 66};
  const auto f = fit_loglinear(x, y);
  for (double h = -5.0; h <= 15.0; h += 0.25) {
    const auto p = predict_n_adapt(f, h);
    EXPECT_LE(p.prediction.lower, p.confidence.lower);
    EXPECT_GE(p.prediction.upper, p.confidence.upper);
    EXPECT_LE(p.confidence.lower, p.confidence.value);
    EXPECT_GE(p.confidence.upper, p.confidence.value);
  }
  EXPECT_THROW(predict_n_adapt(fit_loglinear({1, 2}, {1, 2}), 1.5), InsufficientData);
}

TEST(Analysis, PredictionIntervalCoverage) {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 10.0);
  int covered = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> x, y;
    for (int i = 0; i < 10; ++i) {
      x.push_back(u(rng));
      y.push_back(1.0 + 0.5 * x.back() + 0.3 * g(rng));
    }
    const auto f = fit_linear(x, y);
    const double xs = u(rng);
    const double ys = 1.0 + 0.5 * xs + 0.3 * g(rng);
    const auto p = predict_linear(f, xs);
    covered += (ys >= p.prediction.lower && ys <= p.prediction.upper) ? 1 : 0;
  }
  const double rate = static_cast<double>(covered) / trials;
  EXPECT_GE(rate, 0.93);
  EXPECT_LE(rate, 0.97);
}

TEST(Analysis, BootstrapIsSeededAndBracketsTheFit) {
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8}, y{2.1, 2.9, 4.2, 4.8, 6.1, 7.2, 7.9, 9.1};
  const auto a = bootstrap_mean_response(x, y, LogBase::none, 4.5, 2000, 9);
  const auto b = bootstrap_mean_response(x, y, LogBase::none, 4.5, 2000, 9);
  EXPECT_EQ(a.lower, b.lower);
  EXPECT_EQ(a.upper, b.upper);
  EXPECT_LT(a.lower, a.value);
  EXPECT_GT(a.upper, a.value);
  EXPECT_NEAR(a.value, fit_linear(x, y).evaluate(4.5), 1e-12);
}

TEST(Analysis, QuantilesConvergeToNormal) {
  EXPECT_NEAR(normal_quantile(0.95), 1.959963984540054, 1e-12);
  EXPECT_NEAR(t_quantile(0.95, 1), 12.706204736174698, 1e-9);
  EXPECT_NEAR(t_quantile(0.95, 10), 2.228138851986274, 1e-12);
  // The gap shrinks monotonically; at 198 degrees of freedom it is about
  // 0.012 and falls under 1e-3 only beyond roughly 2400.
  double prev = INFINITY;
  for (double dof : {5.0, 20.0, 50.0, 198.0, 1000.0, 2500.0, 10000.0}) {
    const double gap = t_quantile(0.95, dof) - normal_quantile(0.95);
    EXPECT_GT(gap, 0.0);
    EXPECT_LT(gap, prev);
    prev = gap;
  }
  EXPECT_NEAR(t_quantile(0.95, 198) - normal_quantile(0.95), 0.0120, 5e-4);
  EXPECT_LT(t_quantile(0.95, 2500) - normal_quantile(0.95), 1e-3);
}

TEST(Analysis, NAdaptCrossingConventions) {
  const std::vector<TracePoint> t{{1, 1e-2, 1, 1}, {2, 1e-3, 2, 2}, {3, 2e-3, 3, 3}, {4, 1e-4, 4, 4}};
  EXPECT_EQ(n_adapt_at(t, 1.6e-3), std::optional<std::size_t>(2));
  EXPECT_EQ(n_adapt_at(t, 1.6e-3, true), std::optional<std::size_t>(4));
  EXPECT_EQ(n_adapt_at(t, 1e-5), std::nullopt);
}

TEST(Analysis, ErrorDecayFitAndRates) {
  std::vector<TracePoint> t;
  for (std::size_t i = 1; i <= 30; ++i) t.push_back({i, std::pow(10.0, -0.1 * i - 1.0), 2 * i, 26 * i});
  const auto f = fit_error_decay(t, 10, 30);
  EXPECT_EQ(f.n_points, 21u);
  EXPECT_NEAR(f.slope, -0.1, 1e-12);
  EXPECT_NEAR(f.intercept, -1.0, 1e-11);
  EXPECT_NEAR(solve_for_threshold(f, 1e-3).n, 20.0, 1e-9);
  const auto r = per_iteration_rates(t, 20);
  EXPECT_EQ(r.iterations, 20u);
  EXPECT_DOUBLE_EQ(r.parameters, 2.0);
  EXPECT_DOUBLE_EQ(r.cnots, 26.0);
  EXPECT_THROW(fit_error_decay(t, 40, 50), InsufficientData);
}

TEST(Analysis, SurfaceIsUnitOnExactExponentialLaw) {
  // Uniform spectra give h_alpha = ln N for every alpha, and n_ADAPT = N.
  std::vector<BenchmarkPoint> pts;
  for (std::size_t n : {2u, 4u, 8u, 16u})
    pts.push_back({"m" + std::to_string(n), uniform(n), step_trace(n)});
  const auto s = r2_surface(pts, {0.0, 0.25, 1.0, 2.0}, {1e-2, 1.6e-3});
  for (Eigen::Index a = 0; a < 4; ++a)
    for (Eigen::Index e = 0; e < 2; ++e) {
      EXPECT_NEAR(s.r_squared(a, e), 1.0, 1e-12);
      EXPECT_EQ(s.n_molecules(a, e), 4);
    }
  EXPECT_TRUE(s.exclusions.empty());
}

TEST(Analysis, SurfaceCellsNeedThreeMolecules) {
  std::vector<BenchmarkPoint> pts;
  pts.push_back({"a", uniform(2), step_trace(2)});
  pts.push_back({"b", uniform(4), step_trace(4)});
  pts.push_back({"c", uniform(8), {{1, 1.0, 1, 1}, {2, 1e-2, 2, 2}}});
  const auto s = r2_surface(pts, {0.25}, {5e-2, 1e-3});
  EXPECT_FALSE(std::isnan(s.r_squared(0, 0)));
  EXPECT_TRUE(std::isnan(s.r_squared(0, 1)));
  EXPECT_EQ(s.n_molecules(0, 1), 2);
  ASSERT_EQ(s.exclusions.size(), 1u);
  EXPECT_NE(s.exclusions[0].find("c"), std::string::npos);
  EXPECT_FALSE(s.best_alpha[1].has_value());
}

TEST(Analysis, SurfaceArgmaxAndPermutationInvariance) {
  std::mt19937_64 rng(77);
  std::exponential_distribution<double> ex(1.0);
  std::vector<BenchmarkPoint> pts;
  for (int m = 0; m < 7; ++m) {
    std::vector<double> p(3 + 4 * m);
    double total = 0.0;
    for (auto& v : p) total += v = std::pow(ex(rng), 3.0);
    for (auto& v : p) v /= total;
    std::sort(p.rbegin(), p.rend());
    pts.push_back({"m" + std::to_string(m), p, step_trace(2 + 3 * m + rng() % 4)});
  }
  const std::vector<double> grid{0.1, 0.25, 0.5, 1.0, 2.0};
  const auto s = r2_surface(pts, grid, {1e-3});
  // Independent recomputation of each column.
  double best = -1.0, best_alpha = 0.0;
  for (std::size_t a = 0; a < grid.size(); ++a) {
    std::vector<double> x, y;
    for (const auto& p : pts) {
      x.push_back(grid[a] == 1.0 ? complexity::renyi_limits(p.probabilities).shannon
                                 : complexity::renyi_entropy(p.probabilities, grid[a]));
      y.push_back(std::log(static_cast<double>(p.trace.size())));
    }
    const double r2 = oracle_ols(x, y).r_squared;
    EXPECT_NEAR(s.r_squared(static_cast<Eigen::Index>(a), 0), r2, 1e-12);
    if (r2 > best) {
      best = r2;
      best_alpha = grid[a];
    }
  }
  ASSERT_TRUE(s.best_alpha[0].has_value());
  EXPECT_EQ(*s.best_alpha[0], best_alpha);
  auto shuffled = pts;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto t = r2_surface(shuffled, grid, {1e-3});
  for (Eigen::Index a = 0; a < 5; ++a) EXPECT_EQ(t.r_squared(a, 0), s.r_squared(a, 0));
}

TEST(Analysis, BudgetConstantRate) {
  const auto r = resource_budget({100, 40, 160}, {5, 5, 5}, {5, 5, 5});
  EXPECT_DOUBLE_EQ(r.total_parameters.value, 500);
  EXPECT_DOUBLE_EQ(r.total_parameters.lower, 200);
  EXPECT_DOUBLE_EQ(r.total_parameters.upper, 800);

  ScalingFit constant;
  constant.slope = 0.0;
  constant.intercept = 5.0;
  constant.n_points = 5;
  constant.x_mean = 3.0;
  constant.sxx = 10.0;
  constant.x_min = 1.0;
  constant.x_max = 5.0;
  const auto f = resource_budget({100, 40, 160}, constant, constant, 12.0);
  EXPECT_DOUBLE_EQ(f.total_cnots.value, 500);
  EXPECT_DOUBLE_EQ(f.total_cnots.lower, 200);
  EXPECT_DOUBLE_EQ(f.total_cnots.upper, 800);
  ScalingFit few = constant;
  few.n_points = 2;
  EXPECT_THROW(resource_budget({100, 40, 160}, few, constant, 12.0), InsufficientData);
}

TEST(Analysis, BudgetTableConsistency) {
  // Published totals: 150 [64, 330] x 10^3 parameters and 6.1 [2.7, 14] x 10^5
  // CNOTs. The n_ADAPT interval behind them is not printed; 8000 [3600, 17000]
  // is assumed, with per-iteration rates chosen to reproduce the parameter row.
  const Interval n{8000, 3600, 17000};
  const auto r = resource_budget(n, {18.75, 17.8, 19.4}, {76.3, 75.0, 82.4});
  auto round_to = [](double v, double unit, int digits) {
    const double scaled = v / unit;
    const double p = std::pow(10.0, digits - 1 - std::floor(std::log10(scaled)));
    return std::round(scaled * p) / p;
  };
  EXPECT_EQ(round_to(r.total_parameters.value, 1e3, 2), 150);
  EXPECT_EQ(round_to(r.total_parameters.lower, 1e3, 2), 64);
  EXPECT_EQ(round_to(r.total_parameters.upper, 1e3, 2), 330);
  EXPECT_EQ(round_to(r.total_cnots.value, 1e5, 2), 6.1);
  EXPECT_EQ(round_to(r.total_cnots.lower, 1e5, 2), 2.7);
  EXPECT_EQ(round_to(r.total_cnots.upper, 1e5, 2), 14);
  for (const auto& iv : {r.params_per_iter, r.cnots_per_iter, r.total_parameters, r.total_cnots}) {
    EXPECT_LE(iv.lower, iv.value);
    EXPECT_LE(iv.value, iv.upper);
  }
}

TEST(Analysis, BudgetIsMonotoneInInputs) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const Interval n{100 + 50 * u(rng), 50 + 50 * u(rng), 150 + 100 * u(rng)};
    const Interval p{3 + u(rng), 2 + u(rng), 4 + u(rng)};
    const Interval c{20 + u(rng), 10 + 10 * u(rng), 21 + 10 * u(rng)};
    const Interval wide_n{n.value, n.lower * u(rng), n.upper * (1 + u(rng))};
    const Interval wide_c{c.value, c.lower * u(rng), c.upper * (1 + u(rng))};
    const auto a = resource_budget(n, p, c);
    const auto b = resource_budget(wide_n, p, wide_c);
    EXPECT_LE(b.total_parameters.lower, a.total_parameters.lower);
    EXPECT_GE(b.total_parameters.upper, a.total_parameters.upper);
    EXPECT_LE(b.total_cnots.lower, a.total_cnots.lower);
    EXPECT_GE(b.total_cnots.upper, a.total_cnots.upper);
  }
}

TEST(Analysis, NegativeRatesAreClampedWithWarning) {
  const auto r = resource_budget({10, 5, 20}, {-1, -2, 0.5}, {3, 2, 4});
  EXPECT_EQ(r.total_parameters.lower, 0.0);
  EXPECT_EQ(r.total_parameters.value, 0.0);
  EXPECT_EQ(r.warnings.size(), 1u);
  EXPECT_THROW(resource_budget({10, 12, 20}, {1, 1, 1}, {1, 1, 1}), Error);
}
