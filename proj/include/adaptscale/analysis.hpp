#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "adaptscale/errors.hpp"

namespace adaptscale::analysis {

enum class LogBase { none, natural, base10 };
std::string_view to_string(LogBase base);

/// y = slope * x + intercept, fitted by ordinary least squares. For log fits
/// y is the transformed response.
struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double residual_variance = 0.0;  // SS_res / (n - 2); 0 for n = 2
  std::size_t n_points = 0;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();  // of (slope, intercept)
  LogBase log_base = LogBase::none;
  double x_mean = 0.0;
  double sxx = 0.0;
  double x_min = 0.0;
  double x_max = 0.0;

  double evaluate(double x) const { return slope * x + intercept; }
};

ScalingFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);
/// Fits log(y) against x; y must be positive.
ScalingFit fit_loglinear(const std::vector<double>& x, const std::vector<double>& y,
                         LogBase base = LogBase::natural);

/// Two-sided Student-t quantile for the given confidence level.
double t_quantile(double level, double dof);
double normal_quantile(double level);

struct Interval {
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct ThresholdSolution {
  double n = 0.0;
  double standard_error = 0.0;  // first-order propagation from the covariance
  double half_width = 0.0;      // quantile * standard_error
  Interval interval;
};

/// Inverts log10(eps) = a * n + b. Bands use t with n_points - 2 degrees of
/// freedom, or the normal quantile when the fit carries no point count.
ThresholdSolution solve_for_threshold(const ScalingFit& fit, double epsilon, double level = 0.95);

/// Builds a fit from published coefficients and their standard errors
/// (uncorrelated).
ScalingFit fit_from_coefficients(double slope, double intercept, double slope_se = 0.0,
                                 double intercept_se = 0.0, LogBase base = LogBase::base10);

struct Prediction {
  double x = 0.0;
  Interval confidence;  // mean response
  Interval prediction;  // single new observation
  bool extrapolated = false;
};

/// Bands on the fitted (transformed) scale.
Prediction predict_linear(const ScalingFit& fit, double x, double level = 0.95);
/// Bands mapped back through exp or 10^ according to the fit's log base.
Prediction predict_n_adapt(const ScalingFit& fit, double h_star, double level = 0.95);

/// Percentile bootstrap of the mean response at x, resampling (x, y) pairs.
Interval bootstrap_mean_response(const std::vector<double>& x, const std::vector<double>& y,
                                 LogBase base, double x_star, std::size_t resamples = 10000,
                                 std::uint64_t seed = 1, double level = 0.95);

struct TracePoint {
  std::size_t iteration = 0;
  double energy_error = 0.0;
  std::size_t cumulative_parameters = 0;
  std::size_t cumulative_cnots = 0;
};

/// First iteration with energy_error <= epsilon, or with `last_crossing` the
/// start of the final stretch that stays below epsilon.
std::optional<std::size_t> n_adapt_at(const std::vector<TracePoint>& trace, double epsilon,
                                      bool last_crossing = false);

/// log10(energy_error) vs iteration over records with lo <= iteration <= hi.
ScalingFit fit_error_decay(const std::vector<TracePoint>& trace, std::size_t lo, std::size_t hi);

struct PerIterationRates {
  double parameters = 0.0;
  double cnots = 0.0;
  std::size_t iterations = 0;
};

/// Mean new parameters and CNOTs per iteration up to and including `upto`.
PerIterationRates per_iteration_rates(const std::vector<TracePoint>& trace, std::size_t upto);

struct BenchmarkPoint {
  std::string molecule_label;
  std::vector<double> probabilities;  // CI distribution
  std::vector<TracePoint> trace;
};

struct R2Surface {
  std::vector<double> alpha_grid;
  std::vector<double> epsilon_grid;
  Eigen::MatrixXd r_squared;  // alpha rows, epsilon columns; NaN where undefined
  Eigen::MatrixXi n_molecules;
  std::vector<std::optional<double>> best_alpha;  // per epsilon column
  std::vector<std::string> exclusions;
};

R2Surface r2_surface(const std::vector<BenchmarkPoint>& points, const std::vector<double>& alpha_grid,
                     const std::vector<double>& epsilon_grid, bool last_crossing = false);

struct ResourceEstimate {
  Interval n_adapt;
  Interval params_per_iter;
  Interval cnots_per_iter;
  Interval total_parameters;
  Interval total_cnots;
  std::vector<std::string> warnings;
};

/// Totals by interval multiplication of n_ADAPT and per-iteration rates.
ResourceEstimate resource_budget(const Interval& n_adapt, const Interval& params_per_iter,
                                 const Interval& cnots_per_iter);
/// Rates from linear fits over system size, evaluated with their mean-response
/// band at `system_size`. Negative rates are clamped to zero with a warning.
ResourceEstimate resource_budget(const Interval& n_adapt, const ScalingFit& rate_fit_params,
                                 const ScalingFit& rate_fit_cnots, double system_size,
                                 double level = 0.95);

}  // namespace adaptscale::analysis
