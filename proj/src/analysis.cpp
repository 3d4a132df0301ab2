#include "adaptscale/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <numeric>
#include <random>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "adaptscale/complexity.hpp"

namespace adaptscale::analysis {

std::string_view to_string(LogBase base) {
  switch (base) {
    case LogBase::none: return "none";
    case LogBase::natural: return "ln";
    case LogBase::base10: return "log10";
  }
  return "unknown";
}

namespace {

double transform(double y, LogBase base) {
  switch (base) {
    case LogBase::natural: return std::log(y);
    case LogBase::base10: return std::log10(y);
    case LogBase::none: break;
  }
  return y;
}

double untransform(double y, LogBase base) {
  switch (base) {
    case LogBase::natural: return std::exp(y);
    case LogBase::base10: return std::pow(10.0, y);
    case LogBase::none: break;
  }
  return y;
}

Interval map_interval(const Interval& i, LogBase base) {
  return {untransform(i.value, base), untransform(i.lower, base), untransform(i.upper, base)};
}

double band_quantile(const ScalingFit& fit, double level) {
  return fit.n_points >= 3 ? t_quantile(level, static_cast<double>(fit.n_points - 2))
                           : normal_quantile(level);
}

}  // namespace

double t_quantile(double level, double dof) {
  if (!(level > 0.0 && level < 1.0)) throw Error("confidence level must lie in (0, 1)");
  if (!(dof > 0.0)) throw InsufficientData("t quantile needs positive degrees of freedom");
  boost::math::students_t dist(dof);
  return boost::math::quantile(dist, 0.5 + 0.5 * level);
}

double normal_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error("confidence level must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * level);
}

ScalingFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionError("x and y lengths differ");
  const std::size_t n = x.size();
  if (n < 2) throw InsufficientData("a line needs at least two points");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw Error("non-finite regression input");
  const double dn = static_cast<double>(n);
  const double xm = std::accumulate(x.begin(), x.end(), 0.0) / dn;
  const double ym = std::accumulate(y.begin(), y.end(), 0.0) / dn;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
    syy += (y[i] - ym) * (y[i] - ym);
  }
  if (sxx == 0.0) throw DegenerateFit("all x values are equal");
  if (syy == 0.0) throw UndefinedRSquared("all y values are equal");

  ScalingFit f;
  f.n_points = n;
  f.slope = sxy / sxx;
  f.intercept = ym - f.slope * xm;
  f.x_mean = xm;
  f.sxx = sxx;
  f.x_min = *std::min_element(x.begin(), x.end());
  f.x_max = *std::max_element(x.begin(), x.end());
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.evaluate(x[i]);
    ss_res += r * r;
  }
  f.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  f.residual_variance = n > 2 ? ss_res / (dn - 2.0) : 0.0;
  const double s2 = f.residual_variance;
  f.covariance << s2 / sxx, -xm * s2 / sxx, -xm * s2 / sxx, s2 * (1.0 / dn + xm * xm / sxx);
  return f;
}

ScalingFit fit_loglinear(const std::vector<double>& x, const std::vector<double>& y, LogBase base) {
  std::vector<double> ly(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0)) throw Error("log fit needs positive y values");
    ly[i] = transform(y[i], base);
  }
  ScalingFit f = fit_linear(x, ly);
  f.log_base = base;
  return f;
}

ScalingFit fit_from_coefficients(double slope, double intercept, double slope_se,
                                 double intercept_se, LogBase base) {
  ScalingFit f;
  f.slope = slope;
  f.intercept = intercept;
  f.r_squared = std::numeric_limits<double>::quiet_NaN();
  f.covariance << slope_se * slope_se, 0.0, 0.0, intercept_se * intercept_se;
  f.log_base = base;
  return f;
}

ThresholdSolution solve_for_threshold(const ScalingFit& fit, double epsilon, double level) {
  if (!(fit.slope < 0.0)) throw NonDecayingFit("error does not decay with iterations (slope >= 0)");
  if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
  const double target = fit.log_base == LogBase::natural ? std::log(epsilon) : std::log10(epsilon);
  ThresholdSolution s;
  s.n = (target - fit.intercept) / fit.slope;
  const Eigen::Vector2d j(-s.n / fit.slope, -1.0 / fit.slope);
  s.standard_error = std::sqrt(std::max(0.0, j.dot(fit.covariance * j)));
  s.half_width = band_quantile(fit, level) * s.standard_error;
  s.interval = {s.n, s.n - s.half_width, s.n + s.half_width};
  return s;
}

Prediction predict_linear(const ScalingFit& fit, double x, double level) {
  if (fit.n_points < 3) throw InsufficientData("bands need at least three fitted points");
  const double q = t_quantile(level, static_cast<double>(fit.n_points - 2));
  const double y = fit.evaluate(x);
  const double s2 = fit.residual_variance;
  const double lever = 1.0 / static_cast<double>(fit.n_points) + (x - fit.x_mean) * (x - fit.x_mean) / fit.sxx;
  const double se_mean = std::sqrt(s2 * lever);
  const double se_pred = std::sqrt(s2 * (1.0 + lever));
  Prediction p;
  p.x = x;
  p.confidence = {y, y - q * se_mean, y + q * se_mean};
  p.prediction = {y, y - q * se_pred, y + q * se_pred};
  p.extrapolated = x < fit.x_min || x > fit.x_max;
  return p;
}

Prediction predict_n_adapt(const ScalingFit& fit, double h_star, double level) {
  Prediction p = predict_linear(fit, h_star, level);
  p.confidence = map_interval(p.confidence, fit.log_base);
  p.prediction = map_interval(p.prediction, fit.log_base);
  return p;
}

Interval bootstrap_mean_response(const std::vector<double>& x, const std::vector<double>& y,
                                 LogBase base, double x_star, std::size_t resamples,
                                 std::uint64_t seed, double level) {
  const ScalingFit full = base == LogBase::none ? fit_linear(x, y) : fit_loglinear(x, y, base);
  const std::size_t n = x.size();
  std::mt19937_64 rng(seed);
  std::vector<double> estimates;
  estimates.reserve(resamples);
  std::vector<double> bx(n), by(n);
  for (std::size_t r = 0; r < resamples; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = static_cast<std::size_t>(rng() % n);
      bx[i] = x[k];
      by[i] = y[k];
    }
    try {
      const ScalingFit f = base == LogBase::none ? fit_linear(bx, by) : fit_loglinear(bx, by, base);
      estimates.push_back(f.evaluate(x_star));
    } catch (const DegenerateFit&) {
    } catch (const UndefinedRSquared&) {
    }
  }
  if (estimates.size() < 2) throw InsufficientData("too few usable bootstrap resamples");
  std::sort(estimates.begin(), estimates.end());
  auto pick = [&](double q) {
    const double pos = q * static_cast<double>(estimates.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, estimates.size() - 1);
    return estimates[lo] + (pos - static_cast<double>(lo)) * (estimates[hi] - estimates[lo]);
  };
  const double tail = 0.5 * (1.0 - level);
  return map_interval({full.evaluate(x_star), pick(tail), pick(1.0 - tail)}, base);
}

std::optional<std::size_t> n_adapt_at(const std::vector<TracePoint>& trace, double epsilon,
                                      bool last_crossing) {
  std::optional<std::size_t> out;
  for (const auto& r : trace) {
    if (r.energy_error <= epsilon) {
      if (!out) out = r.iteration;
      if (!last_crossing) return out;
    } else if (last_crossing) {
      out.reset();
    }
  }
  return out;
}

ScalingFit fit_error_decay(const std::vector<TracePoint>& trace, std::size_t lo, std::size_t hi) {
  std::vector<double> x, y;
  for (const auto& r : trace)
    if (r.iteration >= lo && r.iteration <= hi && r.energy_error > 0.0) {
      x.push_back(static_cast<double>(r.iteration));
      y.push_back(r.energy_error);
    }
  if (x.size() < 2) throw InsufficientData("fit window holds fewer than two positive errors");
  return fit_loglinear(x, y, LogBase::base10);
}

PerIterationRates per_iteration_rates(const std::vector<TracePoint>& trace, std::size_t upto) {
  PerIterationRates r;
  const TracePoint* last = nullptr;
  for (const auto& p : trace)
    if (p.iteration <= upto) last = &p;
  if (!last || last->iteration == 0) throw InsufficientData("no iterations to average over");
  r.iterations = last->iteration;
  r.parameters = static_cast<double>(last->cumulative_parameters) / static_cast<double>(r.iterations);
  r.cnots = static_cast<double>(last->cumulative_cnots) / static_cast<double>(r.iterations);
  return r;
}

R2Surface r2_surface(const std::vector<BenchmarkPoint>& points, const std::vector<double>& alpha_grid,
                     const std::vector<double>& epsilon_grid, bool last_crossing) {
  R2Surface s;
  s.alpha_grid = alpha_grid;
  s.epsilon_grid = epsilon_grid;
  const auto na = static_cast<Eigen::Index>(alpha_grid.size());
  const auto ne = static_cast<Eigen::Index>(epsilon_grid.size());
  s.r_squared = Eigen::MatrixXd::Constant(na, ne, std::numeric_limits<double>::quiet_NaN());
  s.n_molecules = Eigen::MatrixXi::Zero(na, ne);

  // entropy[m][a]
  std::vector<std::vector<double>> entropy(points.size());
  for (std::size_t m = 0; m < points.size(); ++m)
    for (double a : alpha_grid) {
      if (a == 1.0) entropy[m].push_back(complexity::renyi_limits(points[m].probabilities).shannon);
      else if (a == 0.0) entropy[m].push_back(complexity::renyi_limits(points[m].probabilities).hartley);
      else entropy[m].push_back(complexity::renyi_entropy(points[m].probabilities, a));
    }

  for (Eigen::Index e = 0; e < ne; ++e) {
    const double eps = epsilon_grid[static_cast<std::size_t>(e)];
    std::vector<std::size_t> members;
    std::vector<double> n_values;
    for (std::size_t m = 0; m < points.size(); ++m) {
      const auto n = n_adapt_at(points[m].trace, eps, last_crossing);
      if (!n || *n == 0) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s excluded at epsilon=%.3g (threshold not reached)",
                      points[m].molecule_label.c_str(), eps);
        s.exclusions.emplace_back(buf);
        continue;
      }
      members.push_back(m);
      n_values.push_back(static_cast<double>(*n));
    }
    for (Eigen::Index a = 0; a < na; ++a) {
      s.n_molecules(a, e) = static_cast<int>(members.size());
      if (members.size() < 3) continue;
      // Sorted input makes the cell independent of molecule order.
      std::vector<std::pair<double, double>> xy;
      for (std::size_t k = 0; k < members.size(); ++k)
        xy.emplace_back(entropy[members[k]][static_cast<std::size_t>(a)], n_values[k]);
      std::sort(xy.begin(), xy.end());
      std::vector<double> x, y;
      for (const auto& [xi, yi] : xy) {
        x.push_back(xi);
        y.push_back(yi);
      }
      try {
        s.r_squared(a, e) = fit_loglinear(x, y, LogBase::natural).r_squared;
      } catch (const DegenerateFit&) {
      } catch (const UndefinedRSquared&) {
      }
    }
    std::optional<double> best;
    double best_r2 = -1.0;
    for (Eigen::Index a = 0; a < na; ++a) {
      const double r2 = s.r_squared(a, e);
      if (std::isnan(r2)) continue;
      if (r2 > best_r2) {
        best_r2 = r2;
        best = alpha_grid[static_cast<std::size_t>(a)];
      }
    }
    s.best_alpha.push_back(best);
  }
  return s;
}

namespace {

Interval clamp_rate(Interval r, const char* what, std::vector<std::string>& warnings) {
  if (r.lower < 0.0 || r.value < 0.0 || r.upper < 0.0) {
    warnings.push_back(std::string(what) + " rate extrapolates below zero; clamped at zero");
    r.lower = std::max(r.lower, 0.0);
    r.value = std::max(r.value, 0.0);
    r.upper = std::max(r.upper, 0.0);
  }
  return r;
}

Interval product(const Interval& a, const Interval& b) {
  return {a.value * b.value, a.lower * b.lower, a.upper * b.upper};
}

}  // namespace

ResourceEstimate resource_budget(const Interval& n_adapt, const Interval& params_per_iter,
                                 const Interval& cnots_per_iter) {
  if (n_adapt.lower < 0.0 || n_adapt.lower > n_adapt.value || n_adapt.value > n_adapt.upper)
    throw Error("n_ADAPT interval must satisfy 0 <= lower <= value <= upper");
  ResourceEstimate r;
  r.n_adapt = n_adapt;
  r.params_per_iter = clamp_rate(params_per_iter, "parameter", r.warnings);
  r.cnots_per_iter = clamp_rate(cnots_per_iter, "CNOT", r.warnings);
  r.total_parameters = product(r.n_adapt, r.params_per_iter);
  r.total_cnots = product(r.n_adapt, r.cnots_per_iter);
  return r;
}

ResourceEstimate resource_budget(const Interval& n_adapt, const ScalingFit& rate_fit_params,
                                 const ScalingFit& rate_fit_cnots, double system_size, double level) {
  if (rate_fit_params.n_points < 3 || rate_fit_cnots.n_points < 3)
    throw InsufficientData("rate fits need at least three points");
  const auto p = predict_linear(rate_fit_params, system_size, level).confidence;
  const auto c = predict_linear(rate_fit_cnots, system_size, level).confidence;
  return resource_budget(n_adapt, p, c);
}

}  // namespace adaptscale::analysis
