#include "adaptscale/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

namespace adaptscale::complexity {

namespace {

// Kahan sum of f(p) over the probabilities in descending order.
template <typename F>
double sum_descending(const std::vector<double>& probabilities, F f) {
  std::vector<double> p(probabilities);
  std::sort(p.begin(), p.end(), std::greater<>());
  double sum = 0.0, c = 0.0;
  for (double x : p) {
    if (x <= 0.0) continue;
    const double y = f(x) - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  return sum;
}

void check_distribution(const std::vector<double>& p) {
  if (p.empty()) throw Error("empty probability distribution");
  for (double x : p)
    if (!(x >= 0.0) || !std::isfinite(x)) throw Error("probabilities must be finite and non-negative");
  const double total = sum_descending(p, [](double x) { return x; });
  if (std::abs(total - 1.0) > 1e-10) throw Error("probabilities do not sum to 1");
}

}  // namespace

std::string order_name(const RenyiResult& r) {
  switch (r.order) {
    case Order::hartley: return "hartley";
    case Order::shannon: return "shannon";
    case Order::collision: return "collision";
    case Order::min: return "min";
    case Order::finite: break;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", r.alpha);
  return buf;
}

double renyi_entropy(const std::vector<double>& probabilities, double alpha) {
  if (!(alpha > 0.0) || alpha == 1.0 || !std::isfinite(alpha))
    throw UseLimitVariant("alpha must be positive, finite and != 1; use renyi_limits for 0, 1 and infinity");
  check_distribution(probabilities);
  const double s = sum_descending(probabilities, [alpha](double x) { return std::pow(x, alpha); });
  const double h = std::log(s) / (1.0 - alpha);
  return std::max(h, 0.0);
}

RenyiResult renyi_entropy(const exact::CiDistribution& d, double alpha) {
  return {Order::finite, alpha, renyi_entropy(d.probabilities, alpha)};
}

RenyiLimits renyi_limits(const std::vector<double>& probabilities, double floor) {
  check_distribution(probabilities);
  RenyiLimits out;
  out.floor = floor;
  out.n_nonzero = static_cast<std::size_t>(
      std::count_if(probabilities.begin(), probabilities.end(), [floor](double x) { return x > floor; }));
  out.hartley = out.n_nonzero > 0 ? std::log(static_cast<double>(out.n_nonzero)) : 0.0;
  out.shannon = std::max(0.0, -sum_descending(probabilities, [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; }));
  out.collision = std::max(0.0, -std::log(sum_descending(probabilities, [](double x) { return x * x; })));
  out.min = std::max(0.0, -std::log(*std::max_element(probabilities.begin(), probabilities.end())));
  return out;
}

RenyiLimits renyi_limits(const exact::CiDistribution& d, double floor) {
  return renyi_limits(d.probabilities, floor);
}

std::vector<RenyiResult> renyi_curve(const exact::CiDistribution& d, const std::vector<double>& alpha_grid) {
  std::vector<RenyiResult> out;
  out.reserve(alpha_grid.size());
  for (double a : alpha_grid) out.push_back(renyi_entropy(d, a));
  return out;
}

std::vector<FloorScan> hartley_floor_scan(const std::vector<double>& probabilities) {
  std::vector<FloorScan> out;
  for (double floor : {1e-16, 1e-12, 1e-8}) {
    const auto l = renyi_limits(probabilities, floor);
    out.push_back({floor, l.n_nonzero, l.hartley});
  }
  return out;
}

}  // namespace adaptscale::complexity
