#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "adaptscale/errors.hpp"
#include "adaptscale/exact.hpp"

namespace adaptscale::complexity {

/// Calibrated order for the h* convention.
inline constexpr double kAlphaStar = 0.25;
/// Probabilities at or below this count as zero for the Hartley entropy.
inline constexpr double kDefaultFloor = 1e-16;

enum class Order { finite, hartley, shannon, collision, min };

struct RenyiResult {
  Order order = Order::finite;
  double alpha = 0.0;  // meaningful for Order::finite; 0, 1, 2, inf for the limits
  double value = 0.0;  // nats
};

std::string order_name(const RenyiResult& r);

/// h_alpha = ln(sum p_i^alpha) / (1 - alpha) for alpha > 0, alpha != 1.
RenyiResult renyi_entropy(const exact::CiDistribution& d, double alpha);
double renyi_entropy(const std::vector<double>& probabilities, double alpha);

struct RenyiLimits {
  double hartley = 0.0;
  double shannon = 0.0;
  double collision = 0.0;
  double min = 0.0;
  std::size_t n_nonzero = 0;
  double floor = kDefaultFloor;
};

RenyiLimits renyi_limits(const exact::CiDistribution& d, double floor = kDefaultFloor);
RenyiLimits renyi_limits(const std::vector<double>& probabilities, double floor = kDefaultFloor);

std::vector<RenyiResult> renyi_curve(const exact::CiDistribution& d, const std::vector<double>& alpha_grid);

struct FloorScan {
  double floor = 0.0;
  std::size_t n_nonzero = 0;
  double hartley = 0.0;
};

/// Hartley entropy at floors 1e-16, 1e-12 and 1e-8.
std::vector<FloorScan> hartley_floor_scan(const std::vector<double>& probabilities);

}  // namespace adaptscale::complexity
