#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "adaptscale/errors.hpp"
#include "adaptscale/pauli.hpp"
#include "adaptscale/pools.hpp"
#include "adaptscale/simulator.hpp"

namespace adaptscale::adapt {

/// Chemical accuracy in Hartree.
inline constexpr double kEpsilonChem = 1.6e-3;

enum class StopReason { target_error, gradient_threshold, max_iterations };
std::string_view to_string(StopReason reason);

struct AdaptConfig {
  double target_error = kEpsilonChem;
  std::size_t max_iterations = 200;
  /// Pool screening stops once g* <= gradient_threshold. TETRIS also uses it
  /// as the acceptance floor for additional operators.
  double gradient_threshold = 1e-12;
  bool tetris = false;
  /// Tolerance on max|dE/dtheta|; the loop tightens it to
  /// min(inner_gradient_tolerance, 0.1 * target_error).
  double inner_gradient_tolerance = 1e-6;
  std::size_t max_inner_iterations = 5000;
  double reference_energy = 0.0;
  double epsilon_chem = kEpsilonChem;
  /// 2S+1 of the intended state, used for the spin deviation column.
  int spin_multiplicity = 1;
  bool recycle_hessian = true;

  void validate() const;
  double effective_inner_tolerance() const;
};

struct IterationRecord {
  std::size_t iteration_index = 0;
  double energy = 0.0;
  double energy_error = 0.0;
  double max_gradient = 0.0;
  double spin_sq = 0.0;
  double spin_deviation = 0.0;
  std::size_t operators_added = 0;
  std::size_t cumulative_parameters = 0;
  std::size_t cumulative_cnots = 0;
  std::size_t inner_iterations = 0;
  bool stalled = false;
  std::vector<std::size_t> selected;  // pool indices appended this iteration
};

struct AdaptTrace {
  std::string molecule_label;
  std::string pool_label;
  AdaptConfig config;
  std::vector<IterationRecord> records;
  StopReason stop_reason = StopReason::max_iterations;
  sim::AnsatzState ansatz;

  /// First iteration index whose energy_error <= epsilon, if any. With
  /// `last_crossing` the start of the final run of records that stay below.
  std::optional<std::size_t> n_adapt_at(double epsilon, bool last_crossing = false) const;
};

/// Pool indices to append. Empty when every gradient is <= threshold.
/// Without TETRIS this is the argmax (lowest index on ties). With TETRIS the
/// entries are scanned in descending gradient order and accepted when their
/// support is disjoint from everything accepted so far.
std::vector<std::size_t> select_operators(const std::vector<double>& gradients,
                                          const pools::OperatorPool& pool, bool tetris,
                                          double gradient_threshold = 1e-12);

/// [[prev, 0], [0, I_m]]
Eigen::MatrixXd expand_inverse_hessian(const Eigen::MatrixXd& prev, std::size_t new_params);

struct Objective {
  double value = 0.0;
  Eigen::VectorXd gradient;
};
using ObjectiveFn = std::function<Objective(const Eigen::VectorXd&)>;

struct BfgsOptions {
  double gradient_tolerance = 1e-6;
  std::size_t max_iterations = 5000;
  double c1 = 1e-4;
  double c2 = 0.9;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd inverse_hessian;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Thrown when neither the quasi-Newton direction nor a steepest-descent
/// step lowers the objective. Carries the best point found.
class OptimizationStallAt : public OptimizationStall {
 public:
  OptimizationStallAt(const std::string& what, BfgsResult partial)
      : OptimizationStall(what), partial_(std::move(partial)) {}
  const BfgsResult& partial() const noexcept { return partial_; }

 private:
  BfgsResult partial_;
};

/// Quasi-Newton minimization with a strong-Wolfe line search. A warm inverse
/// Hessian that is not symmetric positive definite is replaced by I.
BfgsResult minimize_bfgs(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                         const Eigen::MatrixXd& warm_inverse_hessian, const BfgsOptions& options);

struct InnerResult {
  sim::AnsatzState ansatz;
  Eigen::MatrixXd inverse_hessian;
  double energy = 0.0;
  std::size_t inner_iterations = 0;
  bool converged = false;
  bool stalled = false;
};

/// Optimizes every ansatz parameter from its current value with adjoint
/// gradients. A stall is reported in the result instead of thrown.
InnerResult inner_vqe(const sim::CompiledOperator& h, const sim::AnsatzState& ansatz,
                      const Eigen::MatrixXd& warm_inverse_hessian, double tolerance,
                      std::size_t max_iterations = 5000);

/// Optional per-iteration observer, e.g. for progress logs.
using IterationCallback = std::function<void(const IterationRecord&)>;

AdaptTrace run_adapt(const pauli::QubitHamiltonian& h, const pools::OperatorPool& pool,
                     pauli::QubitMask reference, const AdaptConfig& cfg,
                     const IterationCallback& on_iteration = {});

/// Occupation bitset of the aufbau determinant under the alternating ordering.
pauli::QubitMask aufbau_reference(std::size_t n_alpha, std::size_t n_beta);

}  // namespace adaptscale::adapt
