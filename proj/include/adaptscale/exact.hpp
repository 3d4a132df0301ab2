#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "adaptscale/errors.hpp"
#include "adaptscale/hamio.hpp"
#include "adaptscale/pauli.hpp"
#include "adaptscale/simulator.hpp"

namespace adaptscale::exact {

using OrbitalMask = std::uint64_t;

struct SectorSpec {
  std::size_t n_orbitals = 0;
  std::size_t n_alpha = 0;
  std::size_t n_beta = 0;
  double target_spin = 0.0;  // S, so <S^2> = S(S+1)

  void validate() const;
};

SectorSpec sector_of(const hamio::MolecularProblem& problem);

/// Alpha and beta occupation strings; bit p is spatial orbital p.
struct Determinant {
  OrbitalMask alpha = 0;
  OrbitalMask beta = 0;

  bool operator==(const Determinant&) const = default;
  /// Interleaved spin-orbital mask: alpha p -> bit 2p, beta p -> bit 2p+1.
  pauli::QubitMask qubit_mask() const;
};

struct CiVector {
  SectorSpec sector;
  std::vector<Determinant> determinants;
  Eigen::VectorXd coefficients;
  double energy = 0.0;
  double spin_sq = 0.0;
};

/// p_i = |C_i|^2 in descending order.
struct CiDistribution {
  std::vector<double> probabilities;
};

enum class Solver { automatic, dense, lanczos };

struct FciOptions {
  std::uint64_t determinant_cap = 10'000'000;
  std::size_t dense_limit = 2000;
  Solver solver = Solver::automatic;
  double spin_tolerance = 0.01;
  double residual_tolerance = 1e-10;
  std::size_t max_lanczos_iterations = 2000;
  std::uint64_t lanczos_seed = 12345;
};

/// Exact binomial product C(n, n_alpha) * C(n, n_beta). Throws on uint64 overflow.
std::uint64_t determinant_count(const SectorSpec& sector);

/// Alpha-major, beta-minor; each string ascending by mask value.
std::vector<Determinant> enumerate_determinants(const SectorSpec& sector);

/// Sector Hamiltonian in the determinant basis. Signs follow the
/// Jordan-Wigner ordering of interleaved spin orbitals, so eigenvector
/// entries coincide with qubit statevector amplitudes.
Eigen::SparseMatrix<double> sector_hamiltonian(const hamio::MolecularProblem& problem,
                                               const std::vector<Determinant>& dets);
Eigen::SparseMatrix<double> sector_spin_squared(std::size_t n_orbitals,
                                                const std::vector<Determinant>& dets);

double determinant_energy(const hamio::MolecularProblem& problem, const Determinant& det);

/// Lowest eigenpair in the problem's sector whose <S^2> matches the target
/// spin. Energy includes the core energy.
CiVector fci_ground_state(const hamio::MolecularProblem& problem, const FciOptions& options = {});

CiDistribution ci_distribution(const CiVector& v);

double spin_squared_ci(const CiVector& v);

/// Embeds the CI vector in the 2*n_orbitals qubit register.
sim::Statevector to_statevector(const CiVector& v);

struct LanczosResult {
  std::vector<double> values;
  Eigen::MatrixXd vectors;  // columns, normalized
  std::size_t iterations = 0;
};

/// Lowest `n_roots` eigenpairs of a symmetric operator by Lanczos with full
/// reorthogonalization. Stops once every requested residual norm is below
/// `tolerance`; throws IterationLimit otherwise.
LanczosResult lanczos(const Eigen::SparseMatrix<double>& a, std::size_t n_roots, double tolerance,
                      std::size_t max_iterations, std::uint64_t seed);

}  // namespace adaptscale::exact
