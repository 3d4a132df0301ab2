#pragma once

#include <bit>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "adaptscale/hamio.hpp"

namespace adaptscale::pauli {

using Complex = std::complex<double>;
/// Bitset over qubits; bit q refers to qubit q. Desk-scale problems stay far
/// below 64 qubits.
using QubitMask = std::uint64_t;

inline constexpr std::size_t kMaxQubits = 64;
inline constexpr double kDefaultSimplifyThreshold = 1e-12;

/// coefficient * (sigma_0 (x) sigma_1 (x) ...), where qubit q carries
/// I, X, Z or Y for (x_q, z_q) = (0,0), (1,0), (0,1), (1,1).
///
/// Y is stored explicitly (not as X*Z), so a Hermitian operator always has
/// real coefficients in this encoding.
struct PauliTerm {
  QubitMask x_mask = 0;
  QubitMask z_mask = 0;
  Complex coefficient{1.0, 0.0};

  QubitMask support() const noexcept { return x_mask | z_mask; }
  int weight() const noexcept { return std::popcount(support()); }
  bool is_identity() const noexcept { return support() == 0; }
  bool same_string(const PauliTerm& o) const noexcept {
    return x_mask == o.x_mask && z_mask == o.z_mask;
  }
};

using PauliSum = std::vector<PauliTerm>;

/// Returns a*b with the phase from the symplectic product of the masks.
PauliTerm pauli_product(const PauliTerm& a, const PauliTerm& b);

/// Product of two sums, unsimplified.
PauliSum multiply(const PauliSum& a, const PauliSum& b);

/// i^k for integer k.
inline Complex i_power(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

/// Amplitude factor of P|b> = factor * |b ^ x_mask>, excluding the coefficient.
inline Complex basis_action_phase(QubitMask x, QubitMask z, QubitMask b) {
  Complex ph = i_power(std::popcount(x & z));
  return (std::popcount(z & b) & 1) ? -ph : ph;
}

struct QubitHamiltonian {
  std::size_t n_qubits = 0;
  PauliSum terms;
};

/// Merges like terms, drops |c| <= threshold, and orders terms by (x, z).
QubitHamiltonian simplify(const QubitHamiltonian& h,
                          double threshold = kDefaultSimplifyThreshold);
PauliSum simplify(const PauliSum& terms, double threshold = kDefaultSimplifyThreshold);

/// Fermionic ladder operator on spin-orbital `mode` with the Z parity chain.
PauliSum jw_ladder(std::size_t mode, bool dagger);
/// Hard-core qubit ladder operator |1><0| (dagger) or |0><1|, no parity chain.
PauliSum qubit_ladder(std::size_t qubit, bool dagger);

/// Spin-orbital index of spatial orbital p under the alternating ordering.
inline constexpr std::size_t alpha_mode(std::size_t p) { return 2 * p; }
inline constexpr std::size_t beta_mode(std::size_t p) { return 2 * p + 1; }

/// Jordan-Wigner image of the active-space Hamiltonian, core energy included
/// as the identity term. Spatial orbital p maps to qubits 2p (alpha), 2p+1 (beta).
QubitHamiltonian jordan_wigner(const hamio::MolecularProblem& problem);

/// JW images of N, S_z and S^2 = S_- S_+ + S_z^2 + S_z on 2*n_orbitals qubits.
QubitHamiltonian number_operator(std::size_t n_qubits);
QubitHamiltonian sz_operator(std::size_t n_orbitals);
QubitHamiltonian s_squared_operator(std::size_t n_orbitals);

/// Largest |Im c| over all terms; zero for a canonically Hermitian operator.
double hermiticity_defect(const QubitHamiltonian& h);

/// Dense 2^n x 2^n matrix. Intended for oracles up to ~12 qubits.
Eigen::MatrixXcd to_dense(const PauliSum& terms, std::size_t n_qubits);
inline Eigen::MatrixXcd to_dense(const QubitHamiltonian& h) { return to_dense(h.terms, h.n_qubits); }

/// Computational basis states with n_alpha even-qubit and n_beta odd-qubit
/// excitations, ascending.
std::vector<QubitMask> sector_states(std::size_t n_orbitals, std::size_t n_alpha,
                                     std::size_t n_beta);
/// Dense Hamiltonian restricted to the given basis states (real part).
Eigen::MatrixXd sector_matrix(const QubitHamiltonian& h, const std::vector<QubitMask>& states);

/// `X0 Z3 Y5`; identity prints as `I`.
std::string to_string(const PauliTerm& term);
PauliTerm parse_term(std::string_view pauli_string, Complex coefficient = {1.0, 0.0});

/// One `<coeff> <string>` line per term; complex coefficients print as (re,im).
std::string dump(const QubitHamiltonian& h);
QubitHamiltonian parse_dump(std::string_view text, std::size_t n_qubits);

}  // namespace adaptscale::pauli
