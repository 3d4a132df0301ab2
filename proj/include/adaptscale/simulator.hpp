#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "adaptscale/pauli.hpp"
#include "adaptscale/pools.hpp"

namespace adaptscale::sim {

using pauli::Complex;
using pauli::QubitMask;

/// Dense amplitudes over 2^n computational basis states; basis index bit q
/// is the occupation of qubit q.
class Statevector {
 public:
  Statevector() = default;
  explicit Statevector(std::size_t n_qubits);

  std::size_t n_qubits() const noexcept { return n_qubits_; }
  std::size_t dimension() const noexcept { return amplitudes_.size(); }
  std::span<Complex> amplitudes() noexcept { return amplitudes_; }
  std::span<const Complex> amplitudes() const noexcept { return amplitudes_; }
  Complex& operator[](std::size_t i) { return amplitudes_[i]; }
  const Complex& operator[](std::size_t i) const { return amplitudes_[i]; }

  double norm() const;

 private:
  std::size_t n_qubits_ = 0;
  std::vector<Complex> amplitudes_;
};

/// <a|b> with a fixed-order summation independent of thread count.
Complex inner_product(const Statevector& a, const Statevector& b);

Statevector prepare_reference(QubitMask occupation, std::size_t n_qubits);

/// Qubit Hamiltonian regrouped by X-mask for repeated application.
class CompiledOperator {
 public:
  CompiledOperator() = default;
  explicit CompiledOperator(const pauli::QubitHamiltonian& h);

  std::size_t n_qubits() const noexcept { return n_qubits_; }
  /// out = H in. `out` is resized as needed.
  void apply(const Statevector& in, Statevector& out) const;

 private:
  struct Group {
    QubitMask x = 0;
    std::vector<QubitMask> z;
    std::vector<Complex> weight;  // coefficient * i^{|x&z|}
  };
  std::size_t n_qubits_ = 0;
  std::vector<double> diagonal_;
  std::vector<Group> groups_;
};

/// state <- exp(sum_s theta_s A_s) state, exact. The slots of one operator act
/// on disjoint pairs of basis states, so the product of slot exponentials is
/// the exponential of the sum.
void apply_generator_exponential(Statevector& state, const pools::PoolOperator& op,
                                 std::span<const double> thetas);
void apply_slot_exponential(Statevector& state, const pools::SlotGenerator& slot, double theta);

/// <phi| A |psi> for one slot generator.
Complex generator_matrix_element(const Statevector& phi, const pools::SlotGenerator& slot,
                                 const Statevector& psi);

double expectation(const Statevector& state, const CompiledOperator& h);
double expectation(const Statevector& state, const pauli::QubitHamiltonian& h);

/// Signed derivatives dE/dtheta_s at theta = 0 for each slot of `op`, given
/// phi = H psi.
std::vector<double> slot_gradients(const Statevector& psi, const Statevector& phi,
                                   const pools::PoolOperator& op);

/// Screening gradient per pool entry: |2 Re<psi|H A|psi>| for single-slot
/// entries, Euclidean norm of the slot derivatives for multi-slot entries.
std::vector<double> pool_gradients(const Statevector& psi, const CompiledOperator& h,
                                   const pools::OperatorPool& pool);
std::vector<double> pool_gradients(const Statevector& psi, const pauli::QubitHamiltonian& h,
                                   const pools::OperatorPool& pool);

/// <S^2> with S^2 = S_- S_+ + S_z^2 + S_z under the alternating ordering.
double spin_squared(const Statevector& state, std::size_t n_orbitals);

struct AnsatzEntry {
  pools::PoolOperator op;
  std::size_t pool_index = 0;
  std::size_t first_parameter = 0;
};

struct AnsatzState {
  std::size_t n_qubits = 0;
  QubitMask reference_occupation = 0;
  std::vector<AnsatzEntry> structure;
  std::vector<double> parameters;

  std::size_t parameter_count() const noexcept { return parameters.size(); }
  /// Appends `op` with its new parameters set to zero.
  void append(const pools::PoolOperator& op, std::size_t pool_index);
};

Statevector prepare_state(const AnsatzState& ansatz);
Statevector prepare_state(const AnsatzState& ansatz, std::span<const double> parameters);

struct EnergyGradient {
  double energy = 0.0;
  std::vector<double> gradient;
};

/// Energy and exact gradient by one forward replay plus one backward sweep
/// carrying psi and lambda = H psi.
EnergyGradient energy_and_gradient(const AnsatzState& ansatz, std::span<const double> parameters,
                                   const CompiledOperator& h);

/// Binary dump: 8-byte magic "ADSCSV01", uint64 n_qubits, then 2^n
/// little-endian (re, im) float64 pairs.
void write_statevector(std::ostream& out, const Statevector& state);
Statevector read_statevector(std::istream& in);

}  // namespace adaptscale::sim
