#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "adaptscale/pauli.hpp"

namespace adaptscale::pools {

using pauli::QubitMask;

enum class OperatorKind { pauli_string, qubit_excitation_single, qubit_excitation_double, ceo_combined };
enum class PoolKind { qubit, qeb, ceo };

std::string_view to_string(OperatorKind kind);
std::string_view to_string(PoolKind kind);
PoolKind parse_pool_kind(std::string_view name);

/// Generator i*r*P for a single Pauli string P; `string.coefficient` holds i*r.
struct PauliRotation {
  pauli::PauliTerm string;
};

/// Q+_target Q_source - h.c. on hard-core qubit ladders (no parity strings).
/// Maps the local pattern `source` (occupied) to `target` and back with a
/// minus sign; G^3 = -G on its support.
struct QubitExcitation {
  QubitMask source = 0;
  QubitMask target = 0;
};

/// One independently parametrized anti-Hermitian generator.
struct SlotGenerator {
  std::variant<PauliRotation, QubitExcitation> action;
  /// The same generator expanded in the Pauli basis (purely imaginary coefficients).
  pauli::PauliSum terms;
};

struct PoolOperator {
  OperatorKind kind = OperatorKind::pauli_string;
  std::vector<SlotGenerator> slots;
  QubitMask support = 0;
  std::size_t cnot_cost = 0;

  std::size_t slot_count() const noexcept { return slots.size(); }
  std::size_t param_cost() const noexcept { return slots.size(); }
  std::string label() const;
};

struct OperatorPool {
  std::vector<PoolOperator> operators;
  PoolKind kind_label = PoolKind::qeb;
  std::size_t n_qubits = 0;

  std::size_t size() const noexcept { return operators.size(); }
};

/// CNOT counts per operator kind. Unset entries make cnot_cost() throw.
struct CostTable {
  std::optional<std::size_t> pauli_string_per_link;  // weight w costs per_link * (w - 1)
  std::optional<std::size_t> qubit_excitation_single;
  std::optional<std::size_t> qubit_excitation_double;
  std::optional<std::size_t> ceo_combined;  // first slot
  std::size_t ceo_combined_per_extra_slot = 1;

  static CostTable defaults();
  /// Overrides entries from `key = value` lines; `#` starts a comment.
  static CostTable parse(std::string_view text, CostTable base = defaults());
  std::string to_text() const;
};

std::size_t cnot_cost(const PoolOperator& op, const CostTable& table);

PoolOperator make_pauli_operator(const pauli::PauliTerm& string, const CostTable& table);
PoolOperator make_excitation_operator(QubitMask source, QubitMask target, const CostTable& table);

/// Individual Pauli strings from JW-expanded singles and doubles with the
/// parity Z-chains dropped; each string is its own single-slot operator.
OperatorPool build_qubit_pool(std::size_t n_orbitals, std::size_t n_alpha, std::size_t n_beta,
                              const CostTable& table = CostTable::defaults());
/// Single and double qubit excitations over all S_z-conserving spin-orbital
/// pairs and quadruples.
OperatorPool build_qeb_pool(std::size_t n_orbitals, std::size_t n_alpha, std::size_t n_beta,
                            const CostTable& table = CostTable::defaults());
/// QEB doubles grouped by 4-qubit support into multi-slot operators with one
/// free parameter per constituent; QEB singles carried over unchanged.
OperatorPool build_ceo_pool(std::size_t n_orbitals, std::size_t n_alpha, std::size_t n_beta,
                            const CostTable& table = CostTable::defaults());
OperatorPool build_pool(PoolKind kind, std::size_t n_orbitals, std::size_t n_alpha,
                        std::size_t n_beta, const CostTable& table = CostTable::defaults());

/// Uniform sample without replacement of ceil(fraction * size) entries, kept
/// in pool order. Reproducible for a fixed seed on every platform.
OperatorPool random_subpool(const OperatorPool& pool, double fraction, std::uint64_t seed);

}  // namespace adaptscale::pools
