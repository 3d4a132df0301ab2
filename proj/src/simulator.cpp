#include "adaptscale/simulator.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>

#include "adaptscale/errors.hpp"

namespace adaptscale::sim {

using pools::PauliRotation;
using pools::PoolOperator;
using pools::QubitExcitation;
using pools::SlotGenerator;

namespace {

inline bool odd_parity(QubitMask m) { return (std::popcount(m) & 1) != 0; }

void require_same_size(const Statevector& a, const Statevector& b) {
  if (a.dimension() != b.dimension()) throw DimensionError("statevector dimensions differ");
}

void require_fits(const Statevector& s, QubitMask support) {
  if (s.n_qubits() < 64 && (support >> s.n_qubits()) != 0)
    throw DimensionError("operator acts outside the register");
}

}  // namespace

Statevector::Statevector(std::size_t n_qubits) : n_qubits_(n_qubits) {
  if (n_qubits > 30) throw DimensionError("statevector too large");
  amplitudes_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
}

double Statevector::norm() const {
  double s = 0.0;
  for (const auto& a : amplitudes_) s += std::norm(a);
  return std::sqrt(s);
}

Complex inner_product(const Statevector& a, const Statevector& b) {
  require_same_size(a, b);
  Complex s{0.0, 0.0};
  for (std::size_t i = 0; i < a.dimension(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

Statevector prepare_reference(QubitMask occupation, std::size_t n_qubits) {
  Statevector s(n_qubits);
  if (n_qubits < 64 && (occupation >> n_qubits) != 0)
    throw DimensionError("reference occupation outside the register");
  s[occupation] = 1.0;
  return s;
}

CompiledOperator::CompiledOperator(const pauli::QubitHamiltonian& h) : n_qubits_(h.n_qubits) {
  if (n_qubits_ > 30) throw DimensionError("operator too large");
  const std::size_t dim = std::size_t{1} << n_qubits_;
  diagonal_.assign(dim, 0.0);
  std::map<QubitMask, Group> by_x;
  for (const auto& t : h.terms) {
    if (n_qubits_ < 64 && (t.support() >> n_qubits_) != 0)
      throw DimensionError("term acts outside the register");
    if (t.x_mask == 0) {
      const double c = t.coefficient.real();
      for (std::size_t b = 0; b < dim; ++b) diagonal_[b] += odd_parity(t.z_mask & b) ? -c : c;
      continue;
    }
    auto& g = by_x[t.x_mask];
    g.x = t.x_mask;
    g.z.push_back(t.z_mask);
    g.weight.push_back(t.coefficient * pauli::i_power(std::popcount(t.x_mask & t.z_mask)));
  }
  groups_.reserve(by_x.size());
  for (auto& [x, g] : by_x) groups_.push_back(std::move(g));
}

void CompiledOperator::apply(const Statevector& in, Statevector& out) const {
  if (in.n_qubits() != n_qubits_) throw DimensionError("statevector does not match operator");
  if (out.n_qubits() != n_qubits_ || out.dimension() != in.dimension()) out = Statevector(n_qubits_);
  const std::size_t dim = in.dimension();
  for (std::size_t c = 0; c < dim; ++c) out[c] = diagonal_[c] * in[c];
  for (const auto& g : groups_) {
    const std::size_t nz = g.z.size();
    for (std::size_t c = 0; c < dim; ++c) {
      const std::size_t src = c ^ g.x;
      Complex acc{0.0, 0.0};
      for (std::size_t k = 0; k < nz; ++k) {
        if (odd_parity(g.z[k] & src)) acc -= g.weight[k];
        else acc += g.weight[k];
      }
      out[c] += acc * in[src];
    }
  }
}

void apply_slot_exponential(Statevector& state, const SlotGenerator& slot, double theta) {
  auto amps = state.amplitudes();
  const std::size_t dim = amps.size();
  if (const auto* rot = std::get_if<PauliRotation>(&slot.action)) {
    const auto& p = rot->string;
    require_fits(state, p.support());
    // exp(theta * i r P) = cos(r theta) + i sin(r theta) P
    const double r = p.coefficient.imag();
    const double cs = std::cos(r * theta), sn = std::sin(r * theta);
    const Complex isn{0.0, sn};
    if (p.x_mask == 0) {
      for (std::size_t b = 0; b < dim; ++b)
        amps[b] *= cs + isn * pauli::basis_action_phase(0, p.z_mask, b);
      return;
    }
    for (std::size_t b = 0; b < dim; ++b) {
      const std::size_t partner = b ^ p.x_mask;
      if (partner < b) continue;
      const Complex u = amps[b], v = amps[partner];
      amps[b] = cs * u + isn * pauli::basis_action_phase(p.x_mask, p.z_mask, partner) * v;
      amps[partner] = cs * v + isn * pauli::basis_action_phase(p.x_mask, p.z_mask, b) * u;
    }
    return;
  }
  const auto& e = std::get<QubitExcitation>(slot.action);
  const QubitMask support = e.source | e.target;
  require_fits(state, support);
  const double cs = std::cos(theta), sn = std::sin(theta);
  for (std::size_t b = 0; b < dim; ++b) {
    if ((b & support) != e.source) continue;
    const std::size_t t = b ^ support;
    const Complex u = amps[b], v = amps[t];
    amps[b] = cs * u - sn * v;
    amps[t] = sn * u + cs * v;
  }
}

void apply_generator_exponential(Statevector& state, const PoolOperator& op,
                                 std::span<const double> thetas) {
  if (thetas.size() != op.slots.size())
    throw ArityError("operator has " + std::to_string(op.slots.size()) + " slots, got " +
                     std::to_string(thetas.size()) + " parameters");
  for (std::size_t s = 0; s < op.slots.size(); ++s) apply_slot_exponential(state, op.slots[s], thetas[s]);
}

Complex generator_matrix_element(const Statevector& phi, const SlotGenerator& slot,
                                 const Statevector& psi) {
  require_same_size(phi, psi);
  const std::size_t dim = psi.dimension();
  Complex acc{0.0, 0.0};
  if (const auto* rot = std::get_if<PauliRotation>(&slot.action)) {
    const auto& p = rot->string;
    require_fits(psi, p.support());
    for (std::size_t b = 0; b < dim; ++b) {
      const std::size_t src = b ^ p.x_mask;
      acc += std::conj(phi[b]) * pauli::basis_action_phase(p.x_mask, p.z_mask, src) * psi[src];
    }
    return acc * p.coefficient;
  }
  const auto& e = std::get<QubitExcitation>(slot.action);
  const QubitMask support = e.source | e.target;
  require_fits(psi, support);
  for (std::size_t b = 0; b < dim; ++b) {
    if ((b & support) != e.source) continue;
    const std::size_t t = b ^ support;
    // G|s> = |t>, G|t> = -|s>
    acc += std::conj(phi[t]) * psi[b] - std::conj(phi[b]) * psi[t];
  }
  return acc;
}

double expectation(const Statevector& state, const CompiledOperator& h) {
  Statevector hpsi;
  h.apply(state, hpsi);
  const Complex e = inner_product(state, hpsi);
  if (std::abs(e.imag()) > 1e-10 * std::max(1.0, std::abs(e.real())))
    throw NumericalError("expectation value has an imaginary part");
  return e.real();
}

double expectation(const Statevector& state, const pauli::QubitHamiltonian& h) {
  return expectation(state, CompiledOperator(h));
}

std::vector<double> slot_gradients(const Statevector& psi, const Statevector& phi,
                                   const PoolOperator& op) {
  std::vector<double> g;
  g.reserve(op.slots.size());
  for (const auto& slot : op.slots) g.push_back(2.0 * generator_matrix_element(phi, slot, psi).real());
  return g;
}

std::vector<double> pool_gradients(const Statevector& psi, const CompiledOperator& h,
                                   const pools::OperatorPool& pool) {
  Statevector phi;
  h.apply(psi, phi);
  std::vector<double> out;
  out.reserve(pool.size());
  for (const auto& op : pool.operators) {
    double sq = 0.0;
    for (double g : slot_gradients(psi, phi, op)) sq += g * g;
    out.push_back(std::sqrt(sq));
  }
  return out;
}

std::vector<double> pool_gradients(const Statevector& psi, const pauli::QubitHamiltonian& h,
                                   const pools::OperatorPool& pool) {
  return pool_gradients(psi, CompiledOperator(h), pool);
}

double spin_squared(const Statevector& state, std::size_t n_orbitals) {
  if (state.n_qubits() % 2 != 0 || state.n_qubits() != 2 * n_orbitals)
    throw OrderingError("spin expectation needs 2 qubits per spatial orbital");
  return expectation(state, pauli::s_squared_operator(n_orbitals));
}

void AnsatzState::append(const PoolOperator& op, std::size_t pool_index) {
  structure.push_back({op, pool_index, parameters.size()});
  parameters.resize(parameters.size() + op.slots.size(), 0.0);
}

Statevector prepare_state(const AnsatzState& ansatz, std::span<const double> parameters) {
  if (parameters.size() != ansatz.parameter_count())
    throw ArityError("parameter vector length does not match the ansatz");
  Statevector s = prepare_reference(ansatz.reference_occupation, ansatz.n_qubits);
  for (const auto& entry : ansatz.structure)
    apply_generator_exponential(s, entry.op,
                                parameters.subspan(entry.first_parameter, entry.op.slots.size()));
  return s;
}

Statevector prepare_state(const AnsatzState& ansatz) {
  return prepare_state(ansatz, ansatz.parameters);
}

EnergyGradient energy_and_gradient(const AnsatzState& ansatz, std::span<const double> parameters,
                                   const CompiledOperator& h) {
  Statevector psi = prepare_state(ansatz, parameters);
  Statevector lambda;
  h.apply(psi, lambda);
  EnergyGradient out;
  const Complex e = inner_product(psi, lambda);
  out.energy = e.real();
  out.gradient.assign(parameters.size(), 0.0);
  for (auto it = ansatz.structure.rbegin(); it != ansatz.structure.rend(); ++it) {
    const auto& op = it->op;
    for (std::size_t s = 0; s < op.slots.size(); ++s)
      out.gradient[it->first_parameter + s] =
          2.0 * generator_matrix_element(lambda, op.slots[s], psi).real();
    for (std::size_t s = op.slots.size(); s-- > 0;) {
      const double theta = -parameters[it->first_parameter + s];
      apply_slot_exponential(psi, op.slots[s], theta);
      apply_slot_exponential(lambda, op.slots[s], theta);
    }
  }
  return out;
}

namespace {
constexpr char kMagic[8] = {'A', 'D', 'S', 'C', 'S', 'V', '0', '1'};
static_assert(std::endian::native == std::endian::little, "dump format assumes little-endian host");
}  // namespace

void write_statevector(std::ostream& out, const Statevector& state) {
  out.write(kMagic, sizeof kMagic);
  const std::uint64_t n = state.n_qubits();
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  const auto amps = state.amplitudes();
  out.write(reinterpret_cast<const char*>(amps.data()),
            static_cast<std::streamsize>(amps.size() * sizeof(Complex)));
  if (!out) throw Error("failed to write statevector");
}

Statevector read_statevector(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw ParseError("not a statevector dump", 0);
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || n > 30) throw ParseError("bad statevector header", 0);
  Statevector s(static_cast<std::size_t>(n));
  auto amps = s.amplitudes();
  in.read(reinterpret_cast<char*>(amps.data()),
          static_cast<std::streamsize>(amps.size() * sizeof(Complex)));
  if (!in) throw ParseError("truncated statevector dump", 0);
  return s;
}

}  // namespace adaptscale::sim
