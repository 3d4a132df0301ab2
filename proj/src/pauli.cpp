#include "adaptscale/pauli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <unordered_map>

#include "adaptscale/errors.hpp"

namespace adaptscale::pauli {

namespace {

struct MaskPairHash {
  std::size_t operator()(const std::pair<QubitMask, QubitMask>& k) const noexcept {
    std::uint64_t h = k.first * 0x9E3779B97F4A7C15ull;
    h ^= k.second + 0x7F4A7C159E3779B9ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

using Accumulator = std::unordered_map<std::pair<QubitMask, QubitMask>, Complex, MaskPairHash>;

void accumulate(Accumulator& acc, const PauliTerm& t) {
  acc[{t.x_mask, t.z_mask}] += t.coefficient;
}

PauliSum drain(const Accumulator& acc, double threshold) {
  PauliSum out;
  out.reserve(acc.size());
  for (const auto& [key, c] : acc) {
    if (std::abs(c) > threshold) out.push_back({key.first, key.second, c});
  }
  std::sort(out.begin(), out.end(), [](const PauliTerm& a, const PauliTerm& b) {
    return a.x_mask != b.x_mask ? a.x_mask < b.x_mask : a.z_mask < b.z_mask;
  });
  return out;
}

void check_qubit(std::size_t q) {
  if (q >= kMaxQubits) throw DimensionError("qubit index exceeds 64-bit mask capacity");
}

}  // namespace

PauliTerm pauli_product(const PauliTerm& a, const PauliTerm& b) {
  const QubitMask x = a.x_mask ^ b.x_mask;
  const QubitMask z = a.z_mask ^ b.z_mask;
  const int k = std::popcount(a.x_mask & a.z_mask) + std::popcount(b.x_mask & b.z_mask) -
                std::popcount(x & z) + 2 * std::popcount(a.z_mask & b.x_mask);
  return {x, z, a.coefficient * b.coefficient * i_power(k)};
}

PauliSum multiply(const PauliSum& a, const PauliSum& b) {
  PauliSum out;
  out.reserve(a.size() * b.size());
  for (const auto& ta : a)
    for (const auto& tb : b) out.push_back(pauli_product(ta, tb));
  return out;
}

PauliSum simplify(const PauliSum& terms, double threshold) {
  Accumulator acc;
  acc.reserve(terms.size());
  for (const auto& t : terms) accumulate(acc, t);
  return drain(acc, threshold);
}

QubitHamiltonian simplify(const QubitHamiltonian& h, double threshold) {
  return {h.n_qubits, simplify(h.terms, threshold)};
}

PauliSum jw_ladder(std::size_t mode, bool dagger) {
  check_qubit(mode);
  const QubitMask bit = QubitMask{1} << mode;
  const QubitMask chain = bit - 1;
  // a^dagger = Z_chain (X - iY)/2, a = Z_chain (X + iY)/2
  return {{bit, chain, {0.5, 0.0}}, {bit, chain | bit, {0.0, dagger ? -0.5 : 0.5}}};
}

PauliSum qubit_ladder(std::size_t qubit, bool dagger) {
  check_qubit(qubit);
  const QubitMask bit = QubitMask{1} << qubit;
  return {{bit, 0, {0.5, 0.0}}, {bit, bit, {0.0, dagger ? -0.5 : 0.5}}};
}

QubitHamiltonian jordan_wigner(const hamio::MolecularProblem& problem) {
  const std::size_t n = problem.n_orbitals;
  if (n == 0) throw EmptyProblem("problem has no orbitals");
  const std::size_t nq = 2 * n;
  if (nq > kMaxQubits) throw DimensionError("too many orbitals for 64-qubit masks");

  std::vector<PauliSum> create(nq), annihilate(nq);
  for (std::size_t m = 0; m < nq; ++m) {
    create[m] = jw_ladder(m, true);
    annihilate[m] = jw_ladder(m, false);
  }

  Accumulator acc;
  accumulate(acc, {0, 0, {problem.core_energy, 0.0}});

  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) {
      const double v = problem.h(p, q);
      if (v == 0.0) continue;
      for (std::size_t s = 0; s < 2; ++s) {
        for (auto t : multiply(create[2 * p + s], annihilate[2 * q + s])) {
          t.coefficient *= v;
          accumulate(acc, t);
        }
      }
    }

  // 1/2 sum (pq|rs) a+_{p s1} a+_{r s2} a_{s s2} a_{q s1}
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q)
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t s = 0; s < n; ++s) {
          const double v = problem.two_body.chem(p, q, r, s);
          if (v == 0.0) continue;
          for (std::size_t s1 = 0; s1 < 2; ++s1)
            for (std::size_t s2 = 0; s2 < 2; ++s2) {
              const std::size_t P = 2 * p + s1, Q = 2 * q + s1, R = 2 * r + s2, S = 2 * s + s2;
              if (P == R || Q == S) continue;
              const auto left = multiply(create[P], create[R]);
              const auto right = multiply(annihilate[S], annihilate[Q]);
              for (auto t : multiply(left, right)) {
                t.coefficient *= 0.5 * v;
                accumulate(acc, t);
              }
            }
        }

  QubitHamiltonian h{nq, drain(acc, 0.0)};
  for (auto& t : h.terms) {
    if (std::abs(t.coefficient.imag()) > 1e-10)
      throw NumericalError("Jordan-Wigner image is not Hermitian");
    t.coefficient = {t.coefficient.real(), 0.0};
  }
  return simplify(h, kDefaultSimplifyThreshold);
}

QubitHamiltonian number_operator(std::size_t n_qubits) {
  PauliSum terms;
  for (std::size_t m = 0; m < n_qubits; ++m) {
    for (auto t : multiply(jw_ladder(m, true), jw_ladder(m, false))) terms.push_back(t);
  }
  return {n_qubits, simplify(terms, 0.0)};
}

QubitHamiltonian sz_operator(std::size_t n_orbitals) {
  PauliSum terms;
  for (std::size_t p = 0; p < n_orbitals; ++p) {
    for (auto t : multiply(jw_ladder(alpha_mode(p), true), jw_ladder(alpha_mode(p), false))) {
      t.coefficient *= 0.5;
      terms.push_back(t);
    }
    for (auto t : multiply(jw_ladder(beta_mode(p), true), jw_ladder(beta_mode(p), false))) {
      t.coefficient *= -0.5;
      terms.push_back(t);
    }
  }
  return {2 * n_orbitals, simplify(terms, 0.0)};
}

QubitHamiltonian s_squared_operator(std::size_t n_orbitals) {
  PauliSum s_plus, s_minus;
  for (std::size_t p = 0; p < n_orbitals; ++p) {
    for (auto t : multiply(jw_ladder(alpha_mode(p), true), jw_ladder(beta_mode(p), false)))
      s_plus.push_back(t);
    for (auto t : multiply(jw_ladder(beta_mode(p), true), jw_ladder(alpha_mode(p), false)))
      s_minus.push_back(t);
  }
  s_plus = simplify(s_plus, 0.0);
  s_minus = simplify(s_minus, 0.0);
  const auto sz = sz_operator(n_orbitals).terms;
  PauliSum terms = multiply(s_minus, s_plus);
  for (const auto& t : multiply(sz, sz)) terms.push_back(t);
  for (const auto& t : sz) terms.push_back(t);
  QubitHamiltonian h{2 * n_orbitals, simplify(terms, 1e-15)};
  for (auto& t : h.terms) t.coefficient = {t.coefficient.real(), 0.0};
  return h;
}

double hermiticity_defect(const QubitHamiltonian& h) {
  double worst = 0.0;
  for (const auto& t : h.terms) worst = std::max(worst, std::abs(t.coefficient.imag()));
  return worst;
}

Eigen::MatrixXcd to_dense(const PauliSum& terms, std::size_t n_qubits) {
  if (n_qubits > 14) throw DimensionError("dense matrix requested for more than 14 qubits");
  const std::size_t dim = std::size_t{1} << n_qubits;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& t : terms)
    for (QubitMask b = 0; b < dim; ++b)
      m(b ^ t.x_mask, b) += t.coefficient * basis_action_phase(t.x_mask, t.z_mask, b);
  return m;
}

std::vector<QubitMask> sector_states(std::size_t n_orbitals, std::size_t n_alpha,
                                     std::size_t n_beta) {
  QubitMask alpha_bits = 0;
  for (std::size_t p = 0; p < n_orbitals; ++p) alpha_bits |= QubitMask{1} << alpha_mode(p);
  const QubitMask beta_bits = alpha_bits << 1;
  std::vector<QubitMask> out;
  const QubitMask dim = QubitMask{1} << (2 * n_orbitals);
  for (QubitMask b = 0; b < dim; ++b) {
    if (static_cast<std::size_t>(std::popcount(b & alpha_bits)) == n_alpha &&
        static_cast<std::size_t>(std::popcount(b & beta_bits)) == n_beta)
      out.push_back(b);
  }
  return out;
}

Eigen::MatrixXd sector_matrix(const QubitHamiltonian& h, const std::vector<QubitMask>& states) {
  std::unordered_map<QubitMask, std::size_t> index;
  for (std::size_t i = 0; i < states.size(); ++i) index[states[i]] = i;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(states.size(), states.size());
  for (const auto& t : h.terms)
    for (std::size_t col = 0; col < states.size(); ++col) {
      auto it = index.find(states[col] ^ t.x_mask);
      if (it == index.end()) continue;
      m(it->second, col) += t.coefficient * basis_action_phase(t.x_mask, t.z_mask, states[col]);
    }
  return m.real();
}

std::string to_string(const PauliTerm& term) {
  std::string out;
  for (std::size_t q = 0; q < kMaxQubits; ++q) {
    const bool x = (term.x_mask >> q) & 1;
    const bool z = (term.z_mask >> q) & 1;
    if (!x && !z) continue;
    if (!out.empty()) out += ' ';
    out += x ? (z ? 'Y' : 'X') : 'Z';
    out += std::to_string(q);
  }
  return out.empty() ? "I" : out;
}

PauliTerm parse_term(std::string_view s, Complex coefficient) {
  PauliTerm t{0, 0, coefficient};
  std::istringstream in{std::string(s)};
  for (std::string tok; in >> tok;) {
    if (tok == "I") continue;
    if (tok.size() < 2) throw Error("malformed Pauli factor '" + tok + "'");
    char* end = nullptr;
    const unsigned long q = std::strtoul(tok.c_str() + 1, &end, 10);
    if (*end != '\0') throw Error("malformed Pauli factor '" + tok + "'");
    check_qubit(q);
    const QubitMask bit = QubitMask{1} << q;
    if ((t.x_mask | t.z_mask) & bit) throw Error("repeated qubit in Pauli string '" + tok + "'");
    switch (tok[0]) {
      case 'X': t.x_mask |= bit; break;
      case 'Y': t.x_mask |= bit; t.z_mask |= bit; break;
      case 'Z': t.z_mask |= bit; break;
      default: throw Error("unknown Pauli letter in '" + tok + "'");
    }
  }
  return t;
}

std::string dump(const QubitHamiltonian& h) {
  std::string out;
  char buf[96];
  for (const auto& t : h.terms) {
    if (t.coefficient.imag() == 0.0)
      std::snprintf(buf, sizeof buf, "%.17g ", t.coefficient.real());
    else
      std::snprintf(buf, sizeof buf, "(%.17g,%.17g) ", t.coefficient.real(), t.coefficient.imag());
    out += buf;
    out += to_string(t);
    out += '\n';
  }
  return out;
}

QubitHamiltonian parse_dump(std::string_view text, std::size_t n_qubits) {
  QubitHamiltonian h{n_qubits, {}};
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string coeff;
    ls >> coeff;
    Complex c;
    if (!coeff.empty() && coeff.front() == '(') {
      double re = 0, im = 0;
      if (std::sscanf(coeff.c_str(), "(%lf,%lf)", &re, &im) != 2)
        throw ParseError("malformed complex coefficient", line_no);
      c = {re, im};
    } else {
      char* end = nullptr;
      const double re = std::strtod(coeff.c_str(), &end);
      if (coeff.empty() || *end != '\0') throw ParseError("malformed coefficient", line_no);
      c = {re, 0.0};
    }
    std::string rest;
    std::getline(ls, rest);
    auto t = parse_term(rest, c);
    if (n_qubits < kMaxQubits && (t.support() >> n_qubits) != 0)
      throw ParseError("Pauli factor beyond n_qubits", line_no);
    h.terms.push_back(t);
  }
  return h;
}

}  // namespace adaptscale::pauli
