#include "adaptscale/pools.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <limits>
#include <sstream>

#include "adaptscale/errors.hpp"

namespace adaptscale::pools {

using pauli::PauliSum;
using pauli::PauliTerm;

std::string_view to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::pauli_string: return "pauli_string";
    case OperatorKind::qubit_excitation_single: return "qubit_excitation_single";
    case OperatorKind::qubit_excitation_double: return "qubit_excitation_double";
    case OperatorKind::ceo_combined: return "ceo_combined";
  }
  return "unknown";
}

std::string_view to_string(PoolKind kind) {
  switch (kind) {
    case PoolKind::qubit: return "qubit";
    case PoolKind::qeb: return "qeb";
    case PoolKind::ceo: return "ceo";
  }
  return "unknown";
}

PoolKind parse_pool_kind(std::string_view name) {
  if (name == "qubit") return PoolKind::qubit;
  if (name == "qeb") return PoolKind::qeb;
  if (name == "ceo") return PoolKind::ceo;
  throw Error("unknown pool kind '" + std::string(name) + "' (expected qubit, qeb or ceo)");
}

namespace {

std::vector<std::size_t> bits_of(QubitMask m) {
  std::vector<std::size_t> out;
  while (m) {
    out.push_back(static_cast<std::size_t>(std::countr_zero(m)));
    m &= m - 1;
  }
  return out;
}

std::string mask_list(QubitMask m) {
  std::string s;
  for (auto q : bits_of(m)) {
    if (!s.empty()) s += ',';
    s += std::to_string(q);
  }
  return s;
}

// Q+_t1 Q+_t2 ... Q_s1 Q_s2 ... - h.c.
PauliSum excitation_terms(QubitMask source, QubitMask target) {
  auto ladder_product = [](QubitMask create, QubitMask destroy) {
    PauliSum acc{{0, 0, {1.0, 0.0}}};
    for (auto q : bits_of(create)) acc = multiply(acc, pauli::qubit_ladder(q, true));
    for (auto q : bits_of(destroy)) acc = multiply(acc, pauli::qubit_ladder(q, false));
    return acc;
  };
  PauliSum terms = ladder_product(target, source);
  for (auto t : ladder_product(source, target)) {
    t.coefficient = -t.coefficient;
    terms.push_back(t);
  }
  return pauli::simplify(terms, 1e-15);
}

// a+_t... a_s... - h.c. in the fermionic (JW) representation.
PauliSum fermionic_excitation_terms(const std::vector<std::size_t>& source,
                                    const std::vector<std::size_t>& target) {
  auto ladder_product = [](const std::vector<std::size_t>& create,
                           const std::vector<std::size_t>& destroy) {
    PauliSum acc{{0, 0, {1.0, 0.0}}};
    for (auto q : create) acc = multiply(acc, pauli::jw_ladder(q, true));
    for (auto it = destroy.rbegin(); it != destroy.rend(); ++it)
      acc = multiply(acc, pauli::jw_ladder(*it, false));
    return acc;
  };
  PauliSum terms = ladder_product(target, source);
  for (auto t : ladder_product(source, target)) {
    t.coefficient = -t.coefficient;
    terms.push_back(t);
  }
  return pauli::simplify(terms, 1e-15);
}

bool same_spin(std::size_t a, std::size_t b) { return (a & 1) == (b & 1); }

struct Excitation {
  QubitMask source;
  QubitMask target;
};

// Generalized S_z-conserving singles, one per unordered same-spin pair.
std::vector<Excitation> singles(std::size_t n_qubits) {
  std::vector<Excitation> out;
  for (std::size_t p = 0; p < n_qubits; ++p)
    for (std::size_t q = p + 1; q < n_qubits; ++q)
      if (same_spin(p, q)) out.push_back({QubitMask{1} << p, QubitMask{1} << q});
  return out;
}

// Generalized S_z-conserving doubles: for every 4-subset, the pairings whose
// two pairs carry equal alpha counts. The pair holding the lowest index is
// the source.
std::vector<Excitation> doubles(std::size_t n_qubits) {
  std::vector<Excitation> out;
  auto bit = [](std::size_t q) { return QubitMask{1} << q; };
  auto alpha_count = [](std::size_t x, std::size_t y) {
    return static_cast<int>((x & 1) == 0) + static_cast<int>((y & 1) == 0);
  };
  for (std::size_t a = 0; a < n_qubits; ++a)
    for (std::size_t b = a + 1; b < n_qubits; ++b)
      for (std::size_t c = b + 1; c < n_qubits; ++c)
        for (std::size_t d = c + 1; d < n_qubits; ++d) {
          const std::pair<std::size_t, std::size_t> pairings[3][2] = {
              {{a, b}, {c, d}}, {{a, c}, {b, d}}, {{a, d}, {b, c}}};
          for (const auto& pr : pairings) {
            if (alpha_count(pr[0].first, pr[0].second) != alpha_count(pr[1].first, pr[1].second))
              continue;
            out.push_back({bit(pr[0].first) | bit(pr[0].second),
                           bit(pr[1].first) | bit(pr[1].second)});
          }
        }
  return out;
}

void validate_sector(std::size_t n_orbitals, std::size_t n_alpha, std::size_t n_beta) {
  if (n_alpha > n_orbitals || n_beta > n_orbitals)
    throw InconsistentSector("electron counts exceed orbital count");
  if (2 * n_orbitals > pauli::kMaxQubits) throw DimensionError("too many orbitals");
}

bool operator_less(const PoolOperator& a, const PoolOperator& b) {
  const auto sa = bits_of(a.support), sb = bits_of(b.support);
  if (sa != sb) return std::lexicographical_compare(sa.begin(), sa.end(), sb.begin(), sb.end());
  if (a.kind != b.kind) return a.kind < b.kind;
  auto masks = [](const PoolOperator& op) {
    std::vector<std::pair<QubitMask, QubitMask>> m;
    for (const auto& s : op.slots)
      for (const auto& t : s.terms) m.emplace_back(t.x_mask, t.z_mask);
    return m;
  };
  return masks(a) < masks(b);
}

void finalize(OperatorPool& pool) {
  std::stable_sort(pool.operators.begin(), pool.operators.end(), operator_less);
}

}  // namespace

std::string PoolOperator::label() const {
  std::string s;
  switch (kind) {
    case OperatorKind::pauli_string:
      return "P[" + pauli::to_string(std::get<PauliRotation>(slots.front().action).string) + "]";
    case OperatorKind::qubit_excitation_single:
    case OperatorKind::qubit_excitation_double: {
      const auto& e = std::get<QubitExcitation>(slots.front().action);
      return "QE[" + mask_list(e.source) + "->" + mask_list(e.target) + "]";
    }
    case OperatorKind::ceo_combined:
      s = "CEO{";
      for (std::size_t i = 0; i < slots.size(); ++i) {
        const auto& e = std::get<QubitExcitation>(slots[i].action);
        if (i) s += ';';
        s += mask_list(e.source) + "->" + mask_list(e.target);
      }
      return s + "}";
  }
  return s;
}

CostTable CostTable::defaults() {
  CostTable t;
  t.pauli_string_per_link = 2;
  t.qubit_excitation_single = 2;
  t.qubit_excitation_double = 13;
  t.ceo_combined = 13;
  t.ceo_combined_per_extra_slot = 1;
  return t;
}

CostTable CostTable::parse(std::string_view text, CostTable t) {
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CostTableError("line " + std::to_string(line_no) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::size_t v = 0;
    try {
      std::size_t used = 0;
      const long long parsed = std::stoll(value, &used);
      if (used != value.size() || parsed < 0) throw std::invalid_argument(value);
      v = static_cast<std::size_t>(parsed);
    } catch (const std::exception&) {
      throw CostTableError("line " + std::to_string(line_no) + ": '" + value +
                           "' is not a non-negative integer");
    }
    if (key == "pauli_string_per_link") t.pauli_string_per_link = v;
    else if (key == "qubit_excitation_single") t.qubit_excitation_single = v;
    else if (key == "qubit_excitation_double") t.qubit_excitation_double = v;
    else if (key == "ceo_combined") t.ceo_combined = v;
    else if (key == "ceo_combined_per_extra_slot") t.ceo_combined_per_extra_slot = v;
    else throw CostTableError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  return t;
}

std::string CostTable::to_text() const {
  std::string s;
  auto line = [&s](const char* key, const std::optional<std::size_t>& v) {
    s += key;
    s += " = ";
    s += v ? std::to_string(*v) : std::string("unset");
    s += '\n';
  };
  line("pauli_string_per_link", pauli_string_per_link);
  line("qubit_excitation_single", qubit_excitation_single);
  line("qubit_excitation_double", qubit_excitation_double);
  line("ceo_combined", ceo_combined);
  line("ceo_combined_per_extra_slot", ceo_combined_per_extra_slot);
  return s;
}

std::size_t cnot_cost(const PoolOperator& op, const CostTable& table) {
  auto need = [&](const std::optional<std::size_t>& v) {
    if (!v) throw CostTableError("cost table has no entry for " + std::string(to_string(op.kind)));
    return *v;
  };
  switch (op.kind) {
    case OperatorKind::pauli_string: {
      const auto w = static_cast<std::size_t>(std::popcount(op.support));
      return need(table.pauli_string_per_link) * (w > 0 ? w - 1 : 0);
    }
    case OperatorKind::qubit_excitation_single: return need(table.qubit_excitation_single);
    case OperatorKind::qubit_excitation_double: return need(table.qubit_excitation_double);
    case OperatorKind::ceo_combined:
      return need(table.ceo_combined) +
             table.ceo_combined_per_extra_slot * (op.slots.size() > 0 ? op.slots.size() - 1 : 0);
  }
  throw CostTableError("unknown operator kind");
}

PoolOperator make_pauli_operator(const PauliTerm& string, const CostTable& table) {
  PoolOperator op;
  op.kind = OperatorKind::pauli_string;
  PauliTerm g = string;
  op.slots.push_back({PauliRotation{g}, {g}});
  op.support = g.support();
  op.cnot_cost = cnot_cost(op, table);
  return op;
}

PoolOperator make_excitation_operator(QubitMask source, QubitMask target, const CostTable& table) {
  if ((source & target) != 0 || std::popcount(source) != std::popcount(target) ||
      std::popcount(source) < 1 || std::popcount(source) > 2)
    throw Error("qubit excitation needs disjoint source/target of rank 1 or 2");
  PoolOperator op;
  op.kind = std::popcount(source) == 1 ? OperatorKind::qubit_excitation_single
                                       : OperatorKind::qubit_excitation_double;
  op.slots.push_back({QubitExcitation{source, target}, excitation_terms(source, target)});
  op.support = source | target;
  op.cnot_cost = cnot_cost(op, table);
  return op;
}

OperatorPool build_qubit_pool(std::size_t n_orbitals, std::size_t n_alpha, std::size_t n_beta,
                              const CostTable& table) {
  validate_sector(n_orbitals, n_alpha, n_beta);
  const std::size_t nq = 2 * n_orbitals;
  OperatorPool pool{{}, PoolKind::qubit, nq};
  std::set<std::pair<QubitMask, QubitMask>> seen;
  auto add_strings = [&](const PauliSum& fermionic) {
    for (const auto& t : fermionic) {
      // Drop the parity chain: keep only factors on the excitation's qubits.
      const QubitMask x = t.x_mask;
      const QubitMask z = t.z_mask & t.x_mask;
      if (!seen.insert({x, z}).second) continue;
      pool.operators.push_back(make_pauli_operator({x, z, {0.0, 1.0}}, table));
    }
  };
  for (const auto& e : singles(nq))
    add_strings(fermionic_excitation_terms(bits_of(e.source), bits_of(e.target)));
  for (const auto& e : doubles(nq))
    add_strings(fermionic_excitation_terms(bits_of(e.source), bits_of(e.target)));
  finalize(pool);
  return pool;
}

OperatorPool build_qeb_pool(std::size_t n_orbitals, std::size_t n_alpha, std::size_t n_beta,
                            const CostTable& table) {
  validate_sector(n_orbitals, n_alpha, n_beta);
  const std::size_t nq = 2 * n_orbitals;
  OperatorPool pool{{}, PoolKind::qeb, nq};
  for (const auto& e : singles(nq))
    pool.operators.push_back(make_excitation_operator(e.source, e.target, table));
  for (const auto& e : doubles(nq))
    pool.operators.push_back(make_excitation_operator(e.source, e.target, table));
  finalize(pool);
  return pool;
}

OperatorPool build_ceo_pool(std::size_t n_orbitals, std::size_t n_alpha, std::size_t n_beta,
                            const CostTable& table) {
  validate_sector(n_orbitals, n_alpha, n_beta);
  const std::size_t nq = 2 * n_orbitals;
  OperatorPool pool{{}, PoolKind::ceo, nq};
  for (const auto& e : singles(nq))
    pool.operators.push_back(make_excitation_operator(e.source, e.target, table));
  std::map<QubitMask, std::vector<Excitation>> groups;
  for (const auto& e : doubles(nq)) groups[e.source | e.target].push_back(e);
  for (const auto& [support, members] : groups) {
    PoolOperator op;
    op.kind = OperatorKind::ceo_combined;
    op.support = support;
    for (const auto& e : members)
      op.slots.push_back({QubitExcitation{e.source, e.target}, excitation_terms(e.source, e.target)});
    op.cnot_cost = cnot_cost(op, table);
    pool.operators.push_back(std::move(op));
  }
  finalize(pool);
  return pool;
}

OperatorPool build_pool(PoolKind kind, std::size_t n_orbitals, std::size_t n_alpha,
                        std::size_t n_beta, const CostTable& table) {
  switch (kind) {
    case PoolKind::qubit: return build_qubit_pool(n_orbitals, n_alpha, n_beta, table);
    case PoolKind::qeb: return build_qeb_pool(n_orbitals, n_alpha, n_beta, table);
    case PoolKind::ceo: return build_ceo_pool(n_orbitals, n_alpha, n_beta, table);
  }
  throw Error("unknown pool kind");
}

OperatorPool random_subpool(const OperatorPool& pool, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw Error("pool fraction must lie in (0, 1]");
  const std::size_t n = pool.size();
  // The small slack keeps e.g. 0.1 * 570 from rounding up to 58.
  const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  if (n == 0 || keep == 0) throw EmptySubpool("random subpool would be empty");

  // Partial Fisher-Yates with rejection sampling on raw mt19937_64 output;
  // std::uniform_int_distribution is implementation-defined.
  std::mt19937_64 rng(seed);
  auto bounded = [&rng](std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do r = rng(); while (r >= limit);
    return r % bound;
  };
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(bounded(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  OperatorPool out{{}, pool.kind_label, pool.n_qubits};
  out.operators.reserve(keep);
  for (auto i : idx) out.operators.push_back(pool.operators[i]);
  return out;
}

}  // namespace adaptscale::pools
