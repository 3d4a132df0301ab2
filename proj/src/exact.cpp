#include "adaptscale/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <unordered_map>

#include <Eigen/Eigenvalues>

namespace adaptscale::exact {

namespace {

using SpinOrbitalMask = pauli::QubitMask;

// Jordan-Wigner sign of a ladder operator on `mode` acting on `mask`.
inline int parity_below(SpinOrbitalMask mask, std::size_t mode) {
  const SpinOrbitalMask below = (SpinOrbitalMask{1} << mode) - 1;
  return (std::popcount(mask & below) & 1) ? -1 : 1;
}

// Applies a_q then a+_p; returns 0 when annihilated.
inline int excite(SpinOrbitalMask& mask, std::size_t p, std::size_t q) {
  const SpinOrbitalMask bq = SpinOrbitalMask{1} << q, bp = SpinOrbitalMask{1} << p;
  if (!(mask & bq)) return 0;
  int sign = parity_below(mask, q);
  mask ^= bq;
  if (mask & bp) return 0;
  sign *= parity_below(mask, p);
  mask |= bp;
  return sign;
}

OrbitalMask spread(OrbitalMask m, unsigned offset) {
  SpinOrbitalMask out = 0;
  for (unsigned p = 0; m; ++p, m >>= 1)
    if (m & 1) out |= SpinOrbitalMask{1} << (2 * p + offset);
  return out;
}

std::vector<OrbitalMask> strings(std::size_t n, std::size_t k) {
  std::vector<OrbitalMask> out;
  if (k > n) return out;
  if (k == 0) return {0};
  // Gosper's hack walks k-subsets in ascending numeric order.
  OrbitalMask m = (OrbitalMask{1} << k) - 1;
  const OrbitalMask limit = OrbitalMask{1} << n;
  while (m < limit) {
    out.push_back(m);
    const OrbitalMask c = m & (~m + 1);
    const OrbitalMask r = m + c;
    m = (((r ^ m) >> 2) / c) | r;
  }
  return out;
}

std::vector<std::size_t> bits(SpinOrbitalMask m) {
  std::vector<std::size_t> out;
  while (m) {
    out.push_back(static_cast<std::size_t>(std::countr_zero(m)));
    m &= m - 1;
  }
  return out;
}

// <pq|rs> over spin orbitals in physicists' order, from chemists' (pr|qs).
struct SpinIntegrals {
  const hamio::MolecularProblem& p;
  double one(std::size_t a, std::size_t b) const {
    if ((a & 1) != (b & 1)) return 0.0;
    return p.h(a >> 1, b >> 1);
  }
  double two(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    if ((a & 1) != (c & 1) || (b & 1) != (d & 1)) return 0.0;
    return p.two_body.chem(a >> 1, c >> 1, b >> 1, d >> 1);
  }
  double anti(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return two(a, b, c, d) - two(a, b, d, c);
  }
};

class DeterminantIndex {
 public:
  explicit DeterminantIndex(const std::vector<Determinant>& dets) {
    map_.reserve(dets.size() * 2);
    for (std::size_t i = 0; i < dets.size(); ++i) map_.emplace(dets[i].qubit_mask(), i);
  }
  std::ptrdiff_t find(SpinOrbitalMask m) const {
    auto it = map_.find(m);
    return it == map_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
  }

 private:
  std::unordered_map<SpinOrbitalMask, std::size_t> map_;
};

}  // namespace

void SectorSpec::validate() const {
  if (n_alpha > n_orbitals || n_beta > n_orbitals)
    throw InconsistentSector("electron counts exceed the orbital count");
  if (n_orbitals > 32) throw DimensionError("at most 32 orbitals are supported");
  if (target_spin < 0.0) throw InconsistentSector("negative target spin");
}

SectorSpec sector_of(const hamio::MolecularProblem& problem) {
  return {problem.n_orbitals, problem.n_alpha, problem.n_beta,
          0.5 * (problem.spin_multiplicity_target - 1)};
}

pauli::QubitMask Determinant::qubit_mask() const { return spread(alpha, 0) | spread(beta, 1); }

std::uint64_t determinant_count(const SectorSpec& sector) {
  // Counting needs no occupation masks, so the 32-orbital limit does not apply.
  if (sector.n_alpha > sector.n_orbitals || sector.n_beta > sector.n_orbitals)
    throw InconsistentSector("electron counts exceed the orbital count");
  auto binom = [](std::uint64_t n, std::uint64_t k) -> std::uint64_t {
    if (k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;  // exact at every step
    return static_cast<std::uint64_t>(r);
  };
  const unsigned __int128 total =
      static_cast<unsigned __int128>(binom(sector.n_orbitals, sector.n_alpha)) *
      binom(sector.n_orbitals, sector.n_beta);
  if (total > std::numeric_limits<std::uint64_t>::max()) throw SectorTooLarge("determinant count overflows");
  return static_cast<std::uint64_t>(total);
}

std::vector<Determinant> enumerate_determinants(const SectorSpec& sector) {
  sector.validate();
  const auto as = strings(sector.n_orbitals, sector.n_alpha);
  const auto bs = strings(sector.n_orbitals, sector.n_beta);
  std::vector<Determinant> out;
  out.reserve(as.size() * bs.size());
  for (auto a : as)
    for (auto b : bs) out.push_back({a, b});
  return out;
}

double determinant_energy(const hamio::MolecularProblem& problem, const Determinant& det) {
  const SpinIntegrals ints{problem};
  const auto occ = bits(det.qubit_mask());
  double e = problem.core_energy;
  for (auto i : occ) e += ints.one(i, i);
  for (auto i : occ)
    for (auto j : occ) e += 0.5 * ints.anti(i, j, i, j);
  return e;
}

Eigen::SparseMatrix<double> sector_hamiltonian(const hamio::MolecularProblem& problem,
                                               const std::vector<Determinant>& dets) {
  const SpinIntegrals ints{problem};
  const DeterminantIndex index(dets);
  const std::size_t n_so = 2 * problem.n_orbitals;
  const SpinOrbitalMask all = n_so >= 64 ? ~SpinOrbitalMask{0} : (SpinOrbitalMask{1} << n_so) - 1;
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t col = 0; col < dets.size(); ++col) {
    const SpinOrbitalMask m = dets[col].qubit_mask();
    const auto occ = bits(m);
    const auto vir = bits(all & ~m);
    trip.emplace_back(col, col, determinant_energy(problem, dets[col]));
    // singles a <- i
    for (auto i : occ)
      for (auto a : vir) {
        if ((a & 1) != (i & 1)) continue;
        double v = ints.one(a, i);
        for (auto j : occ) v += ints.anti(a, j, i, j);
        if (v == 0.0) continue;
        SpinOrbitalMask t = m;
        const int s = excite(t, a, i);
        const auto row = index.find(t);
        if (s != 0 && row >= 0) trip.emplace_back(row, col, s * v);
      }
    // doubles a,b <- i,j with i<j, a<b: element <ab||ij>, operator a+_a a+_b a_j a_i
    for (std::size_t x = 0; x < occ.size(); ++x)
      for (std::size_t y = x + 1; y < occ.size(); ++y) {
        const auto i = occ[x], j = occ[y];
        for (std::size_t u = 0; u < vir.size(); ++u)
          for (std::size_t w = u + 1; w < vir.size(); ++w) {
            const auto a = vir[u], b = vir[w];
            const double v = ints.anti(a, b, i, j);
            if (v == 0.0) continue;
            SpinOrbitalMask t = m;
            // a+_a a+_b a_j a_i = (a+_a a_i)(a+_b a_j) for distinct indices
            const int s = excite(t, b, j);
            if (s == 0) continue;
            const int s2 = excite(t, a, i);
            if (s2 == 0) continue;
            const auto row = index.find(t);
            if (row >= 0) trip.emplace_back(row, col, s * s2 * v);
          }
      }
  }
  Eigen::SparseMatrix<double> h(static_cast<Eigen::Index>(dets.size()), static_cast<Eigen::Index>(dets.size()));
  h.setFromTriplets(trip.begin(), trip.end());
  return h;
}

Eigen::SparseMatrix<double> sector_spin_squared(std::size_t n_orbitals,
                                                const std::vector<Determinant>& dets) {
  const DeterminantIndex index(dets);
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t col = 0; col < dets.size(); ++col) {
    const SpinOrbitalMask m = dets[col].qubit_mask();
    const double sz = 0.5 * (std::popcount(dets[col].alpha) - std::popcount(dets[col].beta));
    // S- S+ with S+ = sum_p a+_{p alpha} a_{p beta}
    std::unordered_map<SpinOrbitalMask, double> acc;
    for (std::size_t p = 0; p < n_orbitals; ++p) {
      SpinOrbitalMask t = m;
      const int s1 = excite(t, 2 * p, 2 * p + 1);
      if (s1 == 0) continue;
      for (std::size_t q = 0; q < n_orbitals; ++q) {
        SpinOrbitalMask u = t;
        const int s2 = excite(u, 2 * q + 1, 2 * q);
        if (s2 != 0) acc[u] += s1 * s2;
      }
    }
    acc[m] += sz * sz + sz;
    std::vector<std::pair<SpinOrbitalMask, double>> sorted(acc.begin(), acc.end());
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [u, v] : sorted) {
      if (v == 0.0) continue;
      const auto row = index.find(u);
      if (row >= 0) trip.emplace_back(row, col, v);
    }
  }
  Eigen::SparseMatrix<double> s2(static_cast<Eigen::Index>(dets.size()), static_cast<Eigen::Index>(dets.size()));
  s2.setFromTriplets(trip.begin(), trip.end());
  return s2;
}

LanczosResult lanczos(const Eigen::SparseMatrix<double>& a, std::size_t n_roots, double tolerance,
                      std::size_t max_iterations, std::uint64_t seed) {
  const auto dim = a.rows();
  if (dim == 0) throw DimensionError("empty operator");
  n_roots = std::min<std::size_t>(n_roots, static_cast<std::size_t>(dim));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = g(rng);
  v.normalize();

  const std::size_t cap = std::min<std::size_t>(max_iterations, static_cast<std::size_t>(dim));
  Eigen::MatrixXd basis(dim, static_cast<Eigen::Index>(cap));
  std::vector<double> alphas, betas;
  basis.col(0) = v;
  for (std::size_t m = 0; m < cap; ++m) {
    Eigen::VectorXd w = a * basis.col(static_cast<Eigen::Index>(m));
    const double alpha = basis.col(static_cast<Eigen::Index>(m)).dot(w);
    alphas.push_back(alpha);
    // Full reorthogonalization, applied twice.
    const auto k = static_cast<Eigen::Index>(m + 1);
    for (int pass = 0; pass < 2; ++pass) w -= basis.leftCols(k) * (basis.leftCols(k).transpose() * w);
    const double beta = w.norm();

    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      t(i, i) = alphas[static_cast<std::size_t>(i)];
      if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = betas[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const bool exhausted = beta < 1e-12 || m + 1 == static_cast<std::size_t>(dim);
    const std::size_t have = std::min<std::size_t>(n_roots, static_cast<std::size_t>(k));
    bool done = have == n_roots || exhausted;
    for (std::size_t r = 0; r < have && done; ++r)
      if (beta * std::abs(es.eigenvectors()(k - 1, static_cast<Eigen::Index>(r))) > tolerance && !exhausted)
        done = false;
    if (done) {
      LanczosResult out;
      out.iterations = m + 1;
      out.vectors = basis.leftCols(k) * es.eigenvectors().leftCols(static_cast<Eigen::Index>(have));
      for (std::size_t r = 0; r < have; ++r) {
        out.values.push_back(es.eigenvalues()(static_cast<Eigen::Index>(r)));
        out.vectors.col(static_cast<Eigen::Index>(r)).normalize();
      }
      return out;
    }
    if (m + 1 < cap) {
      betas.push_back(beta);
      basis.col(k) = w / beta;
    }
  }
  throw IterationLimit("Lanczos did not converge within " + std::to_string(max_iterations) + " iterations");
}

CiVector fci_ground_state(const hamio::MolecularProblem& problem, const FciOptions& options) {
  const SectorSpec sector = sector_of(problem);
  const std::uint64_t count = determinant_count(sector);
  if (count > options.determinant_cap)
    throw SectorTooLarge(std::to_string(count) + " determinants exceed the cap of " +
                         std::to_string(options.determinant_cap));
  CiVector out;
  out.sector = sector;
  out.determinants = enumerate_determinants(sector);
  const auto h = sector_hamiltonian(problem, out.determinants);
  const auto s2 = sector_spin_squared(problem.n_orbitals, out.determinants);
  const double target = sector.target_spin * (sector.target_spin + 1.0);

  const bool dense = options.solver == Solver::dense ||
                     (options.solver == Solver::automatic && count < options.dense_limit);
  std::vector<double> values;
  Eigen::MatrixXd vectors;
  if (dense) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(h)};
    vectors = es.eigenvectors();
    values.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  } else {
    const auto r = lanczos(h, 8, options.residual_tolerance, options.max_lanczos_iterations, options.lanczos_seed);
    values = r.values;
    vectors = r.vectors;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Eigen::VectorXd c = vectors.col(static_cast<Eigen::Index>(i));
    const double s = c.dot(s2 * c);
    if (std::abs(s - target) < options.spin_tolerance) {
      out.coefficients = c;
      // Fix the sign so the largest-magnitude coefficient is positive.
      Eigen::Index imax = 0;
      out.coefficients.cwiseAbs().maxCoeff(&imax);
      if (out.coefficients(imax) < 0) out.coefficients = -out.coefficients;
      out.energy = values[i];
      out.spin_sq = s;
      return out;
    }
  }
  throw NumericalError("no computed eigenpair has the target spin");
}

CiDistribution ci_distribution(const CiVector& v) {
  CiDistribution d;
  d.probabilities.resize(static_cast<std::size_t>(v.coefficients.size()));
  for (Eigen::Index i = 0; i < v.coefficients.size(); ++i)
    d.probabilities[static_cast<std::size_t>(i)] = v.coefficients(i) * v.coefficients(i);
  std::sort(d.probabilities.begin(), d.probabilities.end(), std::greater<>());
  return d;
}

double spin_squared_ci(const CiVector& v) {
  const auto s2 = sector_spin_squared(v.sector.n_orbitals, v.determinants);
  return v.coefficients.dot(s2 * v.coefficients);
}

sim::Statevector to_statevector(const CiVector& v) {
  sim::Statevector s(2 * v.sector.n_orbitals);
  for (std::size_t i = 0; i < v.determinants.size(); ++i)
    s[v.determinants[i].qubit_mask()] = v.coefficients(static_cast<Eigen::Index>(i));
  return s;
}

}  // namespace adaptscale::exact
