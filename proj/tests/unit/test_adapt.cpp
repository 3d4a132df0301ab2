#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "adaptscale/adapt.hpp"
#include "adaptscale/errors.hpp"
#include "adaptscale/exact.hpp"
#include "adaptscale/pauli.hpp"
#include "adaptscale/pools.hpp"
#include "test_support.hpp"

using namespace adaptscale;
using namespace adaptscale::adapt;
using testing_support::load_problem;

namespace {

pools::OperatorPool support_pool(const std::vector<pauli::QubitMask>& supports) {
  pools::OperatorPool pool;
  pool.n_qubits = 8;
  for (auto s : supports) {
    pools::PoolOperator op;
    op.support = s;
    pool.operators.push_back(op);
  }
  return pool;
}

bool pairwise_disjoint(const std::vector<std::size_t>& idx, const pools::OperatorPool& pool) {
  pauli::QubitMask seen = 0;
  for (auto i : idx) {
    if (pool.operators[i].support & seen) return false;
    seen |= pool.operators[i].support;
  }
  return true;
}

AdaptTrace run_fixture(const std::string& label, pools::PoolKind kind, bool tetris, double target,
                       std::size_t max_iterations = 200) {
  const auto p = load_problem(label);
  const auto pool = pools::build_pool(kind, p.n_orbitals, p.n_alpha, p.n_beta);
  AdaptConfig cfg;
  cfg.target_error = target;
  cfg.max_iterations = max_iterations;
  cfg.tetris = tetris;
  cfg.reference_energy = exact::fci_ground_state(p).energy;
  cfg.spin_multiplicity = p.spin_multiplicity_target;
  return run_adapt(pauli::jordan_wigner(p), pool, aufbau_reference(p.n_alpha, p.n_beta), cfg);
}

void check_trace_invariants(const AdaptTrace& t, const pools::OperatorPool& pool) {
  ASSERT_FALSE(t.records.empty());
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    const auto& r = t.records[i];
    EXPECT_EQ(r.iteration_index, i + 1);
    EXPECT_GE(r.energy_error, -1e-9);
    EXPECT_EQ(r.energy_error, r.energy - t.config.reference_energy);
    EXPECT_EQ(r.operators_added, r.selected.size());
    EXPECT_TRUE(pairwise_disjoint(r.selected, pool));
    if (i > 0) {
      const auto& q = t.records[i - 1];
      EXPECT_LE(r.energy, q.energy + 1e-10);
      EXPECT_GE(r.cumulative_parameters, q.cumulative_parameters);
      EXPECT_GE(r.cumulative_cnots, q.cumulative_cnots);
    }
  }
}

}  // namespace

TEST(Adapt, SelectionExamples) {
  const auto pool = support_pool({0b0011, 0b0110, 0b1100});
  const std::vector<double> g{0.9, 0.8, 0.7};
  EXPECT_EQ(select_operators(g, pool, true), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(select_operators(g, pool, false), (std::vector<std::size_t>{0}));
  const auto shared = support_pool({0b0011, 0b0101, 0b1001});
  EXPECT_EQ(select_operators({0.3, 0.5, 0.4}, shared, true), (std::vector<std::size_t>{1}));
}

TEST(Adapt, SelectionTiesAndThreshold) {
  const auto pool = support_pool({0b0011, 0b0011, 0b1100, 0b110000});
  EXPECT_EQ(select_operators({0.5, 0.5, 0.1, 0.0}, pool, false), (std::vector<std::size_t>{0}));
  EXPECT_EQ(select_operators({0.5, 0.5, 0.1, 0.0}, pool, true), (std::vector<std::size_t>{0, 2}));
  EXPECT_TRUE(select_operators({1e-13, 0.0, 0.0, 0.0}, pool, false).empty());
  EXPECT_TRUE(select_operators({1e-13, 0.0, 0.0, 0.0}, pool, true).empty());
  EXPECT_THROW(select_operators({1.0}, pool, false), Error);
}

TEST(Adapt, TetrisSelectionsAreDisjointOnRandomPools) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<pauli::QubitMask> supports;
    std::vector<double> g;
    for (int k = 0; k < 30; ++k) {
      pauli::QubitMask m = 0;
      while (std::popcount(m) < 2) m |= pauli::QubitMask{1} << (rng() % 12);
      supports.push_back(m);
      g.push_back(u(rng));
    }
    const auto pool = support_pool(supports);
    const auto sel = select_operators(g, pool, true);
    ASSERT_FALSE(sel.empty());
    EXPECT_TRUE(pairwise_disjoint(sel, pool));
    // The first pick is always the global argmax.
    EXPECT_EQ(sel[0], static_cast<std::size_t>(std::max_element(g.begin(), g.end()) - g.begin()));
  }
}

TEST(Adapt, ExpandInverseHessianExamples) {
  const auto a = expand_inverse_hessian(Eigen::MatrixXd(0, 0), 3);
  EXPECT_EQ(a, Eigen::MatrixXd::Identity(3, 3));
  Eigen::MatrixXd prev = Eigen::Vector2d(4.0, 9.0).asDiagonal();
  Eigen::MatrixXd expected = Eigen::Vector3d(4.0, 9.0, 1.0).asDiagonal();
  EXPECT_EQ(expand_inverse_hessian(prev, 1), expected);
}

TEST(Adapt, ExpandInverseHessianIsBlockDiagonal) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(4, 4);
  for (int i = 0; i < 16; ++i) m.data()[i] = g(rng);
  const Eigen::MatrixXd prev = m * m.transpose() + Eigen::MatrixXd::Identity(4, 4);
  const auto out = expand_inverse_hessian(prev, 2);
  ASSERT_EQ(out.rows(), 6);
  EXPECT_EQ(out.topLeftCorner(4, 4), prev);
  EXPECT_EQ(out.bottomRightCorner(2, 2), Eigen::MatrixXd::Identity(2, 2));
  EXPECT_EQ(out.topRightCorner(4, 2), Eigen::MatrixXd::Zero(4, 2));
  EXPECT_EQ(out.bottomLeftCorner(2, 4), Eigen::MatrixXd::Zero(2, 4));
  EXPECT_EQ(out, out.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> a(prev), b(out);
  std::vector<double> expected(a.eigenvalues().data(), a.eigenvalues().data() + 4);
  expected.push_back(1.0);
  expected.push_back(1.0);
  std::sort(expected.begin(), expected.end());
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(b.eigenvalues()(k), expected[k], 1e-12);
}

TEST(Adapt, BfgsFindsCosineMinimum) {
  ObjectiveFn f = [](const Eigen::VectorXd& x) {
    Objective o;
    o.value = std::cos(x(0));
    o.gradient = Eigen::VectorXd::Constant(1, -std::sin(x(0)));
    return o;
  };
  BfgsOptions opt;
  opt.gradient_tolerance = 1e-10;
  const auto r = minimize_bfgs(f, Eigen::VectorXd::Constant(1, 3.0), Eigen::MatrixXd::Identity(1, 1), opt);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x(0), M_PI, 1e-9);
  EXPECT_NEAR(r.value, -1.0, 1e-10);
}

TEST(Adapt, BfgsWarmStartedWithExactInverseHessianTakesAtMostTwoSteps) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  for (int n : {2, 5, 10}) {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n * n; ++i) m.data()[i] = g(rng);
    const Eigen::MatrixXd a = m * m.transpose() + n * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b(i) = g(rng);
    ObjectiveFn f = [&](const Eigen::VectorXd& x) {
      return Objective{0.5 * x.dot(a * x) - b.dot(x), a * x - b};
    };
    BfgsOptions opt;
    opt.gradient_tolerance = 1e-9;
    const auto warm = minimize_bfgs(f, Eigen::VectorXd::Zero(n), a.inverse(), opt);
    EXPECT_TRUE(warm.converged);
    EXPECT_LE(warm.iterations, 2u);
    EXPECT_LT((warm.x - a.ldlt().solve(b)).norm(), 1e-8);
    const auto cold = minimize_bfgs(f, Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n), opt);
    EXPECT_TRUE(cold.converged);
    EXPECT_GE(cold.iterations, warm.iterations);
  }
}

TEST(Adapt, BfgsReplacesIndefiniteWarmStart) {
  ObjectiveFn f = [](const Eigen::VectorXd& x) { return Objective{x.squaredNorm(), 2 * x}; };
  BfgsOptions opt;
  const Eigen::MatrixXd bad = -Eigen::MatrixXd::Identity(2, 2);
  const auto r = minimize_bfgs(f, Eigen::Vector2d(1.0, -2.0), bad, opt);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.x.norm(), 1e-6);
}

TEST(Adapt, BfgsReportsStallWithBestPoint) {
  // The reported gradient points uphill, so no step can lower the value.
  ObjectiveFn f = [](const Eigen::VectorXd& x) { return Objective{x.squaredNorm(), -2 * x}; };
  BfgsOptions opt;
  try {
    minimize_bfgs(f, Eigen::Vector2d(1.0, 1.0), Eigen::MatrixXd::Identity(2, 2), opt);
    FAIL() << "expected a stall";
  } catch (const OptimizationStallAt& e) {
    EXPECT_NEAR(e.partial().value, 2.0, 1e-12);
    EXPECT_FALSE(e.partial().converged);
  }
}

TEST(Adapt, TrivialProblemStopsImmediately) {
  // H = Z0 on an empty register: every number-conserving generator annihilates
  // the vacuum, so screening finds nothing.
  pauli::QubitHamiltonian h;
  h.n_qubits = 4;
  h.terms.push_back(pauli::parse_term("Z0"));
  const auto pool = pools::build_qeb_pool(2, 1, 1);
  AdaptConfig cfg;
  cfg.reference_energy = 1.0;
  const auto t = run_adapt(h, pool, 0, cfg);
  ASSERT_EQ(t.records.size(), 1u);
  EXPECT_EQ(t.records[0].operators_added, 0u);
  EXPECT_LT(t.records[0].max_gradient, cfg.gradient_threshold);
  EXPECT_EQ(t.stop_reason, StopReason::gradient_threshold);
  EXPECT_EQ(t.ansatz.parameter_count(), 0u);
}

TEST(Adapt, LiHReachesChemicalAccuracyInOneIteration) {
  const auto t = run_fixture("lih", pools::PoolKind::ceo, false, kEpsilonChem);
  ASSERT_EQ(t.records.size(), 1u);
  EXPECT_EQ(t.stop_reason, StopReason::target_error);
  EXPECT_LE(t.records[0].energy_error, kEpsilonChem);
  EXPECT_EQ(t.n_adapt_at(kEpsilonChem), std::optional<std::size_t>(1));
}

TEST(Adapt, H4QebReachesMicrohartreeWithGoldenIterationCount) {
  const auto p = load_problem("h4");
  const auto t = run_fixture("h4", pools::PoolKind::qeb, false, 1e-6);
  EXPECT_EQ(t.stop_reason, StopReason::target_error);
  EXPECT_LE(t.records.back().energy_error, 1e-6);
  EXPECT_EQ(t.records.size(), 19u);  // golden value from the first verified run
  check_trace_invariants(t, pools::build_qeb_pool(p.n_orbitals, p.n_alpha, p.n_beta));
  // Intermediate qubit-excitation states may break spin symmetry; the converged
  // state is the singlet ground state.
  EXPECT_NEAR(t.records.back().spin_sq, 0.0, 1e-4);
}

TEST(Adapt, TetrisRunKeepsInvariants) {
  const auto p = load_problem("h4");
  const auto t = run_fixture("h4", pools::PoolKind::ceo, true, 1e-8);
  EXPECT_EQ(t.stop_reason, StopReason::target_error);
  check_trace_invariants(t, pools::build_ceo_pool(p.n_orbitals, p.n_alpha, p.n_beta));
  bool multi = false;
  for (const auto& r : t.records) multi = multi || r.operators_added > 1;
  EXPECT_TRUE(multi);
}

TEST(Adapt, OpenShellTraceReportsSpinDeviation) {
  const auto t = run_fixture("h5", pools::PoolKind::qeb, false, kEpsilonChem);
  EXPECT_EQ(t.stop_reason, StopReason::target_error);
  for (const auto& r : t.records) EXPECT_NEAR(r.spin_deviation, std::abs(r.spin_sq - 0.75), 1e-15);
}

TEST(Adapt, IterationCapIsAStopReason) {
  const auto t = run_fixture("h4", pools::PoolKind::qeb, false, 1e-10, 3);
  EXPECT_EQ(t.records.size(), 3u);
  EXPECT_EQ(t.stop_reason, StopReason::max_iterations);
}

TEST(Adapt, PoolsAreCompleteOnSmallFixtures) {
  for (const char* label : {"h2", "h4"}) {
    const auto p = load_problem(label);
    const auto pool = pools::build_qeb_pool(p.n_orbitals, p.n_alpha, p.n_beta);
    AdaptConfig cfg;
    cfg.target_error = 1e-9;
    cfg.gradient_threshold = 0.0;
    cfg.max_iterations = 1000;
    cfg.reference_energy = exact::fci_ground_state(p).energy;
    const auto t = run_adapt(pauli::jordan_wigner(p), pool, aufbau_reference(p.n_alpha, p.n_beta), cfg);
    EXPECT_LT(t.records.back().energy_error, 1e-8) << label;
  }
}

TEST(Adapt, RunsAreDeterministic) {
  const auto a = run_fixture("h4", pools::PoolKind::ceo, true, 1e-6);
  const auto b = run_fixture("h4", pools::PoolKind::ceo, true, 1e-6);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].energy, b.records[i].energy);
    EXPECT_EQ(a.records[i].selected, b.records[i].selected);
    EXPECT_EQ(a.records[i].inner_iterations, b.records[i].inner_iterations);
  }
  EXPECT_EQ(a.ansatz.parameters, b.ansatz.parameters);
}

TEST(Adapt, ConfigValidation) {
  AdaptConfig cfg;
  cfg.target_error = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.target_error = 1e-3;
  cfg.max_iterations = 0;
  EXPECT_THROW(cfg.validate(), Error);
  AdaptConfig tight;
  tight.target_error = 1e-6;
  EXPECT_DOUBLE_EQ(tight.effective_inner_tolerance(), 1e-7);
  EXPECT_EQ(AdaptConfig{}.epsilon_chem, 1.6e-3);
}

TEST(Adapt, AufbauReferenceUsesAlternatingOrder) {
  EXPECT_EQ(aufbau_reference(2, 2), 0b1111u);
  EXPECT_EQ(aufbau_reference(3, 2), 0b11111u);
  EXPECT_EQ(aufbau_reference(2, 0), 0b0101u);
}

TEST(Adapt, NAdaptFirstAndLastCrossing) {
  AdaptTrace t;
  for (double e : {1e-2, 1e-3, 2e-3, 5e-4}) {
    IterationRecord r;
    r.iteration_index = t.records.size() + 1;
    r.energy_error = e;
    t.records.push_back(r);
  }
  EXPECT_EQ(t.n_adapt_at(1.6e-3), std::optional<std::size_t>(2));
  EXPECT_EQ(t.n_adapt_at(1.6e-3, true), std::optional<std::size_t>(4));
  EXPECT_EQ(t.n_adapt_at(1e-4), std::nullopt);
}
