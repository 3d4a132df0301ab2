#include "adaptscale/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace adaptscale::adapt {

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::target_error: return "target_error";
    case StopReason::gradient_threshold: return "gradient_threshold";
    case StopReason::max_iterations: return "max_iterations";
  }
  return "unknown";
}

void AdaptConfig::validate() const {
  if (!(target_error > 0.0)) throw Error("target_error must be positive");
  if (max_iterations < 1) throw Error("max_iterations must be at least 1");
  if (!(gradient_threshold >= 0.0)) throw Error("gradient_threshold must be non-negative");
  if (!(inner_gradient_tolerance > 0.0)) throw Error("inner_gradient_tolerance must be positive");
  if (spin_multiplicity < 1) throw Error("spin multiplicity must be at least 1");
}

double AdaptConfig::effective_inner_tolerance() const {
  return std::min(inner_gradient_tolerance, 0.1 * target_error);
}

std::optional<std::size_t> AdaptTrace::n_adapt_at(double epsilon, bool last_crossing) const {
  if (!last_crossing) {
    for (const auto& r : records)
      if (r.energy_error <= epsilon) return r.iteration_index;
    return std::nullopt;
  }
  std::optional<std::size_t> out;
  for (const auto& r : records) {
    if (r.energy_error <= epsilon) {
      if (!out) out = r.iteration_index;
    } else {
      out.reset();
    }
  }
  return out;
}

std::vector<std::size_t> select_operators(const std::vector<double>& gradients,
                                          const pools::OperatorPool& pool, bool tetris,
                                          double gradient_threshold) {
  if (gradients.size() != pool.size())
    throw DimensionError("gradient vector does not match the pool size");
  std::vector<std::size_t> order(gradients.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return gradients[a] > gradients[b]; });
  std::vector<std::size_t> picked;
  if (order.empty() || !(gradients[order.front()] > gradient_threshold)) return picked;
  if (!tetris) return {order.front()};
  pauli::QubitMask used = 0;
  for (auto i : order) {
    if (!(gradients[i] > gradient_threshold)) break;
    const auto support = pool.operators[i].support;
    if (support & used) continue;
    used |= support;
    picked.push_back(i);
  }
  return picked;
}

Eigen::MatrixXd expand_inverse_hessian(const Eigen::MatrixXd& prev, std::size_t new_params) {
  const auto k = prev.rows();
  const auto n = k + static_cast<Eigen::Index>(new_params);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  out.topLeftCorner(k, k) = prev;
  out.bottomRightCorner(n - k, n - k).setIdentity();
  return out;
}

namespace {

struct LinePoint {
  double alpha = 0.0;
  double value = 0.0;
  double slope = 0.0;
  Eigen::VectorXd gradient;
};

class LineSearch {
 public:
  LineSearch(const ObjectiveFn& f, const Eigen::VectorXd& x, const Eigen::VectorXd& p,
             const LinePoint& origin, const BfgsOptions& opt, std::size_t& evaluations)
      : f_(f), x_(x), p_(p), origin_(origin), opt_(opt), evaluations_(evaluations) {}

  // Strong-Wolfe bracketing followed by zoom. Returns nullopt when no point
  // with sufficient decrease is found.
  std::optional<LinePoint> run() {
    LinePoint prev = origin_;
    double alpha = 1.0;
    for (int i = 0; i < 40; ++i) {
      LinePoint cur = eval(alpha);
      if (!std::isfinite(cur.value) || armijo_fails(cur) || (i > 0 && cur.value >= prev.value))
        return zoom(prev, cur);
      if (std::abs(cur.slope) <= -opt_.c2 * origin_.slope) return cur;
      if (cur.slope >= 0.0) return zoom(cur, prev);
      prev = std::move(cur);
      alpha *= 2.0;
    }
    return std::nullopt;
  }

 private:
  LinePoint eval(double alpha) {
    ++evaluations_;
    const Objective o = f_(x_ + alpha * p_);
    return {alpha, o.value, o.gradient.dot(p_), o.gradient};
  }

  bool armijo_fails(const LinePoint& pt) const {
    return pt.value > origin_.value + opt_.c1 * pt.alpha * origin_.slope;
  }

  std::optional<LinePoint> zoom(LinePoint lo, LinePoint hi) {
    for (int j = 0; j < 60; ++j) {
      const double width = hi.alpha - lo.alpha;
      if (std::abs(width) <= 1e-14 * std::max(1.0, std::abs(lo.alpha))) break;
      double trial = cubic_minimizer(lo, hi);
      const double a = std::min(lo.alpha, hi.alpha), b = std::max(lo.alpha, hi.alpha);
      const double margin = 0.1 * (b - a);
      if (!std::isfinite(trial) || trial < a + margin || trial > b - margin) trial = 0.5 * (lo.alpha + hi.alpha);
      LinePoint cur = eval(trial);
      if (!std::isfinite(cur.value) || armijo_fails(cur) || cur.value >= lo.value) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.slope) <= -opt_.c2 * origin_.slope) return cur;
        if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
    }
    // Sufficient decrease without the curvature condition is still progress.
    if (lo.alpha != 0.0 && lo.value < origin_.value) return lo;
    return std::nullopt;
  }

  static double cubic_minimizer(const LinePoint& p, const LinePoint& q) {
    const double d1 = p.slope + q.slope - 3.0 * (p.value - q.value) / (p.alpha - q.alpha);
    const double disc = d1 * d1 - p.slope * q.slope;
    if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double d2 = std::copysign(std::sqrt(disc), q.alpha - p.alpha);
    return q.alpha - (q.alpha - p.alpha) * (q.slope + d2 - d1) / (q.slope - p.slope + 2.0 * d2);
  }

  const ObjectiveFn& f_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& p_;
  const LinePoint& origin_;
  const BfgsOptions& opt_;
  std::size_t& evaluations_;
};

bool symmetric_positive_definite(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) return false;
  if (m.rows() == 0) return true;
  if (!m.allFinite()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    return false;
  return Eigen::LLT<Eigen::MatrixXd>(m).info() == Eigen::Success;
}

// Last resort after a failed line search: halve the steepest-descent step
// until the objective drops.
std::optional<LinePoint> backtrack(const ObjectiveFn& f, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& p, const LinePoint& origin,
                                   std::size_t& evaluations) {
  double alpha = 1.0;
  for (int i = 0; i < 60; ++i, alpha *= 0.5) {
    ++evaluations;
    const Objective o = f(x + alpha * p);
    if (std::isfinite(o.value) && o.value < origin.value)
      return LinePoint{alpha, o.value, o.gradient.dot(p), o.gradient};
  }
  return std::nullopt;
}

}  // namespace

BfgsResult minimize_bfgs(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                         const Eigen::MatrixXd& warm_inverse_hessian, const BfgsOptions& options) {
  const auto n = x0.size();
  BfgsResult r;
  r.x = x0;
  const Objective start = f(x0);
  r.evaluations = 1;
  r.value = start.value;
  r.gradient = start.gradient;
  if (r.gradient.size() != n) throw DimensionError("objective gradient has the wrong length");
  const bool warm_ok = warm_inverse_hessian.rows() == n && symmetric_positive_definite(warm_inverse_hessian);
  r.inverse_hessian = warm_ok ? warm_inverse_hessian : Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);

  while (true) {
    if (n == 0 || r.gradient.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      r.converged = true;
      return r;
    }
    if (r.iterations >= options.max_iterations) return r;

    const LinePoint origin{0.0, r.value, 0.0, r.gradient};
    Eigen::VectorXd p = -r.inverse_hessian * r.gradient;
    LinePoint here = origin;
    here.slope = r.gradient.dot(p);
    if (!(here.slope < 0.0)) {
      r.inverse_hessian = identity;
      p = -r.gradient;
      here.slope = r.gradient.dot(p);
    }
    std::optional<LinePoint> step = LineSearch(f, r.x, p, here, options, r.evaluations).run();
    if (!step) {
      r.inverse_hessian = identity;
      p = -r.gradient;
      here.slope = r.gradient.dot(p);
      step = LineSearch(f, r.x, p, here, options, r.evaluations).run();
      if (!step) step = backtrack(f, r.x, p, here, r.evaluations);
      if (!step) throw OptimizationStallAt("line search failed to reduce the objective", r);
    }

    const Eigen::VectorXd s = step->alpha * p;
    const Eigen::VectorXd y = step->gradient - r.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd left = identity - rho * s * y.transpose();
      r.inverse_hessian = left * r.inverse_hessian * left.transpose() + rho * s * s.transpose();
      r.inverse_hessian = 0.5 * (r.inverse_hessian + r.inverse_hessian.transpose()).eval();
    }
    r.x += s;
    r.value = step->value;
    r.gradient = step->gradient;
    ++r.iterations;
  }
}

InnerResult inner_vqe(const sim::CompiledOperator& h, const sim::AnsatzState& ansatz,
                      const Eigen::MatrixXd& warm_inverse_hessian, double tolerance,
                      std::size_t max_iterations) {
  const auto n = static_cast<Eigen::Index>(ansatz.parameter_count());
  ObjectiveFn f = [&](const Eigen::VectorXd& x) {
    const auto eg = sim::energy_and_gradient(ansatz, std::span<const double>(x.data(), x.size()), h);
    return Objective{eg.energy, Eigen::Map<const Eigen::VectorXd>(eg.gradient.data(), n)};
  };
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(ansatz.parameters.data(), n);
  BfgsOptions opt;
  opt.gradient_tolerance = tolerance;
  opt.max_iterations = max_iterations;

  InnerResult out;
  BfgsResult r;
  try {
    r = minimize_bfgs(f, x0, warm_inverse_hessian, opt);
  } catch (const OptimizationStallAt& stall) {
    r = stall.partial();
    out.stalled = true;
  }
  out.ansatz = ansatz;
  out.ansatz.parameters.assign(r.x.data(), r.x.data() + r.x.size());
  out.inverse_hessian = std::move(r.inverse_hessian);
  out.energy = r.value;
  out.inner_iterations = r.iterations;
  out.converged = r.converged;
  return out;
}

pauli::QubitMask aufbau_reference(std::size_t n_alpha, std::size_t n_beta) {
  pauli::QubitMask m = 0;
  for (std::size_t p = 0; p < n_alpha; ++p) m |= pauli::QubitMask{1} << pauli::alpha_mode(p);
  for (std::size_t p = 0; p < n_beta; ++p) m |= pauli::QubitMask{1} << pauli::beta_mode(p);
  return m;
}

AdaptTrace run_adapt(const pauli::QubitHamiltonian& h, const pools::OperatorPool& pool,
                     pauli::QubitMask reference, const AdaptConfig& cfg,
                     const IterationCallback& on_iteration) {
  cfg.validate();
  if (pool.n_qubits != h.n_qubits) throw DimensionError("pool and Hamiltonian qubit counts differ");
  const sim::CompiledOperator ch(h);

  std::optional<sim::CompiledOperator> s2;
  if (h.n_qubits % 2 == 0) s2.emplace(pauli::s_squared_operator(h.n_qubits / 2));
  const double spin = 0.5 * (cfg.spin_multiplicity - 1);
  const double target_s2 = spin * (spin + 1.0);

  AdaptTrace trace;
  trace.pool_label = std::string(pools::to_string(pool.kind_label));
  trace.config = cfg;
  trace.ansatz = sim::AnsatzState{h.n_qubits, reference, {}, {}};

  sim::Statevector psi = sim::prepare_reference(reference, h.n_qubits);
  double energy = sim::expectation(psi, ch);
  Eigen::MatrixXd inverse_hessian(0, 0);
  std::size_t cnots = 0;
  const double tolerance = cfg.effective_inner_tolerance();

  auto make_record = [&](std::size_t index, double gstar) {
    IterationRecord rec;
    rec.iteration_index = index;
    rec.energy = energy;
    rec.energy_error = energy - cfg.reference_energy;
    rec.max_gradient = gstar;
    if (s2) {
      rec.spin_sq = sim::expectation(psi, *s2);
      rec.spin_deviation = std::abs(rec.spin_sq - target_s2);
    } else {
      rec.spin_sq = std::numeric_limits<double>::quiet_NaN();
      rec.spin_deviation = std::numeric_limits<double>::quiet_NaN();
    }
    rec.cumulative_parameters = trace.ansatz.parameter_count();
    rec.cumulative_cnots = cnots;
    return rec;
  };
  auto emit = [&](IterationRecord rec) {
    if (on_iteration) on_iteration(rec);
    trace.records.push_back(std::move(rec));
  };

  for (std::size_t iter = 1;; ++iter) {
    const auto gradients = sim::pool_gradients(psi, ch, pool);
    const double gstar = gradients.empty() ? 0.0 : *std::max_element(gradients.begin(), gradients.end());
    const auto selected = select_operators(gradients, pool, cfg.tetris, cfg.gradient_threshold);
    if (selected.empty()) {
      emit(make_record(iter, gstar));
      trace.stop_reason = StopReason::gradient_threshold;
      break;
    }
    if (energy - cfg.reference_energy <= cfg.target_error) {
      emit(make_record(iter, gstar));
      trace.stop_reason = StopReason::target_error;
      break;
    }

    pauli::QubitMask used = 0;
    std::size_t new_params = 0;
    for (auto idx : selected) {
      const auto& op = pool.operators[idx];
      if (op.support & used) throw std::logic_error("TETRIS selection with overlapping supports");
      used |= op.support;
      trace.ansatz.append(op, idx);
      cnots += op.cnot_cost;
      new_params += op.slot_count();
    }
    const Eigen::MatrixXd warm =
        cfg.recycle_hessian ? expand_inverse_hessian(inverse_hessian, new_params)
                            : Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(trace.ansatz.parameter_count()),
                                                        static_cast<Eigen::Index>(trace.ansatz.parameter_count()));
    InnerResult inner = inner_vqe(ch, trace.ansatz, warm, tolerance, cfg.max_inner_iterations);
    trace.ansatz = std::move(inner.ansatz);
    inverse_hessian = std::move(inner.inverse_hessian);
    psi = sim::prepare_state(trace.ansatz);
    energy = inner.energy;

    IterationRecord rec = make_record(iter, gstar);
    rec.operators_added = selected.size();
    rec.inner_iterations = inner.inner_iterations;
    rec.stalled = inner.stalled;
    rec.selected = selected;
    emit(std::move(rec));

    if (energy - cfg.reference_energy <= cfg.target_error) {
      trace.stop_reason = StopReason::target_error;
      break;
    }
    if (iter >= cfg.max_iterations) {
      trace.stop_reason = StopReason::max_iterations;
      break;
    }
  }
  return trace;
}

}  // namespace adaptscale::adapt
