#pragma once

// Estimation and cloning fidelities as semidefinite programs.
//
// Every program optimizes over Choi-type variables with reference factor
// first. With Omega = fidelity_operator(e), a single-clone channel J scores
// d_in tr(Omega J).
//
//  * fm_upper     separability of J relaxed to PPT, optionally strengthened
//                 by a Bose-symmetric k-extension of the output factor.
//  * fm_seesaw    explicit measure-and-prepare strategies (lower bound).
//  * fc_ext       J must admit an N-extension on reference (x) clone^N,
//                 either permutation invariant (full-perm) or supported on
//                 the symmetric subspace of the clones (bose).
//  * fc_direct    the full N-clone map with no symmetry imposed.
//
// fm_seesaw <= F_M <= fm_upper and F_M <= fc_ext(N) for every N; the
// extension values decrease towards the estimation value as N grows.

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "qcest/channels.hpp"
#include "qcest/ensembles.hpp"
#include "qcest/errors.hpp"
#include "qcest/qmath.hpp"
#include "qcest/sdp.hpp"

namespace qcest {

inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr int kDefaultRestarts = 20;
inline constexpr int kSeesawMaxIterations = 500;
inline constexpr double kSeesawRelImprovement = 1e-9;
inline constexpr double kCertificateGapFlag = 1e-4;
inline constexpr double kMonotoneSlack = 1e-7;

/// Caps on the complex dimension of the optimization variable.
struct OptimLimits {
  int max_direct_dim = 64;    // d_in * d^N   (qubits: N <= 5)
  int max_full_perm_dim = 128; // d_in * d^N   (qubits: N <= 6)
  int max_bose_dim = 82;       // d_in * binom(N+d-1, d-1)  (qubits: N <= 40)
  int max_dps_dim = 128;       // d_in * binom(k+d-1, d-1)
};

struct FidelityBounds {
  double lower = 0.0;
  double upper = 1.0;
  double gap() const { return upper - lower; }
};

enum class ExtMode { full_perm, bose };

inline const char* to_string(ExtMode m) { return m == ExtMode::full_perm ? "ext-full" : "ext-bose"; }

/// Outcome of a single SDP-backed fidelity computation.
struct SolveReport {
  double value = std::numeric_limits<double>::quiet_NaN();
  sdp::Status status = sdp::Status::numerical_limit;
  sdp::Residuals residuals;
  int iterations = 0;
  bool ok() const { return status == sdp::Status::optimal; }
};

namespace detail {

inline std::size_t power(int base, int exp, std::size_t cap) {
  std::size_t out = 1;
  for (int k = 0; k < exp; ++k) out = qcest::detail::checked_product(out, static_cast<std::size_t>(base), cap);
  return out;
}

inline void check_cap(std::size_t dim, int cap, const std::string& what) {
  if (dim > static_cast<std::size_t>(cap))
    throw CapExceeded(what + ": variable dimension " + std::to_string(dim) + " exceeds cap " + std::to_string(cap));
}

/// Constraints tr_rest(X) = I/d_in on a block of dimension d_in * d_rest,
/// built sparsely.
inline void add_trace_preserving(sdp::SdpProblem& p, int block, int d_in, int d_rest) {
  for (int r = 0; r < d_in; ++r)
    for (int c = r; c < d_in; ++c) {
      sdp::Coefficient re{block, {}};
      sdp::Coefficient im{block, {}};
      for (int k = 0; k < d_rest; ++k) {
        const int a = r * d_rest + k;
        const int b = c * d_rest + k;
        if (r == c) {
          re.entries.push_back({a, a, 1.0});
        } else {
          re.entries.push_back({a, b, 0.5});
          re.entries.push_back({b, a, 0.5});
          im.entries.push_back({b, a, cplx(0.0, -0.5)});
          im.entries.push_back({a, b, cplx(0.0, 0.5)});
        }
      }
      p.add_constraint({re}, r == c ? 1.0 / d_in : 0.0);
      if (r != c) p.add_constraint({im}, 0.0);
    }
}

/// Couples block y to the reference-side partial transpose of block x
/// (both of dimension d_ref * d_rest): y = x^{T_ref}.
inline void add_partial_transpose_link(sdp::SdpProblem& p, int x, int y, int d_ref, int d_rest) {
  const int dim = d_ref * d_rest;
  auto swapped = [&](int row, int col) {
    const int rr = row / d_rest, ri = row % d_rest;
    const int cr = col / d_rest, ci = col % d_rest;
    return std::pair<int, int>{cr * d_rest + ri, rr * d_rest + ci};
  };
  for (int a = 0; a < dim; ++a)
    for (int b = a; b < dim; ++b) {
      const auto [sa, sb] = swapped(a, b);
      auto re_y = sdp::Coefficient::real_part(y, a, b);
      auto re_x = sdp::Coefficient::real_part(x, sa, sb, -1.0);
      p.add_constraint({re_y, re_x}, 0.0);
      if (a != b) {
        auto im_y = sdp::Coefficient::imag_part(y, a, b);
        auto im_x = sdp::Coefficient::imag_part(x, sa, sb, -1.0);
        p.add_constraint({im_y, im_x}, 0.0);
      }
    }
}

/// Omega acting on the reference and clone k of reference (x) clone^n,
/// identity elsewhere.
inline ComplexMatrix lift_to_clone(const ComplexMatrix& omega, int d_in, int d, int n, int k) {
  const int dc = static_cast<int>(power(d, n, kDimensionCap));
  const int stride = static_cast<int>(power(d, n - 1 - k, kDimensionCap));
  const int dim = d_in * dc;
  ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
  for (int ci = 0; ci < dc; ++ci) {
    const int digit = (ci / stride) % d;
    const int base = ci - digit * stride;
    for (int b = 0; b < d; ++b) {
      const int cj = base + b * stride;
      for (int r = 0; r < d_in; ++r)
        for (int c = 0; c < d_in; ++c) out(r * dc + ci, c * dc + cj) = omega(r * d + digit, c * d + b);
    }
  }
  return out;
}

template <class T, class Fn>
std::vector<T> ordered_parallel_map(int count, Fn fn) {
  std::vector<T> out(static_cast<std::size_t>(count));
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (hw == 1 || count <= 1) {
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = fn(i);
    return out;
  }
  for (int start = 0; start < count; start += static_cast<int>(hw)) {
    std::vector<std::future<T>> batch;
    const int stop = std::min(count, start + static_cast<int>(hw));
    for (int i = start; i < stop; ++i) batch.push_back(std::async(std::launch::async, fn, i));
    for (int i = start; i < stop; ++i) out[static_cast<std::size_t>(i)] = batch[static_cast<std::size_t>(i - start)].get();
  }
  return out;
}

inline SolveReport report_from(const sdp::SdpSolution& s) {
  return {s.objective, s.status, s.residuals, s.iterations};
}

inline ChoiMatrix choi_from_solver(const ComplexMatrix& m, int d_in, int d_out) {
  return ChoiMatrix(d_in, d_out, HermitianOperator::hermitian_part(restore_trace_preservation(m, d_in)));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Estimation: SDP upper bound

struct UpperBoundResult {
  SolveReport solve;
  int level = 0;
  bool exact = false; // PPT is separability (d_in * d_target <= 6, level 0 or 1)
  std::optional<ChoiMatrix> choi;

  /// "exact" or "upper bound (relaxation level k)".
  std::string bound_kind() const {
    return exact ? std::string("exact") : "upper bound (relaxation level " + std::to_string(level) + ")";
  }
};

/// Upper bound on the estimation fidelity: maximize d_in tr(Omega J) over
/// trace-preserving Choi states J that are PPT (level 0 and 1) or have a
/// PPT Bose-symmetric extension to `level` copies of the output (level >= 2).
inline UpperBoundResult fm_upper(const Ensemble& e, int level = 0, const sdp::SolverOptions& opt = {},
                                 const OptimLimits& lim = {}) {
  if (level < 0) throw DimensionError("relaxation level must be >= 0");
  const int d_in = e.d_in();
  const int d = e.d_target();
  const ComplexMatrix omega = fidelity_operator(e).matrix();
  UpperBoundResult out;
  out.level = level;
  out.exact = level <= 1 && d_in * d <= 6;

  sdp::SdpProblem p;
  if (level <= 1) {
    const int dim = d_in * d;
    detail::check_cap(static_cast<std::size_t>(dim), lim.max_dps_dim, "fm_upper");
    const int x = p.add_block(dim);
    const int y = p.add_block(dim);
    p.add_objective(sdp::Coefficient::dense(x, static_cast<double>(d_in) * omega));
    detail::add_trace_preserving(p, x, d_in, d);
    detail::add_partial_transpose_link(p, x, y, d_in, d);
    const auto sol = sdp::solve(p, opt);
    out.solve = detail::report_from(sol);
    out.choi = detail::choi_from_solver(sol.primal[static_cast<std::size_t>(x)].matrix(), d_in, d);
    return out;
  }
  const SymmetricSubspace sym(d, level);
  const std::size_t dim = static_cast<std::size_t>(d_in) * static_cast<std::size_t>(sym.dim());
  detail::check_cap(dim, lim.max_dps_dim, "fm_upper");
  const int x = p.add_block(static_cast<int>(dim));
  const int y = p.add_block(static_cast<int>(dim));
  p.add_objective(
      sdp::Coefficient::dense(x, static_cast<double>(d_in) * sym_reduce_one_adjoint(omega, d_in, sym), 1e-15));
  detail::add_trace_preserving(p, x, d_in, sym.dim());
  detail::add_partial_transpose_link(p, x, y, d_in, sym.dim());
  const auto sol = sdp::solve(p, opt);
  out.solve = detail::report_from(sol);
  out.choi = detail::choi_from_solver(sym_reduce_one(sol.primal[static_cast<std::size_t>(x)].matrix(), d_in, sym), d_in, d);
  return out;
}

// ---------------------------------------------------------------------------
// Estimation: see-saw over explicit strategies

struct SeesawResult {
  double value = 0.0;
  EstimationStrategy strategy;
  std::vector<double> trace; // objective after every half-step of the winning restart
  int iterations = 0;        // alternations of the winning restart
  int restart = 0;           // index of the winning restart
  bool monotone = true;      // every recorded trace was non-decreasing
};

struct SeesawOptions {
  int outcomes = 0; // 0 selects d_in^2
  int restarts = kDefaultRestarts;
  std::uint64_t seed = kDefaultSeed;
  int max_iterations = kSeesawMaxIterations;
  double rel_improvement = kSeesawRelImprovement;
  sdp::SolverOptions solver = {};
};

namespace detail {

/// Best POVM for fixed guesses: maximize sum_j tr(M_j R_j) subject to
/// sum_j M_j = I, R_j = sum_i p_i |<t_i|phi_j>|^2 in_i in_i^dagger.
inline std::optional<std::vector<HermitianOperator>> povm_step(const Ensemble& e, const std::vector<StateVector>& guesses,
                                                               const sdp::SolverOptions& opt) {
  const int d_in = e.d_in();
  sdp::SdpProblem p;
  for (const auto& g : guesses) {
    ComplexMatrix r = ComplexMatrix::Zero(d_in, d_in);
    for (const auto& it : e.items())
      r += it.weight * std::norm(it.target.amplitudes().dot(g.amplitudes())) * it.input.projector();
    const int b = p.add_block(d_in);
    p.add_objective(sdp::Coefficient::dense(b, 0.5 * (r + r.adjoint())));
  }
  const int n = static_cast<int>(guesses.size());
  for (int r = 0; r < d_in; ++r)
    for (int c = r; c < d_in; ++c) {
      std::vector<sdp::Coefficient> re, im;
      for (int j = 0; j < n; ++j) {
        re.push_back(sdp::Coefficient::real_part(j, r, c));
        if (r != c) im.push_back(sdp::Coefficient::imag_part(j, r, c));
      }
      p.add_constraint(re, r == c ? 1.0 : 0.0);
      if (r != c) p.add_constraint(im, 0.0);
    }
  const auto sol = sdp::solve(p, opt);
  if (sol.status == sdp::Status::infeasible) return std::nullopt;
  // Renormalize so the elements sum to the identity exactly.
  ComplexMatrix sum = ComplexMatrix::Zero(d_in, d_in);
  std::vector<ComplexMatrix> m;
  for (const auto& blk : sol.primal) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(blk.matrix());
    const RealVector ev = es.eigenvalues().cwiseMax(0.0);
    m.push_back(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint());
    sum += m.back();
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (sum + sum.adjoint()));
  if (es.eigenvalues()(0) <= 0.0) return std::nullopt;
  const ComplexMatrix s = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                          es.eigenvectors().adjoint();
  std::vector<HermitianOperator> out;
  for (const auto& mj : m) out.push_back(HermitianOperator::hermitian_part(s * mj * s));
  return out;
}

/// Best guesses for a fixed POVM: top eigenvector of
/// S_j = sum_i p_i tr(M_j in_i in_i^dagger) t_i t_i^dagger.
inline std::vector<StateVector> guess_step(const Ensemble& e, const std::vector<HermitianOperator>& povm,
                                           const std::vector<StateVector>& previous) {
  std::vector<StateVector> out;
  for (std::size_t j = 0; j < povm.size(); ++j) {
    ComplexMatrix s = ComplexMatrix::Zero(e.d_target(), e.d_target());
    for (const auto& it : e.items()) {
      const double prob = it.input.amplitudes().dot(povm[j].matrix() * it.input.amplitudes()).real();
      s += it.weight * prob * it.target.projector();
    }
    if (s.trace().real() < 1e-14) {
      out.push_back(previous[j]);
      continue;
    }
    const auto dec = eigh(HermitianOperator::hermitian_part(s));
    const double top = dec.values(dec.values.size() - 1);
    // lowest-index eigenvector of a degenerate top eigenvalue
    Eigen::Index pick = dec.values.size() - 1;
    for (Eigen::Index k = 0; k < dec.values.size(); ++k)
      if (top - dec.values(k) <= 1e-12 * std::max(1.0, std::abs(top))) {
        pick = k;
        break;
      }
    out.push_back(StateVector::normalized(dec.vectors.col(pick)));
  }
  return out;
}

} // namespace detail

/// Lower bound on the estimation fidelity by alternating between the POVM
/// (an SDP for fixed guesses) and the guesses (eigenvectors for a fixed POVM).
inline SeesawResult fm_seesaw(const Ensemble& e, const SeesawOptions& o = {}) {
  const int outcomes = o.outcomes > 0 ? o.outcomes : e.d_in() * e.d_in();
  const int restarts = std::max(1, o.restarts);
  std::mt19937_64 rng(o.seed);
  SeesawResult best;
  best.value = -1.0;
  bool all_monotone = true;
  for (int run = 0; run < restarts; ++run) {
    std::vector<StateVector> guesses;
    for (int j = 0; j < outcomes; ++j) guesses.push_back(random_state(e.d_target(), rng));
    std::vector<HermitianOperator> povm;
    {
      // Trivial starting POVM: everything on the first outcome.
      povm.assign(static_cast<std::size_t>(outcomes), HermitianOperator::zero(e.d_in()));
      povm[0] = HermitianOperator::identity(e.d_in());
    }
    auto value_of = [&](const std::vector<HermitianOperator>& m, const std::vector<StateVector>& g) {
      return estimation_fidelity(EstimationStrategy{m, g}, e);
    };
    double value = value_of(povm, guesses);
    std::vector<double> trace{value};
    int it = 0;
    for (; it < o.max_iterations; ++it) {
      const double before = value;
      if (auto next = detail::povm_step(e, guesses, o.solver)) {
        const double v = value_of(*next, guesses);
        if (v >= value) {
          povm = std::move(*next);
          value = v;
        }
      }
      trace.push_back(value);
      auto next_guesses = detail::guess_step(e, povm, guesses);
      const double v = value_of(povm, next_guesses);
      if (v >= value) {
        guesses = std::move(next_guesses);
        value = v;
      }
      trace.push_back(value);
      if (value - before <= o.rel_improvement * std::max(std::abs(before), 1e-300)) {
        ++it;
        break;
      }
    }
    for (std::size_t k = 1; k < trace.size(); ++k)
      if (trace[k] < trace[k - 1]) all_monotone = false;
    if (value > best.value) {
      best.value = value;
      best.strategy = EstimationStrategy{povm, guesses};
      best.trace = trace;
      best.iterations = it;
      best.restart = run;
    }
  }
  best.monotone = all_monotone;
  best.strategy.validate();
  return best;
}

// ---------------------------------------------------------------------------
// Cloning

/// Assembled N-extension program together with the bookkeeping needed to
/// read the single-clone Choi state back from the solution.
struct ExtendibleProgram {
  int d_in = 0;
  int d = 0;
  int clones = 0;
  ExtMode mode = ExtMode::full_perm;
  sdp::SdpProblem problem;
  int block = 0;
  int variable_dim = 0;
  std::optional<SymmetricSubspace> sym; // bose mode only

  ComplexMatrix single_clone_marginal(const ComplexMatrix& x) const {
    if (mode == ExtMode::bose) return sym_reduce_one(x, d_in, *sym);
    std::vector<int> f{d_in};
    f.insert(f.end(), static_cast<std::size_t>(clones), d);
    return partial_trace(x, DimsLayout(f), {0, 1});
  }
};

inline ExtendibleProgram build_extendible_program(const Ensemble& e, int n, ExtMode mode, const OptimLimits& lim = {}) {
  if (n < 1) throw DimensionError("clone count must be >= 1");
  ExtendibleProgram prog;
  prog.d_in = e.d_in();
  prog.d = e.d_target();
  prog.clones = n;
  prog.mode = mode;
  const ComplexMatrix omega = fidelity_operator(e).matrix();
  const double scale = static_cast<double>(prog.d_in);

  if (mode == ExtMode::bose) {
    if (binomial(n + prog.d - 1, prog.d - 1) * static_cast<std::size_t>(prog.d_in) > static_cast<std::size_t>(lim.max_bose_dim))
      throw CapExceeded("fc_ext(bose): variable dimension exceeds cap " + std::to_string(lim.max_bose_dim));
    prog.sym.emplace(prog.d, n);
    prog.variable_dim = prog.d_in * prog.sym->dim();
    prog.block = prog.problem.add_block(prog.variable_dim);
    prog.problem.add_objective(
        sdp::Coefficient::dense(prog.block, scale * sym_reduce_one_adjoint(omega, prog.d_in, *prog.sym), 1e-15));
    detail::add_trace_preserving(prog.problem, prog.block, prog.d_in, prog.sym->dim());
    return prog;
  }

  const std::size_t dc = detail::power(prog.d, n, static_cast<std::size_t>(lim.max_full_perm_dim) + 1);
  detail::check_cap(dc * static_cast<std::size_t>(prog.d_in), lim.max_full_perm_dim, "fc_ext(full-perm)");
  prog.variable_dim = prog.d_in * static_cast<int>(dc);
  prog.block = prog.problem.add_block(prog.variable_dim);
  prog.problem.add_objective(
      sdp::Coefficient::dense(prog.block, scale * detail::lift_to_clone(omega, prog.d_in, prog.d, n, 0)));
  detail::add_trace_preserving(prog.problem, prog.block, prog.d_in, static_cast<int>(dc));
  if (n >= 2) {
    // Invariance under the transposition (0 1) and the cycle k -> k+1
    // generates invariance under every clone permutation.
    Permutation swap01(static_cast<std::size_t>(n));
    std::iota(swap01.begin(), swap01.end(), 0);
    std::swap(swap01[0], swap01[1]);
    Permutation cycle(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) cycle[static_cast<std::size_t>(k)] = (k + 1) % n;
    std::vector<Permutation> gens{swap01};
    if (n > 2) gens.push_back(cycle);
    for (const auto& gen : gens) {
      const auto g = perm_index_map(prog.d, n, gen);
      bool involution = true;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (g[static_cast<std::size_t>(g[i])] != static_cast<int>(i)) involution = false;
      auto full = [&](int a) {
        return (a / static_cast<int>(dc)) * static_cast<int>(dc) + g[static_cast<std::size_t>(a % static_cast<int>(dc))];
      };
      for (int a = 0; a < prog.variable_dim; ++a)
        for (int b = a; b < prog.variable_dim; ++b) {
          const int ga = full(a);
          const int gb = full(b);
          if (ga == a && gb == b) continue;
          // X(g a, g b) = X(a, b). For an involution the equation for the
          // image pair repeats this one, so keep only the first.
          if (involution && std::pair<int, int>(std::min(ga, gb), std::max(ga, gb)) < std::pair<int, int>(a, b)) continue;
          prog.problem.add_constraint(
              {sdp::Coefficient::real_part(prog.block, a, b), sdp::Coefficient::real_part(prog.block, ga, gb, -1.0)}, 0.0);
          if (a != b)
            prog.problem.add_constraint({sdp::Coefficient::imag_part(prog.block, a, b),
                                         sdp::Coefficient::imag_part(prog.block, ga, gb, -1.0)},
                                        0.0);
        }
    }
  }
  return prog;
}

struct CloneResult {
  SolveReport solve;
  std::optional<ChoiMatrix> marginal; // single-clone Choi state
  double negativity = std::numeric_limits<double>::quiet_NaN();
};

/// Optimal cloning fidelity from N-extendible single-clone Choi states.
inline CloneResult fc_ext(const Ensemble& e, int n, ExtMode mode, const sdp::SolverOptions& opt = {},
                          const OptimLimits& lim = {}) {
  const auto prog = build_extendible_program(e, n, mode, lim);
  const auto sol = sdp::solve(prog.problem, opt);
  CloneResult out;
  out.solve = detail::report_from(sol);
  out.marginal = detail::choi_from_solver(
      prog.single_clone_marginal(sol.primal[static_cast<std::size_t>(prog.block)].matrix()), prog.d_in, prog.d);
  out.negativity = negativity(*out.marginal);
  return out;
}

struct DirectCloneResult {
  SolveReport solve;
  std::optional<MultiCloneChoi> map;
};

/// Optimal average clone fidelity over the full N-output map; no symmetry
/// is imposed on the variable.
inline DirectCloneResult fc_direct(const Ensemble& e, int n, const sdp::SolverOptions& opt = {}, const OptimLimits& lim = {}) {
  if (n < 1) throw DimensionError("clone count must be >= 1");
  const int d_in = e.d_in();
  const int d = e.d_target();
  const std::size_t dc = detail::power(d, n, static_cast<std::size_t>(lim.max_direct_dim) + 1);
  detail::check_cap(dc * static_cast<std::size_t>(d_in), lim.max_direct_dim, "fc_direct");
  const ComplexMatrix omega = fidelity_operator(e).matrix();
  const int dim = d_in * static_cast<int>(dc);
  ComplexMatrix cost = ComplexMatrix::Zero(dim, dim);
  for (int k = 0; k < n; ++k) cost += detail::lift_to_clone(omega, d_in, d, n, k);
  cost *= static_cast<double>(d_in) / n;

  sdp::SdpProblem p;
  const int x = p.add_block(dim);
  p.add_objective(sdp::Coefficient::dense(x, cost));
  detail::add_trace_preserving(p, x, d_in, static_cast<int>(dc));
  const auto sol = sdp::solve(p, opt);
  DirectCloneResult out;
  out.solve = detail::report_from(sol);
  out.map = MultiCloneChoi(d_in, d, n,
                           HermitianOperator::hermitian_part(restore_trace_preservation(sol.primal[0].matrix(), d_in)));
  return out;
}

// ---------------------------------------------------------------------------
// Convergence of F_C(N) towards the estimation fidelity

enum class Formulation { ext_full, ext_bose, direct };

inline const char* to_string(Formulation f) {
  switch (f) {
  case Formulation::ext_full: return "ext-full";
  case Formulation::ext_bose: return "ext-bose";
  case Formulation::direct: return "direct";
  }
  return "unknown";
}

inline Formulation parse_formulation(const std::string& s) {
  if (s == "ext-full") return Formulation::ext_full;
  if (s == "ext-bose") return Formulation::ext_bose;
  if (s == "direct") return Formulation::direct;
  throw UsageError("unknown formulation '" + s + "' (expected ext-full, ext-bose or direct)");
}

struct ConvergenceRow {
  int n = 0;
  double value = std::numeric_limits<double>::quiet_NaN();
  Formulation mode = Formulation::ext_bose;
  double negativity = std::numeric_limits<double>::quiet_NaN();
  std::string status;  // solver status or "error: ..."
  sdp::Residuals residuals;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  FidelityBounds fm_bounds;
  std::string fm_bound_kind;
  bool monotone = true;
  double final_gap = std::numeric_limits<double>::quiet_NaN();
  bool all_optimal() const {
    return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.status == "optimal"; });
  }
};

/// One F_C(N) evaluation with the negativity of its single-clone marginal.
inline ConvergenceRow clone_row(const Ensemble& e, int n, Formulation mode, const sdp::SolverOptions& opt = {},
                                const OptimLimits& lim = {}) {
  ConvergenceRow row;
  row.n = n;
  row.mode = mode;
  try {
    if (mode == Formulation::direct) {
      const auto r = fc_direct(e, n, opt, lim);
      row.value = r.solve.value;
      row.status = sdp::to_string(r.solve.status);
      row.residuals = r.solve.residuals;
      const auto sym = n <= kMaxSymmetrizeClones ? symmetrize(*r.map) : *r.map;
      row.negativity = negativity(marginal_choi(sym, 0));
    } else {
      const auto r = fc_ext(e, n, mode == Formulation::ext_full ? ExtMode::full_perm : ExtMode::bose, opt, lim);
      row.value = r.solve.value;
      row.status = sdp::to_string(r.solve.status);
      row.residuals = r.solve.residuals;
      row.negativity = r.negativity;
    }
  } catch (const Error& err) {
    row.status = std::string("error: ") + err.what();
  }
  return row;
}

struct ConvergeOptions {
  Formulation mode = Formulation::ext_bose;
  SeesawOptions seesaw = {};
  int fm_level = 0;
  sdp::SolverOptions solver = {};
  OptimLimits limits = {};
};

/// Tabulates F_C(N) for N = 1..n_max against bounds on the estimation
/// fidelity. Rows are independent and evaluated concurrently; their order
/// and values do not depend on scheduling.
inline ConvergenceReport converge(const Ensemble& e, int n_max, const ConvergeOptions& o = {}) {
  if (n_max < 2) throw DimensionError("converge needs n_max >= 2");
  ConvergenceReport rep;
  rep.rows = detail::ordered_parallel_map<ConvergenceRow>(
      n_max, [&](int i) { return clone_row(e, i + 1, o.mode, o.solver, o.limits); });
  const auto lower = fm_seesaw(e, o.seesaw);
  const auto upper = fm_upper(e, o.fm_level, o.solver, o.limits);
  rep.fm_bounds = {lower.value, upper.solve.value};
  rep.fm_bound_kind = upper.bound_kind();
  for (std::size_t k = 1; k < rep.rows.size(); ++k)
    if (!(rep.rows[k].value <= rep.rows[k - 1].value + kMonotoneSlack)) rep.monotone = false;
  rep.final_gap = rep.rows.back().value - rep.fm_bounds.lower;
  return rep;
}

// ---------------------------------------------------------------------------
// Asymmetric trade-off: one A clone against N_B B clones

struct TradeoffPoint {
  double fa = 0.0;
  double fb = std::numeric_limits<double>::quiet_NaN();
  std::string status;
  sdp::Residuals residuals;
};

struct TradeoffCurve {
  int nb = 0;
  std::vector<TradeoffPoint> points;
  bool monotone = true; // F_B non-increasing in F_A over solved points (slack 1e-6)
};

/// Largest average fidelity of the B clones subject to fidelity >= F_A on
/// the A clone.
inline TradeoffPoint tradeoff_point(const Ensemble& e, int nb, double fa, const sdp::SolverOptions& opt = {},
                                    const OptimLimits& lim = {}) {
  TradeoffPoint pt;
  pt.fa = fa;
  if (nb < 1) throw DimensionError("N_B must be >= 1");
  if (!(fa <= 1.0 + 1e-12)) {
    pt.status = "infeasible";
    return pt;
  }
  const int d_in = e.d_in();
  const int d = e.d_target();
  const int n = 1 + nb;
  const std::size_t dc = detail::power(d, n, static_cast<std::size_t>(lim.max_direct_dim) + 1);
  detail::check_cap(dc * static_cast<std::size_t>(d_in), lim.max_direct_dim, "asym_tradeoff");
  const ComplexMatrix omega = fidelity_operator(e).matrix();
  const int dim = d_in * static_cast<int>(dc);
  ComplexMatrix cost = ComplexMatrix::Zero(dim, dim);
  for (int k = 1; k < n; ++k) cost += detail::lift_to_clone(omega, d_in, d, n, k);
  cost *= static_cast<double>(d_in) / nb;
  const ComplexMatrix clone_a = static_cast<double>(d_in) * detail::lift_to_clone(omega, d_in, d, n, 0);

  sdp::SdpProblem p;
  const int x = p.add_block(dim);
  const int slack = p.add_block(1);
  p.add_objective(sdp::Coefficient::dense(x, cost));
  detail::add_trace_preserving(p, x, d_in, static_cast<int>(dc));
  p.add_constraint({sdp::Coefficient::dense(x, clone_a), sdp::Coefficient::real_part(slack, 0, 0, -1.0)}, fa);
  try {
    const auto sol = sdp::solve(p, opt);
    pt.fb = sol.objective;
    pt.status = sdp::to_string(sol.status);
    pt.residuals = sol.residuals;
  } catch (const Error& err) {
    pt.status = std::string("error: ") + err.what();
  }
  return pt;
}

inline TradeoffCurve asym_tradeoff(const Ensemble& e, int nb, const std::vector<double>& fa_grid,
                                   const sdp::SolverOptions& opt = {}, const OptimLimits& lim = {}) {
  if (nb < 1) throw DimensionError("N_B must be >= 1");
  // Surface cap violations once, up front, rather than per point.
  detail::check_cap(detail::power(e.d_target(), nb + 1, static_cast<std::size_t>(lim.max_direct_dim) + 1) *
                        static_cast<std::size_t>(e.d_in()),
                    lim.max_direct_dim, "asym_tradeoff");
  TradeoffCurve curve;
  curve.nb = nb;
  curve.points = detail::ordered_parallel_map<TradeoffPoint>(
      static_cast<int>(fa_grid.size()),
      [&](int i) { return tradeoff_point(e, nb, fa_grid[static_cast<std::size_t>(i)], opt, lim); });
  std::vector<const TradeoffPoint*> solved;
  for (const auto& p : curve.points)
    if (std::isfinite(p.fb) && p.status.rfind("error", 0) != 0 && p.status != "infeasible") solved.push_back(&p);
  std::sort(solved.begin(), solved.end(), [](auto* a, auto* b) { return a->fa < b->fa; });
  for (std::size_t k = 1; k < solved.size(); ++k)
    if (solved[k]->fb > solved[k - 1]->fb + 1e-6) curve.monotone = false;
  return curve;
}

/// k evenly spaced F_A values from the blind-guess fidelity up to 1.
inline std::vector<double> default_tradeoff_grid(const Ensemble& e, int k) {
  if (k < 2) throw UsageError("trade-off grid needs at least 2 points");
  const double lo = blind_guess_value(e);
  std::vector<double> grid;
  for (int i = 0; i < k; ++i) grid.push_back(lo + (1.0 - lo) * i / (k - 1));
  return grid;
}

} // namespace qcest
