#pragma once

// Channels in Choi form.
//
// The Choi state of a channel L from C^{d_in} to C^{d_out} is
//   J = (1 (x) L)(|Phi+><Phi+|),  |Phi+> = sum_i |ii>/sqrt(d_in),
// with the reference factor first. J >= 0, tr J = 1 and trace preservation
// reads tr_out J = I/d_in. A channel acting on half of |Phi+> and producing
// n clones gives a state on reference (x) clone^n whose reference-clone_k
// marginals are the single-clone Choi states.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "qcest/ensembles.hpp"
#include "qcest/errors.hpp"
#include "qcest/json_io.hpp"
#include "qcest/qmath.hpp"

namespace qcest {

inline constexpr double kChoiPsdTol = 1e-9;
inline constexpr double kChoiTraceTol = 1e-9;
inline constexpr double kChoiTpTol = 1e-8;
inline constexpr double kPptTol = 1e-9;
inline constexpr int kMaxSymmetrizeClones = 6;

/// Measurement {M_j} followed by preparation of the pure guess |phi_j>.
struct EstimationStrategy {
  std::vector<HermitianOperator> povm;
  std::vector<StateVector> guesses;

  int outcomes() const { return static_cast<int>(povm.size()); }

  /// Throws InvariantError unless counts match, M_j >= -1e-10 and
  /// sum_j M_j = I within 1e-9.
  void validate() const {
    if (povm.empty()) throw InvariantError("strategy needs at least one outcome");
    if (povm.size() != guesses.size()) throw InvariantError("POVM and guess counts differ");
    const int d = povm.front().dim();
    ComplexMatrix sum = ComplexMatrix::Zero(d, d);
    for (const auto& m : povm) {
      if (m.dim() != d) throw DimensionError("POVM elements have inconsistent dimensions");
      if (min_eigenvalue(m.matrix()) < -1e-10) throw InvariantError("POVM element is not positive semidefinite");
      sum += m.matrix();
    }
    const double dev = (sum - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
    if (dev > 1e-9) throw InvariantError("POVM does not sum to identity (deviation " + std::to_string(dev) + ")");
    const int dg = guesses.front().dim();
    for (const auto& g : guesses)
      if (g.dim() != dg) throw DimensionError("guess states have inconsistent dimensions");
  }
};

/// sum_{i,j} p_i tr(M_j in_i in_i^dagger) |<target_i|phi_j>|^2, summed directly.
inline double estimation_fidelity(const EstimationStrategy& s, const Ensemble& e) {
  if (s.povm.empty() || s.povm.front().dim() != e.d_in() || s.guesses.front().dim() != e.d_target())
    throw DimensionError("strategy dimensions do not match the ensemble");
  double total = 0.0;
  for (const auto& it : e.items()) {
    const ComplexVector& in = it.input.amplitudes();
    for (std::size_t j = 0; j < s.povm.size(); ++j) {
      const double prob = in.dot(s.povm[j].matrix() * in).real();
      const double overlap = std::norm(it.target.amplitudes().dot(s.guesses[j].amplitudes()));
      total += it.weight * prob * overlap;
    }
  }
  return total;
}

namespace detail {

inline void check_choi(const ComplexMatrix& m, int d_in, int d_out_total, const char* what) {
  if (d_in < 2) throw DimensionError(std::string(what) + ": input dimension must be >= 2");
  if (m.rows() != static_cast<Eigen::Index>(d_in) * d_out_total || m.cols() != m.rows())
    throw DimensionError(std::string(what) + ": matrix dimension does not match d_in * d_out");
  const double tr = m.trace().real();
  if (std::abs(tr - 1.0) > kChoiTraceTol) throw InvariantError(std::string(what) + ": trace is " + std::to_string(tr));
  if (min_eigenvalue(m) < -kChoiPsdTol) throw InvariantError(std::string(what) + ": not positive semidefinite");
  const ComplexMatrix ref = partial_trace(m, DimsLayout{d_in, d_out_total}, {0});
  const double dev = (ref - ComplexMatrix::Identity(d_in, d_in) / d_in).cwiseAbs().maxCoeff();
  if (dev > kChoiTpTol)
    throw InvariantError(std::string(what) + ": not trace preserving (deviation " + std::to_string(dev) + ")");
}

} // namespace detail

/// Normalized Choi state of a single-output channel.
class ChoiMatrix {
public:
  ChoiMatrix() = default;
  ChoiMatrix(int d_in, int d_out, HermitianOperator state) : d_in_(d_in), d_out_(d_out), state_(std::move(state)) {
    if (d_out < 2) throw DimensionError("ChoiMatrix: output dimension must be >= 2");
    detail::check_choi(state_.matrix(), d_in, d_out, "ChoiMatrix");
  }

  int d_in() const { return d_in_; }
  int d_out() const { return d_out_; }
  const HermitianOperator& state() const { return state_; }
  const ComplexMatrix& matrix() const { return state_.matrix(); }
  DimsLayout layout() const { return DimsLayout{d_in_, d_out_}; }

private:
  int d_in_ = 0;
  int d_out_ = 0;
  HermitianOperator state_;
};

/// Choi state of a map producing n_clones outputs of dimension d_clone.
class MultiCloneChoi {
public:
  MultiCloneChoi() = default;
  MultiCloneChoi(int d_in, int d_clone, int n_clones, HermitianOperator state)
      : d_in_(d_in), d_clone_(d_clone), n_clones_(n_clones), state_(std::move(state)) {
    if (d_clone < 2 || n_clones < 1) throw DimensionError("MultiCloneChoi: need d_clone >= 2 and n_clones >= 1");
    detail::check_choi(state_.matrix(), d_in, clone_space_dim(), "MultiCloneChoi");
  }

  int d_in() const { return d_in_; }
  int d_clone() const { return d_clone_; }
  int n_clones() const { return n_clones_; }
  const HermitianOperator& state() const { return state_; }
  const ComplexMatrix& matrix() const { return state_.matrix(); }

  int clone_space_dim() const {
    std::size_t dim = 1;
    for (int k = 0; k < n_clones_; ++k)
      dim = qcest::detail::checked_product(dim, static_cast<std::size_t>(d_clone_), kDimensionCap);
    return static_cast<int>(dim);
  }

  DimsLayout layout() const {
    std::vector<int> f{d_in_};
    f.insert(f.end(), static_cast<std::size_t>(n_clones_), d_clone_);
    return DimsLayout(f);
  }

private:
  int d_in_ = 0;
  int d_clone_ = 0;
  int n_clones_ = 0;
  HermitianOperator state_;
};

/// Rescales the reference factor so that tr_out J = I/d_in holds exactly:
/// J -> (A (x) I) J (A (x) I) with A = (d_in tr_out J)^{-1/2}. Used to
/// clean solver output, whose constraints hold only to solver tolerance.
inline ComplexMatrix restore_trace_preservation(const ComplexMatrix& j, int d_in) {
  const int d_out = static_cast<int>(j.rows()) / d_in;
  const ComplexMatrix ref = static_cast<double>(d_in) * partial_trace(0.5 * (j + j.adjoint()), DimsLayout{d_in, d_out}, {0});
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (ref + ref.adjoint()));
  const RealVector inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const ComplexMatrix a = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint();
  const ComplexMatrix big = kron(a, ComplexMatrix::Identity(d_out, d_out));
  ComplexMatrix out = big * j * big;
  return 0.5 * (out + out.adjoint());
}

// ---------------------------------------------------------------------------
// Reference channels

inline ChoiMatrix identity_choi(int d) {
  return ChoiMatrix(d, d, HermitianOperator::projector(max_entangled(d)));
}

/// Fully depolarizing channel rho -> I/d_out.
inline ChoiMatrix depolarizing_choi(int d_in, int d_out) {
  return ChoiMatrix(d_in, d_out,
                    HermitianOperator(ComplexMatrix::Identity(d_in * d_out, d_in * d_out) / static_cast<double>(d_in * d_out)));
}

/// Ignores the input and prepares phi^{(x)n}.
inline MultiCloneChoi product_preparation(int d_in, const StateVector& phi, int n) {
  const ComplexMatrix out = kron_power(phi.projector(), n);
  return MultiCloneChoi(d_in, phi.dim(), n,
                        HermitianOperator::hermitian_part(kron(ComplexMatrix(ComplexMatrix::Identity(d_in, d_in) / d_in), out)));
}

// ---------------------------------------------------------------------------
// Operations

/// Choi state of rho -> sum_j tr(M_j rho) |phi_j><phi_j|, which is
/// sum_j M_j^T / d_in (x) |phi_j><phi_j|.
inline ChoiMatrix choi_from_measure_prepare(const EstimationStrategy& s, int d_in, int d_out) {
  s.validate();
  if (s.povm.front().dim() != d_in || s.guesses.front().dim() != d_out)
    throw DimensionError("strategy dimensions do not match the requested channel");
  ComplexMatrix j = ComplexMatrix::Zero(d_in * d_out, d_in * d_out);
  for (std::size_t k = 0; k < s.povm.size(); ++k)
    j += kron(ComplexMatrix(s.povm[k].matrix().transpose() / d_in), s.guesses[k].projector());
  return ChoiMatrix(d_in, d_out, HermitianOperator::hermitian_part(j));
}

/// sum_i p_i <t_i| L(in_i) |t_i>, evaluated as d_in tr(Omega J).
inline double channel_fidelity(const ChoiMatrix& j, const Ensemble& e) {
  if (j.d_in() != e.d_in() || j.d_out() != e.d_target())
    throw DimensionError("channel dimensions do not match the ensemble");
  const HermitianOperator omega = fidelity_operator(e);
  return static_cast<double>(e.d_in()) * (omega.matrix() * j.matrix()).trace().real();
}

/// L(rho) = d_in tr_ref((rho^T (x) I) J).
inline HermitianOperator apply_channel(const ChoiMatrix& j, const HermitianOperator& rho) {
  if (rho.dim() != j.d_in()) throw DimensionError("input state dimension does not match the channel");
  const ComplexMatrix lifted = kron(ComplexMatrix(rho.matrix().transpose()), ComplexMatrix::Identity(j.d_out(), j.d_out()));
  const ComplexMatrix out = static_cast<double>(j.d_in()) * partial_trace(ComplexMatrix(lifted * j.matrix()), j.layout(), {1});
  return HermitianOperator::hermitian_part(out);
}

/// Partial transpose on the reference factor.
inline ComplexMatrix reference_partial_transpose(const ChoiMatrix& j) {
  return partial_transpose(j.matrix(), j.layout(), 0);
}

/// Sum of |negative eigenvalues| of the reference-side partial transpose.
inline double negativity(const ChoiMatrix& j) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(reference_partial_transpose(j), Eigen::EigenvaluesOnly);
  double neg = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
    if (es.eigenvalues()(k) < 0.0) neg -= es.eigenvalues()(k);
  return neg;
}

inline bool is_ppt(const ChoiMatrix& j, double tol = kPptTol) {
  return min_eigenvalue(reference_partial_transpose(j)) >= -tol;
}

/// PPT is sufficient for separability when d_in * d_out <= 6.
inline bool ppt_is_exact(const ChoiMatrix& j) { return j.d_in() * j.d_out() <= 6; }

/// Choi state of the channel onto clone k alone.
inline ChoiMatrix marginal_choi(const MultiCloneChoi& jn, int k) {
  if (k < 0 || k >= jn.n_clones()) throw DimensionError("clone index " + std::to_string(k) + " out of range");
  const auto layout = jn.layout();
  const ComplexMatrix m = partial_trace(jn.matrix(), layout, {0, 1 + k});
  return ChoiMatrix(jn.d_in(), jn.d_clone(), HermitianOperator::hermitian_part(m));
}

/// Average of (I (x) P_pi) J (I (x) P_pi)^dagger over all clone permutations.
inline MultiCloneChoi symmetrize(const MultiCloneChoi& jn) {
  const int n = jn.n_clones();
  if (n > kMaxSymmetrizeClones)
    throw CapExceeded("symmetrize supports at most " + std::to_string(kMaxSymmetrizeClones) + " clones");
  Permutation perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  const int dc = jn.clone_space_dim();
  const int dim = jn.d_in() * dc;
  ComplexMatrix acc = ComplexMatrix::Zero(dim, dim);
  int count = 0;
  do {
    const auto g = perm_index_map(jn.d_clone(), n, perm);
    std::vector<int> full(static_cast<std::size_t>(dim));
    for (int r = 0; r < jn.d_in(); ++r)
      for (int c = 0; c < dc; ++c) full[static_cast<std::size_t>(r * dc + c)] = r * dc + g[static_cast<std::size_t>(c)];
    for (int b = 0; b < dim; ++b)
      for (int a = 0; a < dim; ++a) acc(full[static_cast<std::size_t>(a)], full[static_cast<std::size_t>(b)]) += jn.matrix()(a, b);
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return MultiCloneChoi(jn.d_in(), jn.d_clone(), n, HermitianOperator::hermitian_part(acc / count));
}

inline double average_clone_fidelity(const MultiCloneChoi& jn, const Ensemble& e) {
  if (jn.d_in() != e.d_in() || jn.d_clone() != e.d_target())
    throw DimensionError("channel dimensions do not match the ensemble");
  double total = 0.0;
  for (int k = 0; k < jn.n_clones(); ++k) total += channel_fidelity(marginal_choi(jn, k), e);
  return total / jn.n_clones();
}

// ---------------------------------------------------------------------------
// Choi file format

inline io::json to_json(const ChoiMatrix& j) {
  io::json out;
  out["d_in"] = j.d_in();
  out["d_out"] = j.d_out();
  out["matrix"] = io::encode(j.matrix());
  return out;
}

inline io::json to_json(const MultiCloneChoi& j) {
  io::json out;
  out["d_in"] = j.d_in();
  out["d_clone"] = j.d_clone();
  out["n_clones"] = j.n_clones();
  out["matrix"] = io::encode(j.matrix());
  return out;
}

/// A Choi file holds either a single-output channel ("d_out") or a
/// multi-clone map ("d_clone" and "n_clones"); a single-output channel is
/// returned as a one-clone map.
inline MultiCloneChoi choi_from_json(const io::json& j, const std::string& source = "choi") {
  if (!j.is_object()) throw SchemaError(source + ": top level must be an object");
  const int d_in = io::require_int(j, "d_in", source);
  int d_clone = 0;
  int n = 1;
  if (j.contains("d_out")) {
    d_clone = io::require_int(j, "d_out", source);
  } else {
    d_clone = io::require_int(j, "d_clone", source);
    n = io::require_int(j, "n_clones", source);
  }
  if (!j.contains("matrix")) throw SchemaError(source + ": missing \"matrix\"");
  const ComplexMatrix m = io::decode_matrix(j["matrix"], source);
  try {
    return MultiCloneChoi(d_in, d_clone, n, HermitianOperator(m));
  } catch (const Error& e) {
    throw SchemaError(source + ": " + e.what());
  }
}

inline MultiCloneChoi load_choi(const std::string& path) {
  return choi_from_json(io::read_json_file(path), path);
}

inline void save_choi(const ChoiMatrix& j, const std::string& path) { io::write_file(path, io::dump(to_json(j))); }
inline void save_choi(const MultiCloneChoi& j, const std::string& path) { io::write_file(path, io::dump(to_json(j))); }

} // namespace qcest
