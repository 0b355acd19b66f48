#pragma once

// Dense complex linear algebra for small tensor-product spaces.
//
// Tensor factors are ordered most-significant first: in A (x) B the basis
// index is i_A * dim(B) + i_B, which is the ordering produced by kron().

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qcest/errors.hpp"

namespace qcest {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Largest Hilbert-space dimension any single operator may reach.
inline constexpr std::size_t kDimensionCap = 4096;

inline constexpr double kHermiticityTol = 1e-12;
inline constexpr double kNormTol = 1e-12;

namespace detail {

inline double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline std::size_t checked_product(std::size_t a, std::size_t b, std::size_t cap) {
  if (a != 0 && b > cap / a) throw CapExceeded("dimension product exceeds cap " + std::to_string(cap));
  if (a * b > cap) throw CapExceeded("dimension " + std::to_string(a * b) + " exceeds cap " + std::to_string(cap));
  return a * b;
}

inline bool all_finite(const ComplexMatrix& m) {
  return m.allFinite();
}

} // namespace detail

/// Complex vector of unit norm with a canonical global phase: the first
/// amplitude whose modulus exceeds 1e-12 is real and non-negative.
class StateVector {
public:
  StateVector() = default;

  /// Requires |v| = 1 within 1e-12; only the phase is adjusted.
  explicit StateVector(ComplexVector v) : amps_(std::move(v)) {
    if (amps_.size() == 0) throw InvariantError("empty state vector");
    if (!amps_.allFinite()) throw InvariantError("state vector has non-finite entries");
    const double n = amps_.norm();
    if (std::abs(n - 1.0) > kNormTol)
      throw InvariantError("state vector not normalized (norm " + std::to_string(n) + ")");
    canonicalize();
  }

  /// Divides by the norm first.
  static StateVector normalized(const ComplexVector& v) {
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw InvariantError("cannot normalize zero or non-finite vector");
    return StateVector(v / n);
  }

  static StateVector basis(int dim, int k) {
    if (dim < 1 || k < 0 || k >= dim) throw DimensionError("basis index out of range");
    ComplexVector v = ComplexVector::Zero(dim);
    v(k) = 1.0;
    return StateVector(std::move(v));
  }

  int dim() const { return static_cast<int>(amps_.size()); }
  const ComplexVector& amplitudes() const { return amps_; }
  cplx operator()(int i) const { return amps_(i); }

  ComplexMatrix projector() const { return amps_ * amps_.adjoint(); }

  friend bool operator==(const StateVector& a, const StateVector& b) {
    return a.amps_.size() == b.amps_.size() && a.amps_ == b.amps_;
  }

private:
  void canonicalize() {
    for (Eigen::Index i = 0; i < amps_.size(); ++i) {
      const double mod = std::abs(amps_(i));
      if (mod > 1e-12) {
        const cplx phase = std::conj(amps_(i)) / mod;
        amps_ *= phase;
        amps_(i) = cplx(mod, 0.0);
        return;
      }
    }
  }

  ComplexVector amps_;
};

/// Square complex matrix equal to its adjoint. Construction symmetrizes
/// away drift up to 1e-12 (relative to the largest entry when that exceeds
/// one) and rejects anything larger.
class HermitianOperator {
public:
  HermitianOperator() = default;

  explicit HermitianOperator(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("Hermitian operator must be square");
    if (!detail::all_finite(m)) throw InvariantError("operator has non-finite entries");
    const double scale = std::max(1.0, detail::max_abs(m));
    const double drift = m.rows() == 0 ? 0.0 : detail::max_abs(m - m.adjoint());
    if (drift > kHermiticityTol * scale)
      throw InvariantError("operator is not Hermitian (drift " + std::to_string(drift) + ")");
    mat_ = 0.5 * (m + m.adjoint());
  }

  static HermitianOperator identity(int dim) {
    return HermitianOperator(ComplexMatrix::Identity(dim, dim));
  }
  static HermitianOperator zero(int dim) {
    return HermitianOperator(ComplexMatrix::Zero(dim, dim));
  }
  static HermitianOperator projector(const StateVector& v) {
    return HermitianOperator(v.projector());
  }
  /// Hermitian part (M + M^dagger)/2 without a drift check, for values
  /// assembled from numerically noisy sources such as solver output.
  static HermitianOperator hermitian_part(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("Hermitian operator must be square");
    HermitianOperator h;
    h.mat_ = 0.5 * (m + m.adjoint());
    return h;
  }

  int dim() const { return static_cast<int>(mat_.rows()); }
  const ComplexMatrix& matrix() const { return mat_; }
  cplx operator()(int r, int c) const { return mat_(r, c); }
  double trace() const { return mat_.trace().real(); }

  HermitianOperator operator+(const HermitianOperator& o) const { return hermitian_part(mat_ + o.mat_); }
  HermitianOperator operator-(const HermitianOperator& o) const { return hermitian_part(mat_ - o.mat_); }
  HermitianOperator operator*(double s) const { return hermitian_part(mat_ * s); }

private:
  ComplexMatrix mat_;
};

/// Local dimensions of a tensor-product space. Factors of dimension one
/// carry no information and are dropped.
class DimsLayout {
public:
  DimsLayout() = default;
  DimsLayout(std::initializer_list<int> f) : DimsLayout(std::vector<int>(f)) {}
  explicit DimsLayout(const std::vector<int>& factors) {
    for (int f : factors) {
      if (f < 1) throw DimensionError("tensor factor dimension must be positive");
      if (f >= 2) factors_.push_back(f);
    }
    std::size_t total = 1;
    for (int f : factors_) total = detail::checked_product(total, static_cast<std::size_t>(f), kDimensionCap);
    dim_ = static_cast<int>(total);
  }

  const std::vector<int>& factors() const { return factors_; }
  int size() const { return static_cast<int>(factors_.size()); }
  int dim() const { return dim_; }
  int factor(int k) const { return factors_.at(static_cast<std::size_t>(k)); }

  /// Basis-index stride of factor k.
  int stride(int k) const {
    int s = 1;
    for (int j = size() - 1; j > k; --j) s *= factors_[static_cast<std::size_t>(j)];
    return s;
  }

private:
  std::vector<int> factors_;
  int dim_ = 1;
};

// ---------------------------------------------------------------------------
// Kronecker products

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  const std::size_t rows = detail::checked_product(a.rows(), b.rows(), kDimensionCap * kDimensionCap);
  const std::size_t cols = detail::checked_product(a.cols(), b.cols(), kDimensionCap * kDimensionCap);
  ComplexMatrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline ComplexVector kron(const ComplexVector& a, const ComplexVector& b) {
  detail::checked_product(a.size(), b.size(), kDimensionCap * kDimensionCap);
  ComplexVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

inline HermitianOperator kron(const HermitianOperator& a, const HermitianOperator& b) {
  return HermitianOperator::hermitian_part(kron(a.matrix(), b.matrix()));
}

inline StateVector kron(const StateVector& a, const StateVector& b) {
  return StateVector::normalized(kron(a.amplitudes(), b.amplitudes()));
}

/// n-fold Kronecker power.
inline ComplexMatrix kron_power(const ComplexMatrix& a, int n) {
  if (n < 0) throw DimensionError("negative Kronecker power");
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (int k = 0; k < n; ++k) out = kron(out, a);
  return out;
}

inline ComplexVector kron_power(const ComplexVector& a, int n) {
  if (n < 0) throw DimensionError("negative Kronecker power");
  ComplexVector out = ComplexVector::Ones(1);
  for (int k = 0; k < n; ++k) out = kron(out, a);
  return out;
}

// ---------------------------------------------------------------------------
// Partial trace and partial transpose

namespace detail {

inline void check_layout(const ComplexMatrix& x, const DimsLayout& layout) {
  if (x.rows() != x.cols() || x.rows() != layout.dim())
    throw DimensionError("operator dimension " + std::to_string(x.rows()) + " does not match layout dimension " +
                         std::to_string(layout.dim()));
}

/// Offsets (in full basis-index units) of every multi-index over the given
/// factors, enumerated in tensor order.
inline std::vector<int> offsets_for(const DimsLayout& layout, const std::vector<int>& which) {
  std::vector<int> offs{0};
  for (int k : which) {
    const int f = layout.factor(k);
    const int s = layout.stride(k);
    std::vector<int> next;
    next.reserve(offs.size() * static_cast<std::size_t>(f));
    for (int o : offs)
      for (int i = 0; i < f; ++i) next.push_back(o + i * s);
    offs = std::move(next);
  }
  return offs;
}

} // namespace detail

/// Traces out every factor not listed in keep. The result is ordered by
/// the kept factors in their original relative order.
inline ComplexMatrix partial_trace(const ComplexMatrix& x, const DimsLayout& layout, std::vector<int> keep) {
  detail::check_layout(x, layout);
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  for (int k : keep)
    if (k < 0 || k >= layout.size()) throw DimensionError("partial_trace: factor index " + std::to_string(k) + " out of range");
  std::vector<int> traced;
  for (int k = 0; k < layout.size(); ++k)
    if (!std::binary_search(keep.begin(), keep.end(), k)) traced.push_back(k);

  const auto ko = detail::offsets_for(layout, keep);
  const auto to = detail::offsets_for(layout, traced);
  const auto dk = static_cast<Eigen::Index>(ko.size());
  ComplexMatrix out = ComplexMatrix::Zero(dk, dk);
  for (Eigen::Index c = 0; c < dk; ++c)
    for (Eigen::Index r = 0; r < dk; ++r) {
      cplx acc = 0.0;
      for (int t : to) acc += x(ko[static_cast<std::size_t>(r)] + t, ko[static_cast<std::size_t>(c)] + t);
      out(r, c) = acc;
    }
  return out;
}

inline HermitianOperator partial_trace(const HermitianOperator& x, const DimsLayout& layout,
                                       const std::vector<int>& keep) {
  return HermitianOperator::hermitian_part(partial_trace(x.matrix(), layout, keep));
}

/// Transposes tensor factor sys.
inline ComplexMatrix partial_transpose(const ComplexMatrix& x, const DimsLayout& layout, int sys) {
  detail::check_layout(x, layout);
  if (sys < 0 || sys >= layout.size())
    throw DimensionError("partial_transpose: factor index " + std::to_string(sys) + " out of range");
  const int f = layout.factor(sys);
  const int s = layout.stride(sys);
  const Eigen::Index n = x.rows();
  ComplexMatrix out(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const int dc = static_cast<int>(c / s) % f;
    for (Eigen::Index r = 0; r < n; ++r) {
      const int dr = static_cast<int>(r / s) % f;
      out(r + (dc - dr) * s, c + (dr - dc) * s) = x(r, c);
    }
  }
  return out;
}

inline HermitianOperator partial_transpose(const HermitianOperator& x, const DimsLayout& layout, int sys) {
  return HermitianOperator::hermitian_part(partial_transpose(x.matrix(), layout, sys));
}

// ---------------------------------------------------------------------------
// Special states and spectra

/// (1/sqrt d) sum_i |ii>.
inline StateVector max_entangled(int d) {
  if (d < 2) throw DimensionError("max_entangled requires d >= 2");
  detail::checked_product(static_cast<std::size_t>(d), static_cast<std::size_t>(d), kDimensionCap);
  ComplexVector v = ComplexVector::Zero(d * d);
  const double a = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < d; ++i) v(i * d + i) = a;
  return StateVector::normalized(v);
}

struct EigenDecomposition {
  RealVector values;     // ascending
  ComplexMatrix vectors; // orthonormal columns, matching values
};

inline EigenDecomposition eigh(const HermitianOperator& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h.matrix());
  if (es.info() != Eigen::Success) throw Error("eigh: eigensolver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

/// Checked entry point for raw matrices.
inline EigenDecomposition eigh(const ComplexMatrix& m) {
  return eigh(HermitianOperator(m));
}

inline double min_eigenvalue(const ComplexMatrix& h) {
  if (h.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double max_eigenvalue(const ComplexMatrix& h) {
  if (h.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

// ---------------------------------------------------------------------------
// Permutations of tensor factors

/// Permutation of n items given as images: perm[k] is where factor k goes.
using Permutation = std::vector<int>;

inline void check_permutation(const Permutation& perm, int n) {
  if (static_cast<int>(perm.size()) != n) throw DimensionError("permutation has wrong length");
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (int p : perm) {
    if (p < 0 || p >= n || seen[static_cast<std::size_t>(p)]) throw DimensionError("malformed permutation");
    seen[static_cast<std::size_t>(p)] = true;
  }
}

inline Permutation compose(const Permutation& outer, const Permutation& inner) {
  Permutation out(inner.size());
  for (std::size_t k = 0; k < inner.size(); ++k) out[k] = outer[static_cast<std::size_t>(inner[k])];
  return out;
}

/// Basis map g with P_perm |i> = |g(i)> on (C^d)^n, where factor k of |i>
/// moves to slot perm[k].
inline std::vector<int> perm_index_map(int d, int n, const Permutation& perm) {
  check_permutation(perm, n);
  if (d < 1) throw DimensionError("local dimension must be positive");
  std::size_t total = 1;
  for (int k = 0; k < n; ++k) total = detail::checked_product(total, static_cast<std::size_t>(d), kDimensionCap);
  std::vector<int> stride(static_cast<std::size_t>(n), 1);
  for (int k = n - 2; k >= 0; --k) stride[static_cast<std::size_t>(k)] = stride[static_cast<std::size_t>(k + 1)] * d;
  std::vector<int> g(total);
  for (std::size_t i = 0; i < total; ++i) {
    int rem = static_cast<int>(i);
    int j = 0;
    for (int k = 0; k < n; ++k) {
      const int digit = rem / stride[static_cast<std::size_t>(k)];
      rem %= stride[static_cast<std::size_t>(k)];
      j += digit * stride[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])];
    }
    g[i] = j;
  }
  return g;
}

inline ComplexMatrix perm_operator(int d, int n, const Permutation& perm) {
  const auto g = perm_index_map(d, n, perm);
  const auto dim = static_cast<Eigen::Index>(g.size());
  ComplexMatrix p = ComplexMatrix::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) p(g[static_cast<std::size_t>(i)], i) = 1.0;
  return p;
}

// ---------------------------------------------------------------------------
// Symmetric subspace

inline std::size_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
  return r;
}

/// Sym^n(C^d) in the occupation-number basis. Basis states are listed in
/// lexicographic order of their sorted index strings (for d=2, n=2:
/// |00>, sym|01>, |11>).
class SymmetricSubspace {
public:
  SymmetricSubspace(int d, int n) : d_(d), n_(n) {
    if (d < 2) throw DimensionError("symmetric subspace needs d >= 2");
    if (n < 1) throw DimensionError("symmetric subspace needs n >= 1");
    if (binomial(n + d - 1, d - 1) > kDimensionCap) throw CapExceeded("symmetric subspace dimension exceeds cap");
    std::vector<int> word(static_cast<std::size_t>(n), 0);
    while (true) {
      std::vector<int> occ(static_cast<std::size_t>(d), 0);
      for (int w : word) ++occ[static_cast<std::size_t>(w)];
      occupations_.push_back(std::move(occ));
      int k = n - 1;
      while (k >= 0 && word[static_cast<std::size_t>(k)] == d - 1) --k;
      if (k < 0) break;
      const int v = word[static_cast<std::size_t>(k)] + 1;
      for (int j = k; j < n; ++j) word[static_cast<std::size_t>(j)] = v;
    }
  }

  int local_dim() const { return d_; }
  int copies() const { return n_; }
  int dim() const { return static_cast<int>(occupations_.size()); }
  const std::vector<std::vector<int>>& occupations() const { return occupations_; }

  /// Column index of an occupation vector, or -1.
  int index_of(const std::vector<int>& occ) const {
    auto it = std::find(occupations_.begin(), occupations_.end(), occ);
    return it == occupations_.end() ? -1 : static_cast<int>(it - occupations_.begin());
  }

  /// Isometry V : Sym^n(C^d) -> (C^d)^{(x)n}, V^dagger V = I.
  ComplexMatrix isometry(std::size_t cap = kDimensionCap) const {
    std::size_t full = 1;
    for (int k = 0; k < n_; ++k) full = detail::checked_product(full, static_cast<std::size_t>(d_), cap);
    ComplexMatrix v = ComplexMatrix::Zero(static_cast<Eigen::Index>(full), dim());
    std::vector<int> digits(static_cast<std::size_t>(n_));
    for (std::size_t i = 0; i < full; ++i) {
      std::size_t rem = i;
      std::vector<int> occ(static_cast<std::size_t>(d_), 0);
      for (int k = n_ - 1; k >= 0; --k) {
        ++occ[rem % static_cast<std::size_t>(d_)];
        rem /= static_cast<std::size_t>(d_);
      }
      const int col = index_of(occ);
      v(static_cast<Eigen::Index>(i), col) = 1.0;
    }
    for (Eigen::Index c = 0; c < v.cols(); ++c) v.col(c).normalize();
    return v;
  }

  /// Single-copy reduced operator of |a><b| for basis states a, b:
  /// K(a,b)_{x,y} = (1/n) sqrt(occ_a[x] occ_b[y]) [occ_a - e_x == occ_b - e_y].
  ComplexMatrix one_body(int a, int b) const {
    ComplexMatrix k = ComplexMatrix::Zero(d_, d_);
    const auto& oa = occupations_[static_cast<std::size_t>(a)];
    const auto& ob = occupations_[static_cast<std::size_t>(b)];
    for (int x = 0; x < d_; ++x) {
      if (oa[static_cast<std::size_t>(x)] == 0) continue;
      for (int y = 0; y < d_; ++y) {
        if (ob[static_cast<std::size_t>(y)] == 0) continue;
        bool match = true;
        for (int z = 0; z < d_ && match; ++z) {
          const int lhs = oa[static_cast<std::size_t>(z)] - (z == x ? 1 : 0);
          const int rhs = ob[static_cast<std::size_t>(z)] - (z == y ? 1 : 0);
          match = lhs == rhs;
        }
        if (match)
          k(x, y) = std::sqrt(static_cast<double>(oa[static_cast<std::size_t>(x)]) *
                              static_cast<double>(ob[static_cast<std::size_t>(y)])) /
                    static_cast<double>(n_);
      }
    }
    return k;
  }

private:
  int d_;
  int n_;
  std::vector<std::vector<int>> occupations_;
};

inline ComplexMatrix sym_isometry(int d, int n, std::size_t cap = kDimensionCap) {
  return SymmetricSubspace(d, n).isometry(cap);
}

/// Reduces an operator on C^{d_ref} (x) Sym^n(C^d) to C^{d_ref} (x) C^d by
/// tracing all copies but one.
inline ComplexMatrix sym_reduce_one(const ComplexMatrix& x, int d_ref, const SymmetricSubspace& sym) {
  const int ds = sym.dim();
  const int d = sym.local_dim();
  if (x.rows() != d_ref * ds || x.cols() != d_ref * ds) throw DimensionError("sym_reduce_one: dimension mismatch");
  ComplexMatrix out = ComplexMatrix::Zero(d_ref * d, d_ref * d);
  for (int a = 0; a < ds; ++a)
    for (int b = 0; b < ds; ++b) {
      const ComplexMatrix k = sym.one_body(a, b);
      if (k.cwiseAbs().maxCoeff() == 0.0) continue;
      for (int r = 0; r < d_ref; ++r)
        for (int c = 0; c < d_ref; ++c) out.block(r * d, c * d, d, d) += x(r * ds + a, c * ds + b) * k;
    }
  return out;
}

/// Adjoint of sym_reduce_one under the trace inner product:
/// tr(w * sym_reduce_one(x)) == tr(sym_reduce_one_adjoint(w) * x).
inline ComplexMatrix sym_reduce_one_adjoint(const ComplexMatrix& w, int d_ref, const SymmetricSubspace& sym) {
  const int ds = sym.dim();
  const int d = sym.local_dim();
  if (w.rows() != d_ref * d || w.cols() != d_ref * d) throw DimensionError("sym_reduce_one_adjoint: dimension mismatch");
  ComplexMatrix out = ComplexMatrix::Zero(d_ref * ds, d_ref * ds);
  for (int a = 0; a < ds; ++a)
    for (int b = 0; b < ds; ++b) {
      const ComplexMatrix k = sym.one_body(a, b);
      if (k.cwiseAbs().maxCoeff() == 0.0) continue;
      for (int r = 0; r < d_ref; ++r)
        for (int c = 0; c < d_ref; ++c)
          // tr(w * (x_{ra,cb} |r><c| (x) K)) = x_{ra,cb} * tr(w_{c.,r.} K)
          out(c * ds + b, r * ds + a) += (w.block(c * d, r * d, d, d) * k).trace();
    }
  return out;
}

// ---------------------------------------------------------------------------
// Random sampling

/// Haar-random pure state.
template <class Rng>
StateVector random_state(int d, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexVector v(d);
  for (int i = 0; i < d; ++i) {
    const double re = g(rng);
    const double im = g(rng);
    v(i) = cplx(re, im);
  }
  return StateVector::normalized(v);
}

/// Ginibre-based random Hermitian matrix (GUE-like).
template <class Rng>
ComplexMatrix random_hermitian(int d, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexMatrix m(d, d);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r < d; ++r) {
      const double re = g(rng);
      const double im = g(rng);
      m(r, c) = cplx(re, im);
    }
  return 0.5 * (m + m.adjoint());
}

/// Random density matrix of full rank (Ginibre measure).
template <class Rng>
ComplexMatrix random_density(int d, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexMatrix m(d, d);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r < d; ++r) {
      const double re = g(rng);
      const double im = g(rng);
      m(r, c) = cplx(re, im);
    }
  ComplexMatrix rho = m * m.adjoint();
  return rho / rho.trace().real();
}

/// Haar-random unitary via QR of a Ginibre matrix with phase fix.
template <class Rng>
ComplexMatrix random_unitary(int d, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexMatrix m(d, d);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r < d; ++r) {
      const double re = g(rng);
      const double im = g(rng);
      m(r, c) = cplx(re, im);
    }
  Eigen::HouseholderQR<ComplexMatrix> qr(m);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix rmat = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i) {
    const cplx diag = rmat(i, i);
    const double mod = std::abs(diag);
    if (mod > 0) q.col(i) *= diag / mod;
  }
  return q;
}

} // namespace qcest
