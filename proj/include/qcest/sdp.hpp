#pragma once

// Dense primal-dual interior-point solver for complex semidefinite programs
//
//   maximize    sum_b tr(C_b X_b)
//   subject to  sum_b tr(A_ib X_b) = b_i,   X_b >= 0 (Hermitian),
//
// with dual
//
//   minimize    b.y   subject to  sum_i y_i A_ib - C_b = Z_b >= 0.
//
// Each complex block of size n is solved through its real-symmetric
// embedding [[Re, -Im], [Im, Re]] of size 2n. Coefficients are embedded with
// a factor 1/2 so that tr(A' emb(X)) = tr(A X) and every reported value
// refers to the complex problem. The search direction is HKM with a
// Mehrotra predictor-corrector.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qcest/errors.hpp"
#include "qcest/qmath.hpp"

namespace qcest::sdp {

/// One entry of a Hermitian coefficient matrix.
struct Entry {
  int row;
  int col;
  cplx value;
};

/// Hermitian coefficient acting on a single block, stored as the full list
/// of non-zero entries (both triangles).
struct Coefficient {
  int block = 0;
  std::vector<Entry> entries;

  static Coefficient dense(int block, const ComplexMatrix& h, double drop = 0.0) {
    Coefficient c{block, {}};
    for (Eigen::Index j = 0; j < h.cols(); ++j)
      for (Eigen::Index i = 0; i < h.rows(); ++i)
        if (std::abs(h(i, j)) > drop)
          c.entries.push_back({static_cast<int>(i), static_cast<int>(j), h(i, j)});
    return c;
  }

  /// tr(A X) = scale * Re X(r, c).
  static Coefficient real_part(int block, int r, int c, double scale = 1.0) {
    if (r == c) return {block, {{r, r, cplx(scale, 0.0)}}};
    return {block, {{r, c, cplx(0.5 * scale, 0.0)}, {c, r, cplx(0.5 * scale, 0.0)}}};
  }

  /// tr(A X) = scale * Im X(r, c); requires r != c.
  static Coefficient imag_part(int block, int r, int c, double scale = 1.0) {
    if (r == c) throw DimensionError("imaginary part of a diagonal entry is identically zero");
    return {block, {{c, r, cplx(0.0, -0.5 * scale)}, {r, c, cplx(0.0, 0.5 * scale)}}};
  }
};

struct Constraint {
  std::vector<Coefficient> terms;
  double rhs = 0.0;
};

struct SdpProblem {
  std::vector<int> blocks;
  std::vector<Coefficient> objective;
  std::vector<Constraint> constraints;

  int add_block(int dim) {
    if (dim < 1) throw DimensionError("block dimension must be positive");
    blocks.push_back(dim);
    return static_cast<int>(blocks.size()) - 1;
  }

  void add_objective(const Coefficient& c) { objective.push_back(c); }

  void add_constraint(std::vector<Coefficient> terms, double rhs) {
    constraints.push_back({std::move(terms), rhs});
  }

  /// Adds the d*d real constraints tr_b(A X) = target where A ranges over
  /// a Hermitian basis of d x d matrices, i.e. a matrix equality
  /// f(X_b) = target for a linear map given through its adjoint action on
  /// matrix units. adjoint(r, c) must return the coefficient for the
  /// functional X -> f(X)(r, c).
  template <class AdjointUnit>
  void add_matrix_equality(int block, int d, const ComplexMatrix& target, AdjointUnit adjoint) {
    for (int r = 0; r < d; ++r)
      for (int c = r; c < d; ++c) {
        // Re f(X)(r,c) and Im f(X)(r,c) through the coefficient G with
        // tr(G X) = f(X)(r,c): Re part uses (G + G^dag)/2, Im part (G - G^dag)/(2i).
        const ComplexMatrix g = adjoint(r, c);
        const ComplexMatrix re = 0.5 * (g + g.adjoint());
        add_constraint({Coefficient::dense(block, re)}, target(r, c).real());
        if (r != c) {
          const ComplexMatrix im = (g - g.adjoint()) / cplx(0.0, 2.0);
          add_constraint({Coefficient::dense(block, im)}, target(r, c).imag());
        }
      }
  }
};

enum class Status { optimal, infeasible, numerical_limit };

inline const char* to_string(Status s) {
  switch (s) {
  case Status::optimal: return "optimal";
  case Status::infeasible: return "infeasible";
  case Status::numerical_limit: return "numerical-limit";
  }
  return "unknown";
}

struct Residuals {
  double primal = 0.0; // ||b - A(X)|| / (1 + ||b||)
  double dual = 0.0;   // ||A^T y - Z - C||_F / (1 + ||C||_F)
  double gap = 0.0;    // |pobj - dobj| / (1 + |pobj| + |dobj|)
};

struct SdpSolution {
  std::vector<HermitianOperator> primal;
  std::vector<HermitianOperator> dual_slack;
  std::vector<double> dual; // one per input constraint; zero for dropped rows
  double objective = 0.0;
  double dual_objective = 0.0;
  Status status = Status::numerical_limit;
  Residuals residuals;
  int iterations = 0;
  std::vector<int> dropped_rows;
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iterations = 200;
  double step_fraction = 0.98;
  double dependency_threshold = 1e-10;
  std::size_t max_embedded_dim = 2048;
  std::size_t max_constraints = 4096;
  std::size_t max_raw_constraints = 12000;
};

namespace detail {

using RealMatrix = Eigen::MatrixXd;

struct RealEntry {
  int r;
  int c;
  double v;
};

/// A constraint or objective in embedded real coordinates, grouped by block.
struct RealRow {
  std::vector<std::vector<RealEntry>> parts; // indexed by block
  std::size_t nnz = 0;
  double rhs = 0.0;
};

inline RealRow embed(const std::vector<Coefficient>& terms, const std::vector<int>& blocks) {
  RealRow row;
  row.parts.resize(blocks.size());
  std::vector<std::vector<std::pair<long long, double>>> raw(blocks.size());
  for (const auto& t : terms) {
    if (t.block < 0 || t.block >= static_cast<int>(blocks.size())) throw DimensionError("coefficient block out of range");
    const int n = blocks[static_cast<std::size_t>(t.block)];
    const long long nb = 2LL * n;
    auto& acc = raw[static_cast<std::size_t>(t.block)];
    for (const auto& e : t.entries) {
      if (e.row < 0 || e.row >= n || e.col < 0 || e.col >= n) throw DimensionError("coefficient entry out of block range");
      const double re = 0.5 * e.value.real();
      const double im = 0.5 * e.value.imag();
      if (re != 0.0) {
        acc.push_back({e.row * nb + e.col, re});
        acc.push_back({(e.row + n) * nb + e.col + n, re});
      }
      if (im != 0.0) {
        acc.push_back({e.row * nb + e.col + n, -im});
        acc.push_back({(e.row + n) * nb + e.col, im});
      }
    }
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto& acc = raw[b];
    if (acc.empty()) continue;
    std::sort(acc.begin(), acc.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    const long long nb = 2LL * blocks[b];
    std::vector<std::pair<long long, double>> merged;
    for (const auto& kv : acc) {
      if (!merged.empty() && merged.back().first == kv.first)
        merged.back().second += kv.second;
      else
        merged.push_back(kv);
    }
    // Hermiticity check on the embedded (real symmetric) coefficient.
    for (const auto& kv : merged) {
      const long long r = kv.first / nb;
      const long long c = kv.first % nb;
      auto it = std::lower_bound(merged.begin(), merged.end(), c * nb + r,
                                 [](const auto& x, long long key) { return x.first < key; });
      const double mirror = (it != merged.end() && it->first == c * nb + r) ? it->second : 0.0;
      if (std::abs(mirror - kv.second) > 1e-12 * std::max(1.0, std::abs(kv.second)))
        throw InvariantError("coefficient operator is not Hermitian");
    }
    for (const auto& kv : merged)
      if (kv.second != 0.0)
        row.parts[b].push_back({static_cast<int>(kv.first / nb), static_cast<int>(kv.first % nb), kv.second});
    row.nnz += row.parts[b].size();
  }
  return row;
}

inline double dot(const RealRow& a, const std::vector<RealMatrix>& s) {
  double acc = 0.0;
  for (std::size_t b = 0; b < a.parts.size(); ++b)
    for (const auto& e : a.parts[b]) acc += e.v * s[b](e.r, e.c);
  return acc;
}

inline void add_scaled(std::vector<RealMatrix>& s, const RealRow& a, double scale) {
  for (std::size_t b = 0; b < a.parts.size(); ++b)
    for (const auto& e : a.parts[b]) s[b](e.r, e.c) += scale * e.v;
}

inline double frob_norm(const RealRow& a) {
  double acc = 0.0;
  for (const auto& part : a.parts)
    for (const auto& e : part) acc += e.v * e.v;
  return std::sqrt(acc);
}

inline double frob_norm(const std::vector<RealMatrix>& s) {
  double acc = 0.0;
  for (const auto& m : s) acc += m.squaredNorm();
  return std::sqrt(acc);
}

inline double inner(const std::vector<RealMatrix>& a, const std::vector<RealMatrix>& b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k].cwiseProduct(b[k]).sum();
  return acc;
}

/// Greedy Gram-Schmidt selection of linearly independent rows. Rows whose
/// residual after projection is below threshold * ||row|| are dropped.
inline std::vector<int> independent_rows(const std::vector<RealRow>& rows, const std::vector<int>& nb,
                                         double threshold, std::size_t max_kept) {
  // Coordinates: upper triangle of each symmetric block with sqrt(2)
  // weights off the diagonal, so Euclidean and trace inner products agree.
  std::vector<long long> offset(nb.size() + 1, 0);
  for (std::size_t b = 0; b < nb.size(); ++b)
    offset[b + 1] = offset[b] + static_cast<long long>(nb[b]) * (nb[b] + 1) / 2;
  const long long total = offset.back();
  auto coord = [&](std::size_t b, int r, int c) {
    if (r > c) std::swap(r, c);
    // row-major packed upper triangle
    const long long n = nb[b];
    return offset[b] + static_cast<long long>(r) * n - static_cast<long long>(r) * (r - 1) / 2 + (c - r);
  };

  std::vector<std::vector<std::pair<long long, double>>> sparse(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& sv = sparse[i];
    for (std::size_t b = 0; b < rows[i].parts.size(); ++b)
      for (const auto& e : rows[i].parts[b]) {
        if (e.r > e.c) continue;
        sv.push_back({coord(b, e.r, e.c), e.r == e.c ? e.v : std::sqrt(2.0) * e.v});
      }
  }

  std::vector<Eigen::VectorXd> basis;
  std::vector<int> kept;
  Eigen::VectorXd dense(total);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& sv = sparse[i];
    double norm2 = 0.0;
    for (const auto& kv : sv) norm2 += kv.second * kv.second;
    const double norm = std::sqrt(norm2);
    if (norm == 0.0) continue;
    Eigen::VectorXd coef(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k) {
      double acc = 0.0;
      for (const auto& kv : sv) acc += basis[k](kv.first) * kv.second;
      coef(static_cast<Eigen::Index>(k)) = acc;
    }
    const double est2 = norm2 - coef.squaredNorm();
    const bool clearly_independent = est2 > 1e-8 * norm2;
    dense.setZero();
    for (const auto& kv : sv) dense(kv.first) += kv.second;
    for (std::size_t k = 0; k < basis.size(); ++k) dense -= coef(static_cast<Eigen::Index>(k)) * basis[k];
    if (!clearly_independent) {
      // second Gram-Schmidt pass for an accurate residual
      for (const auto& q : basis) dense -= q.dot(dense) * q;
    }
    const double res = dense.norm();
    if (res <= threshold * norm) continue;
    if (clearly_independent)
      for (const auto& q : basis) dense -= q.dot(dense) * q;
    basis.push_back(dense / dense.norm());
    kept.push_back(static_cast<int>(i));
    if (kept.size() > max_kept)
      throw CapExceeded("independent constraint count exceeds cap " + std::to_string(max_kept));
  }
  return kept;
}

/// Largest alpha in (0, inf] with X + alpha dX >= 0, given chol(X).
inline double max_step(const Eigen::LLT<RealMatrix>& chol, const RealMatrix& dx) {
  const RealMatrix& l = chol.matrixLLT();
  RealMatrix tmp = l.triangularView<Eigen::Lower>().solve(dx);
  RealMatrix s = l.triangularView<Eigen::Lower>().solve(tmp.transpose());
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(s, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

} // namespace detail

inline SdpSolution solve(const SdpProblem& p, const SolverOptions& opt = {}) {
  using detail::RealMatrix;
  using detail::RealRow;
  if (p.blocks.empty()) throw DimensionError("SDP needs at least one block");
  const std::size_t nblocks = p.blocks.size();
  std::vector<int> nb(nblocks);
  std::size_t total_dim = 0;
  for (std::size_t b = 0; b < nblocks; ++b) {
    if (p.blocks[b] < 1) throw DimensionError("block dimension must be positive");
    nb[b] = 2 * p.blocks[b];
    total_dim += static_cast<std::size_t>(nb[b]);
  }
  if (total_dim > opt.max_embedded_dim)
    throw CapExceeded("embedded SDP dimension " + std::to_string(total_dim) + " exceeds cap " +
                      std::to_string(opt.max_embedded_dim));
  if (p.constraints.size() > opt.max_raw_constraints)
    throw CapExceeded("constraint count " + std::to_string(p.constraints.size()) + " exceeds cap " +
                      std::to_string(opt.max_raw_constraints));

  const RealRow cost = detail::embed(p.objective, p.blocks);
  std::vector<RealRow> all_rows;
  all_rows.reserve(p.constraints.size());
  for (const auto& c : p.constraints) {
    all_rows.push_back(detail::embed(c.terms, p.blocks));
    all_rows.back().rhs = c.rhs;
  }

  SdpSolution sol;
  const auto kept = detail::independent_rows(all_rows, nb, opt.dependency_threshold, opt.max_constraints);
  {
    std::size_t k = 0;
    for (int i = 0; i < static_cast<int>(all_rows.size()); ++i) {
      if (k < kept.size() && kept[k] == i)
        ++k;
      else
        sol.dropped_rows.push_back(i);
    }
  }
  std::vector<RealRow> rows;
  rows.reserve(kept.size());
  for (int i : kept) rows.push_back(all_rows[static_cast<std::size_t>(i)]);
  const int m = static_cast<int>(rows.size());

  // A dropped row may still be inconsistent with the kept ones; check after
  // solving through the reported primal residual over all rows.
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) b(i) = rows[static_cast<std::size_t>(i)].rhs;

  std::vector<RealMatrix> cmat(nblocks);
  for (std::size_t k = 0; k < nblocks; ++k) cmat[k] = RealMatrix::Zero(nb[k], nb[k]);
  detail::add_scaled(cmat, cost, 1.0);
  // Solve with the cost normalized to unit max entry so the iterates do not
  // depend on the objective's scale; values are rescaled on the way out.
  double cscale = 0.0;
  for (const auto& c : cmat) cscale = std::max(cscale, c.cwiseAbs().maxCoeff());
  if (cscale == 0.0) cscale = 1.0;
  for (auto& c : cmat) c /= cscale;

  // Starting point: scaled identities per block.
  std::vector<RealMatrix> x(nblocks), z(nblocks);
  for (std::size_t k = 0; k < nblocks; ++k) {
    const double n = nb[k];
    double ratio = 0.0;
    double norm_a = 0.0;
    for (int i = 0; i < m; ++i) {
      double fn = 0.0;
      for (const auto& e : rows[static_cast<std::size_t>(i)].parts[k]) fn += e.v * e.v;
      fn = std::sqrt(fn);
      norm_a = std::max(norm_a, fn);
      ratio = std::max(ratio, (1.0 + std::abs(b(i))) / (1.0 + fn));
    }
    const double xi = std::max({10.0, std::sqrt(n), n * ratio});
    const double eta = std::max({10.0, std::sqrt(n), norm_a, cmat[k].norm()});
    x[k] = xi * RealMatrix::Identity(nb[k], nb[k]);
    z[k] = eta * RealMatrix::Identity(nb[k], nb[k]);
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

  const double norm_b = b.norm();
  const double norm_c = detail::frob_norm(cmat);
  const double n_total = static_cast<double>(total_dim);

  auto apply_a = [&](const std::vector<RealMatrix>& s) {
    Eigen::VectorXd out(m);
    for (int i = 0; i < m; ++i) out(i) = detail::dot(rows[static_cast<std::size_t>(i)], s);
    return out;
  };
  auto apply_at = [&](const Eigen::VectorXd& v) {
    std::vector<RealMatrix> out(nblocks);
    for (std::size_t k = 0; k < nblocks; ++k) out[k] = RealMatrix::Zero(nb[k], nb[k]);
    for (int i = 0; i < m; ++i) detail::add_scaled(out, rows[static_cast<std::size_t>(i)], v(i));
    return out;
  };

  struct Snapshot {
    std::vector<RealMatrix> x, z;
    Eigen::VectorXd y;
    Residuals res;
    double pobj = 0, dobj = 0;
    double score = std::numeric_limits<double>::infinity();
  } best;

  // Dense rows get the X A W product treatment in the Schur complement.
  std::vector<bool> dense_row(static_cast<std::size_t>(m), false);
  for (int i = 0; i < m; ++i) {
    std::size_t widest = 0;
    for (std::size_t k = 0; k < nblocks; ++k)
      if (!rows[static_cast<std::size_t>(i)].parts[k].empty()) widest = std::max<std::size_t>(widest, nb[k]);
    dense_row[static_cast<std::size_t>(i)] = rows[static_cast<std::size_t>(i)].nnz > std::max<std::size_t>(16, widest);
  }

  Status status = Status::numerical_limit;
  int stall = 0;
  int iter = 0;
  for (; iter <= opt.max_iterations; ++iter) {
    const Eigen::VectorXd ax = apply_a(x);
    const Eigen::VectorXd rp = b - ax;
    std::vector<RealMatrix> aty = apply_at(y);
    std::vector<RealMatrix> rd(nblocks);
    for (std::size_t k = 0; k < nblocks; ++k) rd[k] = cmat[k] - aty[k] + z[k];
    const double pobj = detail::inner(cmat, x);
    const double dobj = b.dot(y);
    Residuals res;
    res.primal = rp.norm() / (1.0 + norm_b);
    res.dual = detail::frob_norm(rd) / (1.0 + norm_c);
    res.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double score = std::max({res.primal, res.dual, res.gap});
    if (score < best.score) best = {x, z, y, res, pobj, dobj, score};
    if (score <= opt.tol) {
      status = Status::optimal;
      break;
    }
    // Improving rays: dual objective diverging with the dual nearly
    // feasible certifies primal infeasibility (and vice versa).
    if (dobj < -1e8 * (1.0 + norm_c) && res.dual < 1e-6) {
      status = Status::infeasible;
      break;
    }
    if (pobj > 1e8 * (1.0 + norm_b) && res.primal < 1e-6) {
      status = Status::infeasible;
      break;
    }
    if (iter == opt.max_iterations) break;

    const double mu = detail::inner(x, z) / n_total;
    std::vector<RealMatrix> w(nblocks);
    std::vector<Eigen::LLT<RealMatrix>> chol_x(nblocks), chol_z(nblocks);
    bool broken = false;
    for (std::size_t k = 0; k < nblocks; ++k) {
      chol_x[k].compute(x[k]);
      chol_z[k].compute(z[k]);
      if (chol_x[k].info() != Eigen::Success || chol_z[k].info() != Eigen::Success) {
        broken = true;
        break;
      }
      w[k] = chol_z[k].solve(RealMatrix::Identity(nb[k], nb[k]));
      w[k] = 0.5 * (w[k] + w[k].transpose()).eval();
    }
    if (broken) break;

    // Schur complement M_ij = tr(A_i X A_j W).
    RealMatrix schur = RealMatrix::Zero(m, m);
    std::vector<std::vector<RealMatrix>> tprod(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      if (!dense_row[static_cast<std::size_t>(i)]) continue;
      auto& t = tprod[static_cast<std::size_t>(i)];
      t.resize(nblocks);
      for (std::size_t k = 0; k < nblocks; ++k) {
        const auto& part = rows[static_cast<std::size_t>(i)].parts[k];
        if (part.empty()) continue;
        RealMatrix aw = RealMatrix::Zero(nb[k], nb[k]);
        for (const auto& e : part) aw.row(e.r) += e.v * w[k].row(e.c);
        t[k] = x[k] * aw;
      }
    }
    for (int i = 0; i < m; ++i) {
      const auto& ri = rows[static_cast<std::size_t>(i)];
      for (int j = i; j < m; ++j) {
        const auto& rj = rows[static_cast<std::size_t>(j)];
        double acc = 0.0;
        if (dense_row[static_cast<std::size_t>(i)] || dense_row[static_cast<std::size_t>(j)]) {
          const int di = dense_row[static_cast<std::size_t>(i)] ? i : j;
          const auto& other = dense_row[static_cast<std::size_t>(i)] ? rj : ri;
          const auto& t = tprod[static_cast<std::size_t>(di)];
          for (std::size_t k = 0; k < nblocks; ++k) {
            if (other.parts[k].empty() || t[k].size() == 0) continue;
            for (const auto& e : other.parts[k]) acc += e.v * t[k](e.c, e.r);
          }
        } else {
          for (std::size_t k = 0; k < nblocks; ++k) {
            const auto& pi = ri.parts[k];
            const auto& pj = rj.parts[k];
            if (pi.empty() || pj.empty()) continue;
            for (const auto& ei : pi)
              for (const auto& ej : pj) acc += ei.v * ej.v * x[k](ei.c, ej.r) * w[k](ej.c, ei.r);
          }
        }
        schur(i, j) = acc;
        schur(j, i) = acc;
      }
    }
    Eigen::LLT<RealMatrix> chol_m(schur);
    if (chol_m.info() != Eigen::Success) {
      const double shift = 1e-14 * std::max(1.0, schur.diagonal().cwiseAbs().maxCoeff());
      schur.diagonal().array() += shift;
      chol_m.compute(schur);
      if (chol_m.info() != Eigen::Success) break;
    }

    // X Rd W is shared by predictor and corrector.
    std::vector<RealMatrix> xrdw(nblocks);
    for (std::size_t k = 0; k < nblocks; ++k) xrdw[k] = x[k] * rd[k] * w[k];
    const Eigen::VectorXd a_xrdw = apply_a(xrdw);

    auto direction = [&](double sigma_mu, const std::vector<RealMatrix>* corr, std::vector<RealMatrix>& dx,
                         Eigen::VectorXd& dy, std::vector<RealMatrix>& dz) {
      std::vector<RealMatrix> kw(nblocks);
      for (std::size_t k = 0; k < nblocks; ++k) {
        kw[k] = sigma_mu * w[k];
        if (corr) kw[k] -= (*corr)[k] * w[k];
      }
      const Eigen::VectorXd rhs = apply_a(kw) + a_xrdw - b;
      dy = chol_m.solve(rhs);
      auto atdy = apply_at(dy);
      dz.resize(nblocks);
      dx.resize(nblocks);
      for (std::size_t k = 0; k < nblocks; ++k) {
        dz[k] = atdy[k] - rd[k];
        RealMatrix t = kw[k] - x[k] - x[k] * dz[k] * w[k];
        dx[k] = 0.5 * (t + t.transpose());
      }
    };

    auto step_length = [&](const std::vector<Eigen::LLT<RealMatrix>>& ch, const std::vector<RealMatrix>& d) {
      double a = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < nblocks; ++k) a = std::min(a, detail::max_step(ch[k], d[k]));
      return a;
    };

    std::vector<RealMatrix> dxa, dza;
    Eigen::VectorXd dya;
    direction(0.0, nullptr, dxa, dya, dza);
    const double ap_aff = std::min(1.0, step_length(chol_x, dxa));
    const double ad_aff = std::min(1.0, step_length(chol_z, dza));
    double mu_aff = 0.0;
    for (std::size_t k = 0; k < nblocks; ++k)
      mu_aff += (x[k] + ap_aff * dxa[k]).cwiseProduct(z[k] + ad_aff * dza[k]).sum();
    mu_aff /= n_total;
    double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3.0);
    sigma = std::clamp(sigma, 0.0, 1.0);

    std::vector<RealMatrix> corr(nblocks);
    for (std::size_t k = 0; k < nblocks; ++k) corr[k] = dxa[k] * dza[k];
    std::vector<RealMatrix> dx, dz;
    Eigen::VectorXd dy;
    direction(sigma * mu, &corr, dx, dy, dz);

    const double ap = std::min(1.0, opt.step_fraction * step_length(chol_x, dx));
    const double ad = std::min(1.0, opt.step_fraction * step_length(chol_z, dz));
    for (std::size_t k = 0; k < nblocks; ++k) {
      x[k] += ap * dx[k];
      z[k] += ad * dz[k];
      x[k] = 0.5 * (x[k] + x[k].transpose()).eval();
      z[k] = 0.5 * (z[k] + z[k].transpose()).eval();
    }
    y += ad * dy;

    if (ap < 1e-10 && ad < 1e-10) {
      if (++stall >= 5) break;
    } else {
      stall = 0;
    }
  }

  if (status != Status::optimal) {
    x = best.x;
    z = best.z;
    y = best.y;
  }
  const Eigen::VectorXd ax = apply_a(x);
  std::vector<RealMatrix> rd(nblocks);
  {
    auto aty = apply_at(y);
    for (std::size_t k = 0; k < nblocks; ++k) rd[k] = cmat[k] - aty[k] + z[k];
  }
  sol.objective = detail::inner(cmat, x);
  sol.dual_objective = b.dot(y);
  // Primal residual over every input row, dropped ones included.
  double rp2 = 0.0;
  double b2 = 0.0;
  for (const auto& r : all_rows) {
    const double diff = r.rhs - detail::dot(r, x);
    rp2 += diff * diff;
    b2 += r.rhs * r.rhs;
  }
  sol.residuals.primal = std::sqrt(rp2) / (1.0 + std::sqrt(b2));
  sol.residuals.dual = detail::frob_norm(rd) / (1.0 + norm_c);
  sol.residuals.gap = std::abs(sol.objective - sol.dual_objective) /
                      (1.0 + std::abs(sol.objective) + std::abs(sol.dual_objective));
  if (status == Status::optimal &&
      std::max({sol.residuals.primal, sol.residuals.dual, sol.residuals.gap}) > opt.tol)
    status = Status::numerical_limit; // a dropped row was inconsistent
  sol.status = status;
  sol.iterations = iter;
  sol.objective *= cscale;
  sol.dual_objective *= cscale;
  y *= cscale;
  for (auto& zk : z) zk *= cscale;

  sol.dual.assign(all_rows.size(), 0.0);
  for (int i = 0; i < m; ++i) sol.dual[static_cast<std::size_t>(kept[static_cast<std::size_t>(i)])] = y(i);

  for (std::size_t k = 0; k < nblocks; ++k) {
    const int n = p.blocks[k];
    auto unembed = [n](const RealMatrix& e) {
      ComplexMatrix out(n, n);
      for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r)
          out(r, c) = cplx(0.5 * (e(r, c) + e(r + n, c + n)), 0.5 * (e(r + n, c) - e(r, c + n)));
      return out;
    };
    sol.primal.push_back(HermitianOperator::hermitian_part(unembed(x[k])));
    // Z pairs with the 1/2-scaled coefficients, so its complex form doubles.
    sol.dual_slack.push_back(HermitianOperator::hermitian_part(2.0 * unembed(z[k])));
  }
  return sol;
}

} // namespace qcest::sdp
