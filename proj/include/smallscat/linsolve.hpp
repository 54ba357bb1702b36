/// \file smallscat/linsolve.hpp
/// \brief Block pair operators with a dense-LU / matrix-free GMRES policy.
///
/// All reduced systems in this library have the shape
///   x_j - sum_{m != j} K(j, m) x_m = rhs_j
/// with a small fixed block size (1 for monopole systems, 5 for the
/// hard-particle system).  An operator supplies blocks on demand; the solver
/// either assembles the full matrix and factors it, or applies blocks
/// on the fly inside restarted GMRES.

#pragma once

#include "smallscat/types.hpp"

#include <algorithm>
#include <cstddef>
#include <exception>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace smallscat {

using Index = Eigen::Index;

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// An exception thrown by the body is captured and rethrown
/// on the calling thread once the loop has finished.
template <class F>
void parallel_for(Index n, F&& f) {
  std::exception_ptr failure;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
  for (Index i = 0; i < n; ++i) {
    try {
      f(i);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical(smallscat_parallel_for)
#endif
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

enum class SolveMethod { Auto, Direct, Iterative };

struct SolverOptions {
  SolveMethod method = SolveMethod::Auto;
  /// Total unknown count at or below which the dense path is used.
  Index direct_threshold = 4096;
  Real tol = 1e-10;
  int restart = 120;
  int max_iter = 3000;
};

struct SolveInfo {
  std::string method;
  Real residual = 0.0;  ///< relative 2-norm residual ||Ax-b|| / ||b||
  int iterations = 0;
};

/// Requirements on a block operator:
///   static constexpr int block;
///   Index blocks() const;
///   Eigen::Matrix<Complex, block, block> coupling(Index j, Index m) const;
/// coupling() is only called with j != m; the diagonal block is identity.
template <class Op>
concept BlockOperator = requires(const Op& op, Index j) {
  { Op::block } -> std::convertible_to<int>;
  { op.blocks() } -> std::convertible_to<Index>;
  op.coupling(j, j);
};

template <BlockOperator Op>
CMatrix assemble(const Op& op) {
  constexpr int B = Op::block;
  const Index n = op.blocks();
  CMatrix A = CMatrix::Identity(B * n, B * n);
  parallel_for(n, [&](Index j) {
    for (Index m = 0; m < n; ++m) {
      if (m == j) continue;
      A.template block<B, B>(B * j, B * m) = -op.coupling(j, m);
    }
  });
  return A;
}

/// y = A x without forming A.
template <BlockOperator Op>
CVector apply(const Op& op, const CVector& x) {
  constexpr int B = Op::block;
  const Index n = op.blocks();
  CVector y(B * n);
  parallel_for(n, [&](Index j) {
    Eigen::Matrix<Complex, B, 1> acc = x.template segment<B>(B * j);
    for (Index m = 0; m < n; ++m) {
      if (m == j) continue;
      acc -= op.coupling(j, m) * x.template segment<B>(B * m);
    }
    y.template segment<B>(B * j) = acc;
  });
  return y;
}

/// Restarted GMRES with modified Gram-Schmidt and complex Givens rotations.
/// `x` carries the initial guess in and the solution out.
template <class ApplyFn>
SolveInfo gmres(ApplyFn&& A, const CVector& b, CVector& x, Real tol,
                int restart, int max_iter) {
  SolveInfo info{"gmres", 0.0, 0};
  const Real bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero(b.size());
    return info;
  }
  if (x.size() != b.size()) x = CVector::Zero(b.size());
  const Index n = b.size();
  const int m = std::max(1, std::min<int>(restart, static_cast<int>(n)));

  CVector r = b - A(x);
  Real beta = r.norm();
  while (beta / bnorm > tol && info.iterations < max_iter) {
    CMatrix V(n, m + 1);
    CMatrix H = CMatrix::Zero(m + 1, m);
    std::vector<Complex> cs(m), sn(m);
    CVector g = CVector::Zero(m + 1);
    g(0) = beta;
    V.col(0) = r / beta;

    int j = 0;
    while (j < m && info.iterations < max_iter) {
      CVector w = A(V.col(j));
      for (int i = 0; i <= j; ++i) {
        H(i, j) = V.col(i).dot(w);
        w -= H(i, j) * V.col(i);
      }
      const Real wn = w.norm();
      H(j + 1, j) = wn;
      if (wn > 0.0) V.col(j + 1) = w / wn;

      for (int i = 0; i < j; ++i) {
        const Complex hi = H(i, j), hn = H(i + 1, j);
        H(i, j) = std::conj(cs[i]) * hi + std::conj(sn[i]) * hn;
        H(i + 1, j) = -sn[i] * hi + cs[i] * hn;
      }
      const Complex a = H(j, j), bb = H(j + 1, j);
      const Real rr = std::hypot(std::abs(a), std::abs(bb));
      cs[j] = a / rr;
      sn[j] = bb / rr;
      H(j, j) = rr;
      H(j + 1, j) = 0.0;
      g(j + 1) = -sn[j] * g(j);
      g(j) = std::conj(cs[j]) * g(j);

      ++j;
      ++info.iterations;
      if (std::abs(g(j)) / bnorm <= tol || wn == 0.0) break;
    }

    const CVector y =
        H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    x += V.leftCols(j) * y;
    r = b - A(x);
    beta = r.norm();
  }
  info.residual = beta / bnorm;
  return info;
}

/// Solve (I - K) x = rhs for a block operator under the configured policy.
template <BlockOperator Op>
CVector solve(const Op& op, const CVector& rhs, const SolverOptions& opts,
              SolveInfo* info_out = nullptr) {
  const Index size = Op::block * op.blocks();
  if (rhs.size() != size) throw SolveFailure("right-hand side size mismatch");
  if (size == 0) {
    if (info_out) *info_out = {"empty", 0.0, 0};
    return CVector();
  }

  const bool direct =
      opts.method == SolveMethod::Direct ||
      (opts.method == SolveMethod::Auto && size <= opts.direct_threshold);

  SolveInfo info;
  CVector x;
  if (direct) {
    const CMatrix A = assemble(op);
    Eigen::PartialPivLU<CMatrix> lu(A);
    x = lu.solve(rhs);
    if (!x.allFinite()) throw SolveFailure("dense LU produced non-finite values");
    const Real bn = rhs.norm();
    info.method = "dense-lu";
    info.residual = bn > 0.0 ? (A * x - rhs).norm() / bn : 0.0;
    info.iterations = 1;
  } else {
    x = rhs;
    info = gmres([&](const CVector& v) { return apply(op, v); }, rhs, x,
                 opts.tol, opts.restart, opts.max_iter);
  }
  const Real accept = direct ? std::max(opts.tol, 1e-8) : opts.tol;
  if (!(info.residual <= accept)) {
    throw SolveFailure(info.method + " did not reach tolerance: residual " +
                       std::to_string(info.residual));
  }
  if (info_out) *info_out = info;
  return x;
}

}  // namespace smallscat
