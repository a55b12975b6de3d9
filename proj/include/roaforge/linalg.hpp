// Small dense linear-algebra kit for the ellipsoid construction: the
// matrices here are at most 3x3 (Kronecker systems at most 9x9), so simple
// direct algorithms are exact enough and dependency-free.
#pragma once

#include "roaforge/common.hpp"

namespace roaforge {

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;  // row-major

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  static Mat identity(int n);
};

Mat matmul(const Mat& x, const Mat& y);
Mat transpose(const Mat& x);
Mat mat_add(const Mat& x, const Mat& y);
Mat mat_sub(const Mat& x, const Mat& y);
Mat mat_scale(const Mat& x, double s);
Vec matvec(const Mat& x, const Vec& v);
double frobenius(const Mat& x);
bool is_symmetric(const Mat& x, double tol = 1e-12);

// Gaussian elimination with partial pivoting; throws NumericError on a
// (numerically) singular system.
Vec gauss_solve(Mat a, Vec b);

Mat inverse(const Mat& x);

// Power-iteration estimate of the spectral radius (used only as a
// stability precheck, not for certification).
double spectral_radius_est(const Mat& a, int iters = 200);

struct EigenSym {
  Vec values;   // ascending
  Mat vectors;  // columns are orthonormal eigenvectors, M v_i = values[i] v_i
};

// Cyclic Jacobi rotations; sweeps until the off-diagonal Frobenius norm
// drops below 1e-12. Requires a symmetric input.
EigenSym jacobi_eigen(const Mat& m);

// Unique symmetric positive definite square root, via eigendecomposition.
Mat spd_sqrt(const Mat& p);

// Solves A^T P A - P = -I for P by Kronecker vectorization + Gaussian
// elimination; requires spectral radius of A < 1. Result is symmetrized.
Mat solve_discrete_lyapunov(const Mat& a);

}  // namespace roaforge
