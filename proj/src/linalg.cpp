#include "roaforge/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace roaforge {

Mat Mat::identity(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat matmul(const Mat& x, const Mat& y) {
  RF_REQUIRE(x.cols == y.rows, "matmul: shape mismatch");
  Mat z(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i) {
    for (int k = 0; k < x.cols; ++k) {
      const double xv = x(i, k);
      for (int j = 0; j < y.cols; ++j) z(i, j) += xv * y(k, j);
    }
  }
  return z;
}

Mat transpose(const Mat& x) {
  Mat z(x.cols, x.rows);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) z(j, i) = x(i, j);
  return z;
}

Mat mat_add(const Mat& x, const Mat& y) {
  RF_REQUIRE(x.rows == y.rows && x.cols == y.cols, "mat_add: shape mismatch");
  Mat z = x;
  for (size_t i = 0; i < z.a.size(); ++i) z.a[i] += y.a[i];
  return z;
}

Mat mat_sub(const Mat& x, const Mat& y) {
  RF_REQUIRE(x.rows == y.rows && x.cols == y.cols, "mat_sub: shape mismatch");
  Mat z = x;
  for (size_t i = 0; i < z.a.size(); ++i) z.a[i] -= y.a[i];
  return z;
}

Mat mat_scale(const Mat& x, double s) {
  Mat z = x;
  for (double& v : z.a) v *= s;
  return z;
}

Vec matvec(const Mat& x, const Vec& v) {
  RF_REQUIRE(x.cols == static_cast<int>(v.size()), "matvec: shape mismatch");
  Vec out(x.rows, 0.0);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) out[i] += x(i, j) * v[j];
  return out;
}

double frobenius(const Mat& x) {
  double acc = 0.0;
  for (double v : x.a) acc += v * v;
  return std::sqrt(acc);
}

bool is_symmetric(const Mat& x, double tol) {
  if (x.rows != x.cols) return false;
  for (int i = 0; i < x.rows; ++i)
    for (int j = i + 1; j < x.cols; ++j)
      if (std::abs(x(i, j) - x(j, i)) > tol) return false;
  return true;
}

Vec gauss_solve(Mat a, Vec b) {
  RF_REQUIRE(a.rows == a.cols && a.rows == static_cast<int>(b.size()),
             "gauss_solve: shape mismatch");
  const int n = a.rows;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (std::abs(a(pivot, col)) < 1e-14) {
      throw NumericError("gauss_solve: singular system");
    }
    if (pivot != col) {
      for (int j = 0; j < n; ++j) std::swap(a(col, j), a(pivot, j));
      std::swap(b[col], b[pivot]);
    }
    for (int r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (int j = col; j < n; ++j) a(r, j) -= f * a(col, j);
      b[r] -= f * b[col];
    }
  }
  Vec x(n, 0.0);
  for (int i = n - 1; i >= 0; --i) {
    double acc = b[i];
    for (int j = i + 1; j < n; ++j) acc -= a(i, j) * x[j];
    x[i] = acc / a(i, i);
  }
  return x;
}

Mat inverse(const Mat& x) {
  RF_REQUIRE(x.rows == x.cols, "inverse: square input required");
  const int n = x.rows;
  Mat inv(n, n);
  for (int col = 0; col < n; ++col) {
    Vec e(n, 0.0);
    e[col] = 1.0;
    Vec sol = gauss_solve(x, e);
    for (int i = 0; i < n; ++i) inv(i, col) = sol[i];
  }
  return inv;
}

namespace {

// Largest root magnitude of lambda^3 - c2 lambda^2 + c1 lambda - c0.
double cubic_root_radius(double c2, double c1, double c0) {
  const double s = c2 / 3.0;
  const double p = c1 - c2 * c2 / 3.0;
  const double q = -2.0 * c2 * c2 * c2 / 27.0 + c1 * c2 / 3.0 - c0;
  const double disc = -4.0 * p * p * p - 27.0 * q * q;
  double radius = 0.0;
  if (p == 0.0 && q == 0.0) {
    radius = std::abs(s);  // triple root at the shift
  } else if (disc >= 0.0 && p < 0.0) {
    // Three real roots (trigonometric form).
    const double r = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (2.0 * p) * std::sqrt(-3.0 / p), -1.0, 1.0);
    const double theta = std::acos(arg);
    for (int k = 0; k < 3; ++k) {
      const double t = r * std::cos(theta / 3.0 - 2.0 * std::acos(-1.0) * k / 3.0);
      radius = std::max(radius, std::abs(t + s));
    }
  } else {
    // One real root plus a conjugate pair (Cardano).
    const double inner = std::sqrt(std::max(q * q / 4.0 + p * p * p / 27.0, 0.0));
    const double t1 = std::cbrt(-q / 2.0 + inner) + std::cbrt(-q / 2.0 - inner);
    radius = std::abs(t1 + s);
    const double pair_prod = p + t1 * t1;  // t^2 + t1 t + pair_prod factor
    if (pair_prod > 0.0) {
      const double sigma = -t1 / 2.0;
      const double tau2 = std::max(pair_prod - sigma * sigma, 0.0);
      radius = std::max(radius, std::sqrt((sigma + s) * (sigma + s) + tau2));
    }
  }
  return radius;
}

}  // namespace

double spectral_radius_est(const Mat& a, int iters) {
  RF_REQUIRE(a.rows == a.cols, "spectral_radius_est: square input required");
  const int n = a.rows;
  // Exact characteristic-polynomial radii for the sizes the pipeline uses;
  // power iteration oscillates on complex-pair spectra.
  if (n == 1) return std::abs(a(0, 0));
  if (n == 2) {
    const double tr = a(0, 0) + a(1, 1);
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    const double disc = tr * tr - 4.0 * det;
    if (disc >= 0.0) {
      const double sd = std::sqrt(disc);
      return std::max(std::abs((tr + sd) / 2.0), std::abs((tr - sd) / 2.0));
    }
    return std::sqrt(det);  // conjugate pair, |lambda|^2 = det
  }
  if (n == 3) {
    const double c2 = a(0, 0) + a(1, 1) + a(2, 2);
    const double m00 = a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
    const double m11 = a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0);
    const double m22 = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    const double c1 = m00 + m11 + m22;
    const double c0 = a(0, 0) * m00 - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
                      a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
    return cubic_root_radius(c2, c1, c0);
  }
  // Larger sizes: geometric-mean growth of a normalized power iteration,
  // which averages out the oscillation complex pairs cause.
  Vec v(n, 0.0);
  for (int i = 0; i < n; ++i) v[i] = 1.0 + 0.1 * i;
  double vnorm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  for (int i = 0; i < n; ++i) v[i] /= vnorm;
  double log_acc = 0.0;
  int counted = 0;
  const int burn = iters / 2;
  for (int it = 0; it < iters; ++it) {
    Vec w = matvec(a, v);
    double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
    if (norm < 1e-300) return 0.0;
    if (it >= burn) {
      log_acc += std::log(norm);
      ++counted;
    }
    for (int i = 0; i < n; ++i) v[i] = w[i] / norm;
  }
  return std::exp(log_acc / std::max(counted, 1));
}

EigenSym jacobi_eigen(const Mat& m) {
  RF_REQUIRE(is_symmetric(m, 1e-9), "jacobi_eigen: symmetric input required");
  const int n = m.rows;
  Mat a = m;
  // Exact symmetrization so rotations preserve symmetry bit-for-bit.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double s = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = s;
      a(j, i) = s;
    }
  Mat v = Mat::identity(n);

  auto offdiag = [&]() {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) acc += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(acc);
  };

  for (int sweep = 0; sweep < 100 && offdiag() >= 1e-12; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a(i, i) < a(j, j); });
  EigenSym out;
  out.values.resize(n);
  out.vectors = Mat(n, n);
  for (int j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (int i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

Mat spd_sqrt(const Mat& p) {
  EigenSym es = jacobi_eigen(p);
  for (double lam : es.values) {
    if (lam <= 0.0) throw NumericError("spd_sqrt: input not positive definite");
  }
  const int n = p.rows;
  Mat k(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int r = 0; r < n; ++r)
        acc += es.vectors(i, r) * std::sqrt(es.values[r]) * es.vectors(j, r);
      k(i, j) = acc;
    }
  // Kill rounding asymmetry.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double s = 0.5 * (k(i, j) + k(j, i));
      k(i, j) = s;
      k(j, i) = s;
    }
  return k;
}

Mat solve_discrete_lyapunov(const Mat& a) {
  RF_REQUIRE(a.rows == a.cols, "solve_discrete_lyapunov: square input");
  const int n = a.rows;
  if (spectral_radius_est(a) >= 1.0) {
    throw NumericError("solve_discrete_lyapunov: spectral radius >= 1");
  }
  // vec form: (I - kron(A^T, A^T)) vec(P) = vec(I), with vec(P)_{i*n+j} = P_ij.
  // Row (i,j) states P_ij - sum_{k,l} A_ki A_lj P_kl = I_ij.
  const int nn = n * n;
  Mat sys(nn, nn);
  Vec rhs(nn, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int row = i * n + j;
      sys(row, row) += 1.0;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) sys(row, k * n + l) -= a(k, i) * a(l, j);
      rhs[row] = (i == j) ? 1.0 : 0.0;
    }
  }
  Vec p = gauss_solve(sys, rhs);
  Mat out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = p[i * n + j];
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double s = 0.5 * (out(i, j) + out(j, i));
      out(i, j) = s;
      out(j, i) = s;
    }
  return out;
}

}  // namespace roaforge
