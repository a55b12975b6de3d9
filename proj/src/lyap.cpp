#include "roaforge/lyap.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace roaforge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Mat symmetrized(const Mat& m) {
  Mat s(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
  }
  return s;
}

double min_vertex_q_eig(const Mat& p, const std::vector<Mat>& verts) {
  double worst = kInf;
  for (const auto& a : verts) {
    const Mat q = symmetrized(mat_sub(p, matmul(transpose(a), matmul(p, a))));
    worst = std::min(worst, jacobi_eigen(q).values.front());
  }
  return worst;
}

// Largest singular value via the symmetric eigenproblem of M'M.
double spectral_norm(const Mat& m) {
  const Mat mtm = symmetrized(matmul(transpose(m), m));
  const double top = jacobi_eigen(mtm).values.back();
  return std::sqrt(std::max(0.0, top));
}

}  // namespace

double k1_level(double e1, double e2, double d) {
  RF_REQUIRE(e1 >= 0.0 && e2 >= 0.0 && d > 0.0, "k1_level: bad coefficients");
  if (e1 == 0.0) return kInf;
  const double root = (-e2 + std::sqrt(e2 * e2 + 4.0 * e1 * d)) / (2.0 * e1);
  return root * root;
}

double decay_factor(const EllipsoidRoa& roa) {
  const double lam_max = jacobi_eigen(roa.P).values.back();
  return 1.0 - roa.epsilon / lam_max;
}

EllipsoidRoa build_ellipsoid_roa(const SystemSpec& sys, const BoxSet& b, int grid) {
  RF_REQUIRE(static_cast<int>(b.center.size()) == sys.n, "build_ellipsoid_roa: box dim");
  RF_REQUIRE(grid >= 3, "build_ellipsoid_roa: grid too coarse");
  for (int i = 0; i < sys.n; ++i) {
    RF_REQUIRE(b.center[i] - b.radius[i] < 0.0 && b.center[i] + b.radius[i] > 0.0,
               "build_ellipsoid_roa: box must contain the origin in its interior");
  }

  const std::vector<Mat> verts = jacobian_vertices(sys);

  // Anchor chain: vertex average first, then each vertex. The first anchor
  // whose Lyapunov solution certifies every vertex wins.
  std::vector<Mat> anchors;
  Mat avg(sys.n, sys.n);
  for (const auto& a : verts) avg = mat_add(avg, a);
  anchors.push_back(mat_scale(avg, 1.0 / static_cast<double>(verts.size())));
  for (const auto& a : verts) anchors.push_back(a);

  Mat p;
  double min_q = -kInf;
  int anchor_used = -2;
  std::string margins;
  for (size_t k = 0; k < anchors.size(); ++k) {
    if (spectral_radius_est(anchors[k]) >= 1.0) {
      margins += (k ? " " : "") + std::to_string(static_cast<int>(k) - 1) + ":unstable";
      continue;
    }
    const Mat cand = solve_discrete_lyapunov(anchors[k]);
    const double m = min_vertex_q_eig(cand, verts);
    margins += (k ? " " : "") + std::to_string(static_cast<int>(k) - 1) + ":" + std::to_string(m);
    if (m > 0.0) {
      p = cand;
      min_q = m;
      anchor_used = static_cast<int>(k) - 1;
      break;
    }
  }
  if (anchor_used == -2) {
    throw NumericError("build_ellipsoid_roa: no anchor certifies all vertices (margins " +
                       margins + ")");
  }

  const double eps = 0.01 * min_q;
  const double d = min_q - eps;

  // Remainder coefficients: eta_r bounds |f_r(x,w) - A(w) x| by
  // (|x|^2 / 2) eta_r over the box and W, maximized on a dense grid and
  // inflated; same treatment for the similarity-transformed Jacobian norm.
  const double w_lo = sys.W.lo[0], w_hi = sys.W.hi[0];
  Vec eta(sys.n, 0.0);
  double jac_norm_max = 0.0;
  const Mat sqrt_p = spd_sqrt(p);
  const Mat sqrt_p_inv = inverse(sqrt_p);

  std::vector<int> idx(sys.n, 0);
  Vec x(sys.n);
  for (int wi = 0; wi < grid; ++wi) {
    const double w =
        grid == 1 ? w_lo : w_lo + (w_hi - w_lo) * static_cast<double>(wi) / (grid - 1);
    const Mat a = jacobian_origin(sys, w);
    jac_norm_max =
        std::max(jac_norm_max, spectral_norm(matmul(sqrt_p, matmul(a, sqrt_p_inv))));

    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      double nrm2 = 0.0;
      for (int r = 0; r < sys.n; ++r) {
        x[r] = b.center[r] - b.radius[r] +
               2.0 * b.radius[r] * static_cast<double>(idx[r]) / (grid - 1);
        nrm2 += x[r] * x[r];
      }
      if (nrm2 > 1e-18) {
        const Vec fx = step(sys, x, {w});
        const Vec ax = matvec(a, x);
        for (int r = 0; r < sys.n; ++r) {
          eta[r] = std::max(eta[r], 2.0 * std::abs(fx[r] - ax[r]) / nrm2);
        }
      }
      int carry = 0;
      while (carry < sys.n && ++idx[carry] == grid) idx[carry++] = 0;
      if (carry == sys.n) break;
    }
  }
  for (double& v : eta) v *= 1.1;
  jac_norm_max *= 1.1;

  const auto p_eigs = jacobi_eigen(p).values;
  Mat sqrt_p_abs = sqrt_p;
  for (double& v : sqrt_p_abs.a) v = std::abs(v);
  const Vec pe = matvec(sqrt_p_abs, eta);
  double pe_norm2 = 0.0;
  for (double v : pe) pe_norm2 += v * v;
  const double pe_norm = std::sqrt(pe_norm2);

  const double e1 = pe_norm2 / (4.0 * p_eigs.front());
  const double e2 = pe_norm * jac_norm_max;
  const double k1 = k1_level(e1, e2, d);

  const Mat p_inv = inverse(p);
  double k2 = kInf;
  for (int i = 0; i < sys.n; ++i) {
    const double reach = std::min(b.center[i] + b.radius[i], -(b.center[i] - b.radius[i]));
    k2 = std::min(k2, reach * reach / p_inv(i, i));
  }

  const double c1 = std::min(k1, k2);
  if (!(c1 > 0.0) || !std::isfinite(c1)) {
    throw NumericError("build_ellipsoid_roa: nonpositive level (k1 " + std::to_string(k1) +
                       ", k2 " + std::to_string(k2) + ")");
  }

  EllipsoidRoa roa;
  roa.P = p;
  roa.c1 = c1;
  roa.epsilon = eps;
  roa.domain_b = b;
  roa.diagnostics = {eta, e1, e2, d, k1, k2, min_q, anchor_used, false};
  return roa;
}

EllipsoidRoa cospoly_analytic_roa(double w_min, double w_max, double eps) {
  RF_REQUIRE(0.0 < w_min && w_min <= w_max, "cospoly_analytic_roa: need 0 < w_min <= w_max");
  RF_REQUIRE(eps >= 0.0, "cospoly_analytic_roa: eps must be nonnegative");
  const double rho_pos = -w_max + std::sqrt(w_max * w_max + 2.0);
  const double decrease_cap = 1.0 / w_min - eps;
  EllipsoidRoa roa;
  roa.P = Mat::identity(2);
  roa.c1 = std::min(decrease_cap, rho_pos);
  roa.epsilon = 0.0;  // the decrease here is quadratic, not linear in nu
  roa.domain_b = BoxSet{{0.0, 0.0}, {1.0, 1.0}};
  roa.diagnostics.k1 = rho_pos;
  roa.diagnostics.k2 = decrease_cap;
  roa.diagnostics.eta = {0.0, 0.0};
  roa.diagnostics.sound = true;
  return roa;
}

void write_ellipsoid_json(const std::string& path, const EllipsoidRoa& roa) {
  nlohmann::json j;
  auto& jp = j["P"] = nlohmann::json::array();
  for (int i = 0; i < roa.P.rows; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < roa.P.cols; ++c) row.push_back(roa.P(i, c));
    jp.push_back(row);
  }
  j["c1"] = roa.c1;
  j["epsilon"] = roa.epsilon;
  j["domain_b"] = {{"center", roa.domain_b.center}, {"radius", roa.domain_b.radius}};
  const auto& dg = roa.diagnostics;
  j["diagnostics"] = {{"eta", dg.eta},   {"e1", dg.e1},
                      {"e2", dg.e2},     {"d", dg.d},
                      {"k1", dg.k1},     {"k2", dg.k2},
                      {"min_q_eig", dg.min_q_eig}, {"anchor", dg.anchor},
                      {"sound", dg.sound}};
  std::ofstream out(path);
  RF_REQUIRE(out.good(), "write_ellipsoid_json: cannot open " + path);
  out << j.dump(2) << "\n";
  RF_REQUIRE(out.good(), "write_ellipsoid_json: write failed for " + path);
}

EllipsoidRoa read_ellipsoid_json(const std::string& path) {
  std::ifstream in(path);
  RF_REQUIRE(in.good(), "read_ellipsoid_json: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("read_ellipsoid_json: parse error: ") + e.what());
  }
  EllipsoidRoa roa;
  try {
    const auto jp = j.at("P");
    const int n = static_cast<int>(jp.size());
    roa.P = Mat(n, n);
    for (int i = 0; i < n; ++i) {
      RF_REQUIRE(static_cast<int>(jp[i].size()) == n, "read_ellipsoid_json: P not square");
      for (int c = 0; c < n; ++c) roa.P(i, c) = jp[i][c].get<double>();
    }
    roa.c1 = j.at("c1").get<double>();
    roa.epsilon = j.at("epsilon").get<double>();
    roa.domain_b.center = j.at("domain_b").at("center").get<Vec>();
    roa.domain_b.radius = j.at("domain_b").at("radius").get<Vec>();
    const auto& dg = j.at("diagnostics");
    roa.diagnostics.eta = dg.at("eta").get<Vec>();
    roa.diagnostics.e1 = dg.at("e1").get<double>();
    roa.diagnostics.e2 = dg.at("e2").get<double>();
    roa.diagnostics.d = dg.at("d").get<double>();
    roa.diagnostics.k1 = dg.at("k1").get<double>();
    roa.diagnostics.k2 = dg.at("k2").get<double>();
    roa.diagnostics.min_q_eig = dg.value("min_q_eig", 0.0);
    roa.diagnostics.anchor = dg.value("anchor", -1);
    roa.diagnostics.sound = dg.value("sound", false);
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("read_ellipsoid_json: bad schema: ") + e.what());
  }
  RF_REQUIRE(is_symmetric(roa.P, 1e-9), "read_ellipsoid_json: P not symmetric");
  RF_REQUIRE(roa.c1 > 0.0, "read_ellipsoid_json: nonpositive level");
  return roa;
}

}  // namespace roaforge
