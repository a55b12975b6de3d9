#include "roaforge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace roaforge {

namespace {

double dist_point_point(const Vec& x, const Vec& y, NormKind norm) {
  double acc = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = std::abs(x[i] - y[i]);
    if (norm == NormKind::Euclidean) {
      acc += d * d;
    } else {
      acc = std::max(acc, d);
    }
  }
  return norm == NormKind::Euclidean ? std::sqrt(acc) : acc;
}

}  // namespace

int set_dim(const CompactSetRepr& s) {
  return std::visit(
      [](const auto& v) -> int {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Vec>) {
          return static_cast<int>(v.size());
        } else if constexpr (std::is_same_v<T, PointCloud>) {
          RF_REQUIRE(!v.points.empty(), "PointCloud must be nonempty");
          return static_cast<int>(v.points.front().size());
        } else if constexpr (std::is_same_v<T, BoxSet>) {
          return static_cast<int>(v.center.size());
        } else {
          return static_cast<int>(v.u.size());
        }
      },
      s);
}

double norm_of(const Vec& d, NormKind norm) {
  double acc = 0.0;
  for (double v : d) {
    if (norm == NormKind::Euclidean) {
      acc += v * v;
    } else {
      acc = std::max(acc, std::abs(v));
    }
  }
  return norm == NormKind::Euclidean ? std::sqrt(acc) : acc;
}

double dist_point_to_set(const Vec& x, const CompactSetRepr& s, NormKind norm) {
  RF_REQUIRE(static_cast<int>(x.size()) == set_dim(s),
             "dist_point_to_set: dimension mismatch");
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Vec>) {
          return dist_point_point(x, v, norm);
        } else if constexpr (std::is_same_v<T, PointCloud>) {
          double best = std::numeric_limits<double>::infinity();
          for (const Vec& p : v.points) {
            RF_REQUIRE(p.size() == x.size(),
                       "dist_point_to_set: ragged cloud");
            best = std::min(best, dist_point_point(x, p, norm));
          }
          return best;
        } else if constexpr (std::is_same_v<T, BoxSet>) {
          // Nearest box point is the componentwise clamp; exact for any
          // monotone componentwise norm.
          Vec d(x.size());
          for (size_t i = 0; i < x.size(); ++i) {
            RF_REQUIRE(v.radius[i] >= 0.0, "BoxSet radius must be >= 0");
            const double lo = v.center[i] - v.radius[i];
            const double hi = v.center[i] + v.radius[i];
            const double nearest = std::clamp(x[i], lo, hi);
            d[i] = x[i] - nearest;
          }
          return norm_of(d, norm);
        } else {
          if (norm == NormKind::Euclidean) {
            // Project x - u onto v, clamp the parameter to [-1,1].
            double vv = 0.0, xu_v = 0.0;
            for (size_t i = 0; i < x.size(); ++i) {
              vv += v.v[i] * v.v[i];
              xu_v += (x[i] - v.u[i]) * v.v[i];
            }
            const double t = vv > 0.0 ? std::clamp(xu_v / vv, -1.0, 1.0) : 0.0;
            Vec d(x.size());
            for (size_t i = 0; i < x.size(); ++i) {
              d[i] = x[i] - (v.u[i] + t * v.v[i]);
            }
            return norm_of(d, norm);
          }
          // Non-Euclidean norms: 101-point discretization, approximate.
          double best = std::numeric_limits<double>::infinity();
          for (int k = 0; k <= 100; ++k) {
            const double t = -1.0 + 2.0 * k / 100.0;
            Vec p(x.size());
            for (size_t i = 0; i < x.size(); ++i) p[i] = v.u[i] + t * v.v[i];
            best = std::min(best, dist_point_point(x, p, norm));
          }
          return best;
        }
      },
      s);
}

double hausdorff_directed(const PointCloud& a, const PointCloud& b) {
  RF_REQUIRE(!a.points.empty() && !b.points.empty(),
             "hausdorff: clouds must be nonempty");
  RF_REQUIRE(a.points.front().size() == b.points.front().size(),
             "hausdorff: dimension mismatch");
  double worst = 0.0;
  for (const Vec& p : a.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& q : b.points) {
      best = std::min(best, dist_point_point(p, q, NormKind::Euclidean));
      if (best == 0.0) break;
    }
    worst = std::max(worst, best);
  }
  return worst;
}

double hausdorff_symmetric(const PointCloud& a, const PointCloud& b) {
  return std::max(hausdorff_directed(a, b), hausdorff_directed(b, a));
}

Vec embed(const CompactSetRepr& s, EmbeddingKind kind) {
  return std::visit(
      [&](const auto& v) -> Vec {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Vec>) {
          Vec z(v);
          z.insert(z.end(), v.size(), 0.0);  // [x; 0_n] under either kind
          return z;
        } else if constexpr (std::is_same_v<T, BoxSet>) {
          RF_REQUIRE(kind == EmbeddingKind::IntervalCenterRadius,
                     "embed: Box requires the interval embedding");
          Vec z(v.center);
          z.insert(z.end(), v.radius.begin(), v.radius.end());
          return z;
        } else if constexpr (std::is_same_v<T, SegmentSet>) {
          RF_REQUIRE(kind == EmbeddingKind::SegmentCenterDirection,
                     "embed: Segment requires the segment embedding");
          Vec z(v.u);
          z.insert(z.end(), v.v.begin(), v.v.end());
          return z;
        } else {
          throw ContractViolation("embed: clouds are not embeddable");
        }
      },
      s);
}

}  // namespace roaforge
