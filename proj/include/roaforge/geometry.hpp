// Compact-set representations, point-to-set distances, Hausdorff metrics,
// and the fixed-dimension set embeddings consumed by the network.
#pragma once

#include <variant>

#include "roaforge/common.hpp"

namespace roaforge {

enum class NormKind { Euclidean, Chebyshev };
enum class EmbeddingKind { IntervalCenterRadius, SegmentCenterDirection };

// Nonempty finite point multiset; duplicates permitted (sups and distances
// are unaffected).
struct PointCloud {
  std::vector<Vec> points;
};

// Axis-aligned box {center + t : |t_i| <= radius_i}.
struct BoxSet {
  Vec center;
  Vec radius;  // componentwise >= 0
};

// Line segment {u + t v : t in [-1,1]}.
struct SegmentSet {
  Vec u;
  Vec v;
};

// Tagged union over the set shapes the pipeline produces. Singleton carries
// the point directly.
using CompactSetRepr = std::variant<Vec, PointCloud, BoxSet, SegmentSet>;

int set_dim(const CompactSetRepr& s);

double norm_of(const Vec& d, NormKind norm);

// Exact infimum of ||x - y|| over y in S for Singleton/Cloud/Box.
// Segment: exact via 1-D projection for the Euclidean norm; other norms fall
// back to a 101-point discretization of the segment (approximate).
double dist_point_to_set(const Vec& x, const CompactSetRepr& s,
                         NormKind norm = NormKind::Euclidean);

// sup_{a in A} dist(a, B), Euclidean.
double hausdorff_directed(const PointCloud& a, const PointCloud& b);

// max of the two directed distances.
double hausdorff_symmetric(const PointCloud& a, const PointCloud& b);

// Fixed-length embedding: Box -> [center; radius], Segment -> [u; v],
// Singleton -> [x; 0_n] under either kind. Injective on the admissible
// family (boxes have canonical nonnegative radii; segments are produced with
// a fixed orientation convention by the dynamics).
Vec embed(const CompactSetRepr& s, EmbeddingKind kind);

}  // namespace roaforge
