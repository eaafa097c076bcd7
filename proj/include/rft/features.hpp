#ifndef RFT_FEATURES_HPP
#define RFT_FEATURES_HPP

#include "rft/elastic.hpp"

namespace rft {

// Constructors mapping raw observations to manifold-valued data.

/// Joint positions over time plus the skeleton tree.
struct SkeletonSequence {
  std::vector<MatrixXd> frames;            // each J x 3
  std::vector<std::pair<int, int>> bones;  // tree edges over joint indices

  int joint_count() const {
    return frames.empty() ? 0 : static_cast<int>(frames.front().rows());
  }
  int frame_count() const { return static_cast<int>(frames.size()); }
  int bone_count() const { return static_cast<int>(bones.size()); }
};

/// Throws ValidationError unless the joint data is finite and the bone list
/// is an acyclic connected tree over at least two joints.
void validate_skeleton(const SkeletonSequence& seq);

/// Lie-algebra relative pairs: one SE(3) element per ordered pair of
/// distinct bones and frame, giving a trajectory on SE(3)^(B(B-1)).
Trajectory larp_from_skeleton(const SkeletonSequence& seq);

/// Regularized, determinant-normalized covariance of the rows of Z;
/// a point on SPD(cols(Z)).
Point covariance_descriptor(const MatrixXd& Z);

/// m planar landmarks with zero centroid.
struct LandmarkShape {
  MatrixXd points;  // m x 2
};

/// Centers the landmarks and validates rank 2.
LandmarkShape make_shape(MatrixXd raw);

/// Projection onto the 2D column span of the shape: a point on
/// Grassmann(2, m), invariant to full-rank right multiplication.
Point shape_to_grassmann(const LandmarkShape& shape);

}  // namespace rft

#endif  // RFT_FEATURES_HPP
