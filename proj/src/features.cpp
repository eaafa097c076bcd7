#include "rft/features.hpp"

#include <numeric>

namespace rft {

namespace {

using Mat4 = Eigen::Matrix4d;
using Vec3 = Eigen::Vector3d;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

VectorXd flatten(const MatrixXd& m) {
  RowMat r = m;
  return Eigen::Map<const VectorXd>(r.data(), r.size());
}

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

/// Canonical frame of a bone: x along the bone, y by Gram-Schmidt against
/// the global up direction, z completing the right-handed triad.
Mat4 bone_frame(const Vec3& a, const Vec3& b, double& length) {
  Vec3 x = b - a;
  length = x.norm();
  if (length < 1e-12) throw DegenerateBone("zero-length bone");
  x /= length;
  Vec3 up(0.0, 0.0, 1.0);
  Vec3 y = up - up.dot(x) * x;
  if (y.norm() < 1e-6) {
    up = Vec3(0.0, 1.0, 0.0);
    y = up - up.dot(x) * x;
  }
  y.normalize();
  Vec3 z = x.cross(y);
  Mat4 g = Mat4::Identity();
  g.block<3, 1>(0, 0) = x;
  g.block<3, 1>(0, 1) = y;
  g.block<3, 1>(0, 2) = z;
  g.block<3, 1>(0, 3) = a;
  return g;
}

}  // namespace

void validate_skeleton(const SkeletonSequence& seq) {
  int J = seq.joint_count();
  if (J < 2) throw ValidationError("skeleton needs at least 2 joints");
  if (seq.frames.empty()) throw ValidationError("skeleton has no frames");
  for (const auto& f : seq.frames) {
    if (f.rows() != J || f.cols() != 3)
      throw ValidationError("inconsistent joint matrix shape");
    if (!f.allFinite()) throw ValidationError("non-finite joint coordinates");
  }
  if (seq.bone_count() != J - 1)
    throw ValidationError("bone list must be a spanning tree (B = J - 1)");
  std::vector<int> parent(J);
  std::iota(parent.begin(), parent.end(), 0);
  for (auto [a, b] : seq.bones) {
    if (a < 0 || a >= J || b < 0 || b >= J || a == b)
      throw ValidationError("bone joint index out of range");
    int ra = find_root(parent, a), rb = find_root(parent, b);
    if (ra == rb) throw ValidationError("bone list contains a cycle");
    parent[ra] = rb;
  }
}

Trajectory larp_from_skeleton(const SkeletonSequence& seq) {
  validate_skeleton(seq);
  int B = seq.bone_count();
  int n = B * (B - 1);
  int T = seq.frame_count();
  auto spec = ManifoldSpec::se3_product(n);

  Trajectory out;
  out.spec = spec;
  out.samples.resize(T, spec.ambient_size());
  std::vector<Mat4> frames(B), inv(B);
  std::vector<double> length(B);
  for (int t = 0; t < T; ++t) {
    const MatrixXd& joints = seq.frames[t];
    for (int i = 0; i < B; ++i) {
      frames[i] = bone_frame(joints.row(seq.bones[i].first).transpose(),
                             joints.row(seq.bones[i].second).transpose(),
                             length[i]);
      inv[i] = frames[i].inverse();
    }
    int c = 0;
    for (int i = 0; i < B; ++i) {
      for (int j = 0; j < B; ++j) {
        if (j == i) continue;
        Mat4 rel = inv[i] * frames[j];
        rel.block<3, 1>(0, 3) /= length[i];  // translation in bone-lengths
        out.samples.row(t).segment<16>(16 * c) = flatten(rel);
        ++c;
      }
    }
  }
  return out;
}

Point covariance_descriptor(const MatrixXd& Z) {
  const int n = static_cast<int>(Z.rows());
  const int d = static_cast<int>(Z.cols());
  if (n < d + 1) throw ValidationError("covariance needs more rows than features");
  if (!Z.allFinite()) throw ValidationError("non-finite feature matrix");

  Eigen::RowVectorXd mu = Z.colwise().mean();
  MatrixXd X = Z.rowwise() - mu;
  MatrixXd C = X.transpose() * X / (n - 1);
  double eps = 1e-8 * C.trace() / d;
  C += eps * MatrixXd::Identity(d, d);

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(C);
  double lo = es.eigenvalues().minCoeff();
  double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0 || lo < 1e-14 * hi)
    throw SingularCovariance("covariance singular beyond regularization");
  C /= std::pow(C.determinant(), 1.0 / d);
  return Point(ManifoldSpec::spd(d), flatten(C));
}

LandmarkShape make_shape(MatrixXd raw) {
  if (raw.cols() != 2) throw ValidationError("landmark shape must be m x 2");
  if (raw.rows() < 3) throw ValidationError("landmark shape needs m >= 3");
  if (!raw.allFinite()) throw ValidationError("non-finite landmarks");
  Eigen::RowVector2d centroid = raw.colwise().mean();
  raw.rowwise() -= centroid;
  Eigen::JacobiSVD<MatrixXd> svd(raw);
  if (svd.singularValues()[1] < 1e-10 * std::max(svd.singularValues()[0], 1e-300))
    throw DegenerateShape("landmarks span less than two dimensions");
  return LandmarkShape{std::move(raw)};
}

Point shape_to_grassmann(const LandmarkShape& shape) {
  const MatrixXd& L = shape.points;
  int m = static_cast<int>(L.rows());
  Eigen::HouseholderQR<MatrixXd> qr(L);
  MatrixXd Q = qr.householderQ() * MatrixXd::Identity(m, 2);
  MatrixXd R = qr.matrixQR().topRows(2).triangularView<Eigen::Upper>();
  for (int j = 0; j < 2; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  MatrixXd P = Q * Q.transpose();
  return Point(ManifoldSpec::grassmann(2, m), flatten(P));
}

}  // namespace rft
