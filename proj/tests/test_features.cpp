#include "doctest.h"
#include "rft/features.hpp"
#include "test_util.hpp"

using namespace rft;
using namespace rft::testutil;

namespace {

/// Chain skeleton with J joints at mildly random positions per frame.
SkeletonSequence chain_skeleton(int J, int T, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  SkeletonSequence seq;
  for (int j = 0; j + 1 < J; ++j) seq.bones.push_back({j, j + 1});
  for (int t = 0; t < T; ++t) {
    MatrixXd joints(J, 3);
    for (int j = 0; j < J; ++j) {
      joints(j, 0) = j * 0.8 + u(rng);
      joints(j, 1) = 0.3 * j + u(rng);
      joints(j, 2) = u(rng) + 0.1 * ((j * 7) % 3);
    }
    seq.frames.push_back(joints);
  }
  return seq;
}

}  // namespace

TEST_CASE("LARP component counts match the skeleton arithmetic") {
  std::mt19937_64 rng(41);
  // 15 joints -> 14 bones -> 182 components; 20 joints -> 342
  auto s15 = chain_skeleton(15, 2, rng);
  Trajectory t15 = larp_from_skeleton(s15);
  CHECK(t15.spec.n == 182);

  auto s20 = chain_skeleton(20, 2, rng);
  Trajectory t20 = larp_from_skeleton(s20);
  CHECK(t20.spec.n == 342);

  // 35 frames of a 15-joint skeleton stack to a 38220-dim shooting row
  CHECK(t15.spec.tangent_size() * 35 == 38220);

  for (int t = 0; t < t15.length(); ++t)
    CHECK(validate_point(t15.spec, t15.point(t)).ok(1e-9));
}

TEST_CASE("LARP is invariant to rigid whole-body translation") {
  std::mt19937_64 rng(42);
  auto seq = chain_skeleton(8, 5, rng);
  SkeletonSequence moved = seq;
  Eigen::RowVector3d offset(1.7, -2.4, 0.9);
  for (auto& f : moved.frames) f.rowwise() += offset;

  Trajectory a = larp_from_skeleton(seq);
  Trajectory b = larp_from_skeleton(moved);
  auto one = ManifoldSpec::se3_product(1);
  for (int t = 0; t < a.length(); ++t) {
    for (int c = 0; c < a.spec.n; ++c) {
      Point pa(one, a.samples.row(t).segment<16>(16 * c));
      Point pb(one, b.samples.row(t).segment<16>(16 * c));
      CHECK(geodesic_distance(one, pa, pb) <= 1e-10);
    }
  }
}

TEST_CASE("skeleton validation and degenerate bones") {
  std::mt19937_64 rng(43);
  auto seq = chain_skeleton(5, 3, rng);

  SkeletonSequence cyclic = seq;
  cyclic.bones.back() = {0, 1};  // duplicate edge forms a cycle
  CHECK_THROWS_AS(larp_from_skeleton(cyclic), ValidationError);

  SkeletonSequence sparse = seq;
  sparse.bones.pop_back();
  CHECK_THROWS_AS(larp_from_skeleton(sparse), ValidationError);

  SkeletonSequence bad = seq;
  bad.frames[1].row(2) = bad.frames[1].row(3);  // collapses bone (2,3)
  CHECK_THROWS_AS(larp_from_skeleton(bad), DegenerateBone);
}

TEST_CASE("covariance descriptor: SPD invariants and sampling behavior") {
  std::mt19937_64 rng(44);
  std::normal_distribution<double> g(0.0, 1.0);
  int n = 10000, d = 7;
  MatrixXd Z(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) Z(i, j) = g(rng);

  Point p = covariance_descriptor(Z);
  CHECK(p.spec == ManifoldSpec::spd(7));
  CHECK(validate_point(p.spec, p).ok(1e-9));
  // i.i.d. standard normal rows concentrate on the (det-normalized) identity
  MatrixXd C = Eigen::Map<const MatrixXd>(p.data.data(), d, d);
  CHECK((C - MatrixXd::Identity(d, d)).norm() <= 0.1);

  // duplicating every row only rescales the (n-1) factor: identical after
  // det-normalization
  MatrixXd Z2(2 * n, d);
  Z2 << Z, Z;
  Point p2 = covariance_descriptor(Z2);
  CHECK((p.data - p2.data).cwiseAbs().maxCoeff() < 1e-9);

  CHECK_THROWS_AS((void)covariance_descriptor(MatrixXd::Ones(20, 7)),
                  SingularCovariance);
  CHECK_THROWS_AS((void)covariance_descriptor(MatrixXd::Random(5, 7)),
                  ValidationError);
}

TEST_CASE("shapes map to Grassmann projections invariantly") {
  std::mt19937_64 rng(45);
  std::normal_distribution<double> g(0.0, 1.0);
  int m = 12;
  MatrixXd raw(m, 2);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < 2; ++j) raw(i, j) = g(rng);

  auto shape = make_shape(raw);
  CHECK(shape.points.colwise().sum().norm() < 1e-12);
  Point p = shape_to_grassmann(shape);
  CHECK(p.spec == ManifoldSpec::grassmann(2, m));
  MatrixXd P = Eigen::Map<const MatrixXd>(p.data.data(), m, m);
  CHECK(P.trace() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(validate_point(p.spec, p).ok(1e-9));

  // affine invariance: L and L*A span the same plane
  Eigen::Matrix2d A;
  A << 1.3, -0.4, 0.8, 2.1;
  Point pa = shape_to_grassmann(make_shape(raw * A));
  CHECK((p.data - pa.data).cwiseAbs().maxCoeff() < 1e-10);

  // determinism and re-projection stability
  Point again = shape_to_grassmann(shape);
  CHECK((p.data - again.data).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(P);
  MatrixXd Y = es.eigenvectors().rightCols(2);
  Point rep = shape_to_grassmann(LandmarkShape{Y});
  CHECK((p.data - rep.data).cwiseAbs().maxCoeff() < 1e-12);

  // axis-aligned shapes give the canonical projection diag(I_2, 0)
  MatrixXd axis = MatrixXd::Zero(m, 2);
  axis(0, 0) = 2.0;
  axis(1, 1) = 0.5;
  Point pq = shape_to_grassmann(LandmarkShape{axis});
  MatrixXd Pq = Eigen::Map<const MatrixXd>(pq.data.data(), m, m);
  MatrixXd Q = MatrixXd::Zero(m, m);
  Q(0, 0) = Q(1, 1) = 1.0;
  CHECK((Pq - Q).norm() < 1e-12);
  CHECK((pq.data - identity_point(pq.spec).data).norm() < 1e-12);

  // collinear landmarks are rejected
  MatrixXd line(m, 2);
  for (int i = 0; i < m; ++i) {
    line(i, 0) = i;
    line(i, 1) = 2.0 * i;
  }
  CHECK_THROWS_AS((void)make_shape(line), DegenerateShape);
}
