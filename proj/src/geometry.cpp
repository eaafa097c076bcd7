#include "rft/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <cmath>
#include <random>
#include <sstream>

namespace rft {

namespace {

using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec3 = Eigen::Vector3d;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kPi = 3.14159265358979323846;
constexpr double kCutLocusTol = 1e-6;
constexpr double kSmallAngle = 1e-7;

void check_finite(const VectorXd& v, const char* what) {
  if (!v.allFinite()) throw NumericalError(std::string("non-finite input: ") + what);
}

Eigen::Map<const RowMat> as_matrix(const VectorXd& v, int rows, int cols) {
  return Eigen::Map<const RowMat>(v.data(), rows, cols);
}

VectorXd flatten(const Eigen::MatrixXd& m) {
  RowMat r = m;
  return Eigen::Map<const VectorXd>(r.data(), r.size());
}

MatrixXd symmetrize(const MatrixXd& m) {
  MatrixXd t = m.transpose();
  return 0.5 * (m + t);
}

// ---------------------------------------------------------------------------
// SE(3)^n kernels. Tangents are stored as n stacked xi = (omega, v) in R^6,
// identified with the Lie algebra at the base point via left translation;
// parallel transport between base points is then the identity on xi.
// ---------------------------------------------------------------------------

Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

Vec3 vee(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

Mat3 rodrigues(const Vec3& w) {
  double th = w.norm();
  Mat3 wh = hat(w);
  if (th < kSmallAngle) {
    // 2nd-order Taylor of sin(th)/th and (1-cos th)/th^2
    return Mat3::Identity() + (1.0 - th * th / 6.0) * wh +
           (0.5 - th * th / 24.0) * wh * wh;
  }
  return Mat3::Identity() + std::sin(th) / th * wh +
         (1.0 - std::cos(th)) / (th * th) * wh * wh;
}

// A such that the translation part of exp(xi^) is A*v.
Mat3 se3_A(const Vec3& w) {
  double th = w.norm();
  Mat3 wh = hat(w);
  if (th < kSmallAngle) {
    return Mat3::Identity() + (0.5 - th * th / 24.0) * wh +
           (1.0 / 6.0 - th * th / 120.0) * wh * wh;
  }
  return Mat3::Identity() + (1.0 - std::cos(th)) / (th * th) * wh +
         (th - std::sin(th)) / (th * th * th) * wh * wh;
}

Mat3 se3_A_inv(const Vec3& w) {
  double th = w.norm();
  Mat3 wh = hat(w);
  if (th < kSmallAngle) {
    return Mat3::Identity() - 0.5 * wh +
           (1.0 / 12.0 + th * th / 720.0) * wh * wh;
  }
  double c = (2.0 * std::sin(th) - th * (1.0 + std::cos(th))) /
             (2.0 * th * th * std::sin(th));
  return Mat3::Identity() - 0.5 * wh + c * wh * wh;
}

Vec3 log_rotation(const Mat3& R) {
  Eigen::AngleAxisd aa(R);
  double th = aa.angle();
  if (th > kPi - kCutLocusTol)
    throw CutLocusError("SO(3) rotation angle within tolerance of pi");
  return th * aa.axis();
}

Mat4 se3_exp_hat(const Eigen::Matrix<double, 6, 1>& xi) {
  Vec3 w = xi.head<3>(), v = xi.tail<3>();
  Mat4 g = Mat4::Identity();
  g.topLeftCorner<3, 3>() = rodrigues(w);
  g.topRightCorner<3, 1>() = se3_A(w) * v;
  return g;
}

Eigen::Matrix<double, 6, 1> se3_log(const Mat4& g) {
  Eigen::Matrix<double, 6, 1> xi;
  Vec3 w = log_rotation(g.topLeftCorner<3, 3>());
  xi.head<3>() = w;
  xi.tail<3>() = se3_A_inv(w) * g.topRightCorner<3, 1>();
  return xi;
}

Mat4 se3_block(const Point& p, int i) {
  Mat4 g = as_matrix(p.data, 4 * p.spec.n, 4).block<4, 4>(4 * i, 0);
  return g;
}

Point se3_exp(const Point& p, const Tangent& v) {
  int n = p.spec.n;
  VectorXd out(16 * n);
  for (int i = 0; i < n; ++i) {
    Mat4 g = se3_block(p, i) * se3_exp_hat(v.data.segment<6>(6 * i));
    out.segment<16>(16 * i) = flatten(g);
  }
  return Point(p.spec, out);
}

Tangent se3_log_map(const Point& p, const Point& q) {
  int n = p.spec.n;
  VectorXd xi(6 * n);
  for (int i = 0; i < n; ++i) {
    Mat4 rel = se3_block(p, i).inverse() * se3_block(q, i);
    xi.segment<6>(6 * i) = se3_log(rel);
  }
  return Tangent(p.spec, p, xi);
}

// ---------------------------------------------------------------------------
// SPD P(d), det = 1. Tangent at P stored as V = P*A, A symmetric trace-free.
// ---------------------------------------------------------------------------

MatrixXd sym_func(const MatrixXd& s, double (*f)(double)) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (s + s.transpose()));
  VectorXd ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) ev[i] = f(ev[i]);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

MatrixXd sym_sqrt(const MatrixXd& s) { return sym_func(s, std::sqrt); }
MatrixXd sym_log(const MatrixXd& s) { return sym_func(s, std::log); }
MatrixXd sym_exp(const MatrixXd& s) { return sym_func(s, std::exp); }

MatrixXd spd_mat(const Point& p) { return as_matrix(p.data, p.spec.d, p.spec.d); }

Point spd_exp(const Point& p, const Tangent& v) {
  int d = p.spec.d;
  MatrixXd P = spd_mat(p);
  MatrixXd A = P.inverse() * as_matrix(v.data, d, d);
  MatrixXd res = sym_sqrt(P * sym_exp(2.0 * A) * P);
  return Point(p.spec, flatten(res));
}

Tangent spd_log(const Point& p, const Point& q) {
  MatrixXd P1 = spd_mat(p), P2 = spd_mat(q);
  MatrixXd M = P1.inverse() * P2;
  MatrixXd A = 0.5 * sym_log(M * M.transpose());
  return Tangent(p.spec, p, flatten(MatrixXd(P1 * A)));
}

Tangent spd_transport(const Tangent& v, const Point& p, const Point& q) {
  int d = p.spec.d;
  MatrixXd P1 = spd_mat(p), P2 = spd_mat(q);
  MatrixXd P1inv = P1.inverse();
  MatrixXd B = P1inv * as_matrix(v.data, d, d);
  MatrixXd M = P1inv * P2;
  MatrixXd P12 = sym_sqrt(M * M.transpose());
  MatrixXd T12 = P12.inverse() * P1inv * P2;
  MatrixXd res = P2 * T12.transpose() * B * T12;
  return Tangent(q.spec, q, flatten(res));
}

// ---------------------------------------------------------------------------
// Grassmann G(k, m-k), points stored as m x m projection matrices. Tangents
// are horizontal lifts H (m x k, Y^T H = 0) at the canonical orthonormal
// basis Y(P) built from the top-k eigenvectors of P.
// ---------------------------------------------------------------------------

MatrixXd grass_basis(const Point& p) {
  int m = p.spec.m, k = p.spec.k;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(
      MatrixXd(as_matrix(p.data, m, m)));
  MatrixXd Y = es.eigenvectors().rightCols(k);  // eigenvalues ascending
  // deterministic sign convention
  for (int j = 0; j < k; ++j) {
    int imax;
    Y.col(j).cwiseAbs().maxCoeff(&imax);
    if (Y(imax, j) < 0) Y.col(j) = -Y.col(j);
  }
  return Y;
}

Point grass_from_basis(const ManifoldSpec& spec, const MatrixXd& Y) {
  Eigen::HouseholderQR<MatrixXd> qr(Y);
  MatrixXd Q = qr.householderQ() * MatrixXd::Identity(spec.m, spec.k);
  return Point(spec, flatten(MatrixXd(Q * Q.transpose())));
}

Point grass_exp(const Point& p, const Tangent& v) {
  int m = p.spec.m, k = p.spec.k;
  MatrixXd Y = grass_basis(p);
  MatrixXd H = as_matrix(v.data, m, k);
  Eigen::JacobiSVD<MatrixXd> svd(H, Eigen::ComputeThinU | Eigen::ComputeThinV);
  VectorXd s = svd.singularValues();
  MatrixXd Ynew = Y * svd.matrixV() * s.array().cos().matrix().asDiagonal() *
                      svd.matrixV().transpose() +
                  svd.matrixU() * s.array().sin().matrix().asDiagonal() *
                      svd.matrixV().transpose();
  return grass_from_basis(p.spec, Ynew);
}

Tangent grass_log(const Point& p, const Point& q) {
  int m = p.spec.m, k = p.spec.k;
  MatrixXd Y1 = grass_basis(p), Y2 = grass_basis(q);
  MatrixXd M0 = Y1.transpose() * Y2;
  Eigen::JacobiSVD<MatrixXd> chk(M0);
  if (chk.singularValues().minCoeff() < kCutLocusTol)
    throw CutLocusError("Grassmann principal angle within tolerance of pi/2");
  MatrixXd K =
      (MatrixXd::Identity(m, m) - Y1 * Y1.transpose()) * Y2 * M0.inverse();
  Eigen::JacobiSVD<MatrixXd> svd(K, Eigen::ComputeThinU | Eigen::ComputeThinV);
  VectorXd s = svd.singularValues();
  for (int i = 0; i < s.size(); ++i) s[i] = std::atan(s[i]);
  MatrixXd H =
      svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  return Tangent(p.spec, p, flatten(H));
}

Tangent grass_transport(const Tangent& v, const Point& p, const Point& q) {
  int m = p.spec.m, k = p.spec.k;
  MatrixXd Y1 = grass_basis(p);
  MatrixXd W = as_matrix(v.data, m, k);
  Tangent delta = grass_log(p, q);
  MatrixXd D = as_matrix(delta.data, m, k);
  Eigen::JacobiSVD<MatrixXd> svd(D, Eigen::ComputeThinU | Eigen::ComputeThinV);
  VectorXd s = svd.singularValues();
  const MatrixXd& U = svd.matrixU();
  const MatrixXd& V = svd.matrixV();
  MatrixXd tau =
      (-Y1 * V * s.array().sin().matrix().asDiagonal() +
       U * s.array().cos().matrix().asDiagonal()) *
          (U.transpose() * W) +
      (W - U * (U.transpose() * W));
  // rebase from the geodesic endpoint frame onto the canonical basis of q
  MatrixXd Yend = Y1 * V * s.array().cos().matrix().asDiagonal() *
                      V.transpose() +
                  U * s.array().sin().matrix().asDiagonal() * V.transpose();
  MatrixXd Y2 = grass_basis(q);
  MatrixXd R = Yend.transpose() * Y2;
  Eigen::JacobiSVD<MatrixXd> rsvd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  R = rsvd.matrixU() * rsvd.matrixV().transpose();  // nearest orthogonal
  MatrixXd H = tau * R;
  H -= Y2 * (Y2.transpose() * H);  // numerical horizontality cleanup
  return Tangent(q.spec, q, flatten(H));
}

// ---------------------------------------------------------------------------

void check_tangent_valid(const ManifoldSpec& spec, const Point& p,
                         const Tangent& v, double tol = 1e-6) {
  if (v.spec != spec) throw InvalidTangent("tangent spec mismatch");
  if (v.data.size() != spec.tangent_size())
    throw InvalidTangent("tangent storage size mismatch");
  check_finite(v.data, "tangent");
  switch (spec.kind) {
    case ManifoldKind::SPD: {
      MatrixXd A = spd_mat(p).inverse() * as_matrix(v.data, spec.d, spec.d);
      double viol = (A - A.transpose()).cwiseAbs().maxCoeff();
      viol = std::max(viol, std::abs(A.trace()));
      if (viol > tol) throw InvalidTangent("SPD tangent not of the form P*A");
      break;
    }
    case ManifoldKind::Grassmann: {
      MatrixXd Y = grass_basis(p);
      MatrixXd H = as_matrix(v.data, spec.m, spec.k);
      if ((Y.transpose() * H).cwiseAbs().maxCoeff() > tol)
        throw InvalidTangent("Grassmann tangent not horizontal at base");
      break;
    }
    default:
      break;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ManifoldSpec
// ---------------------------------------------------------------------------

ManifoldSpec ManifoldSpec::se3_product(int n) {
  if (n < 1) throw ValidationError("SE3Product requires n >= 1");
  ManifoldSpec s;
  s.kind = ManifoldKind::SE3Product;
  s.n = n;
  return s;
}

ManifoldSpec ManifoldSpec::spd(int d) {
  if (d < 2) throw ValidationError("SPD requires d >= 2");
  ManifoldSpec s;
  s.kind = ManifoldKind::SPD;
  s.d = d;
  return s;
}

ManifoldSpec ManifoldSpec::grassmann(int k, int m) {
  if (k < 1 || k >= m) throw ValidationError("Grassmann requires 1 <= k < m");
  ManifoldSpec s;
  s.kind = ManifoldKind::Grassmann;
  s.k = k;
  s.m = m;
  return s;
}

ManifoldSpec ManifoldSpec::euclidean(int dim) {
  if (dim < 1) throw ValidationError("Euclidean requires dim >= 1");
  ManifoldSpec s;
  s.kind = ManifoldKind::Euclidean;
  s.dim = dim;
  return s;
}

int ManifoldSpec::ambient_size() const {
  switch (kind) {
    case ManifoldKind::SE3Product: return 16 * n;
    case ManifoldKind::SPD: return d * d;
    case ManifoldKind::Grassmann: return m * m;
    case ManifoldKind::Euclidean: return dim;
  }
  return 0;
}

int ManifoldSpec::tangent_size() const {
  switch (kind) {
    case ManifoldKind::SE3Product: return 6 * n;
    case ManifoldKind::SPD: return d * d;
    case ManifoldKind::Grassmann: return m * k;
    case ManifoldKind::Euclidean: return dim;
  }
  return 0;
}

bool ManifoldSpec::operator==(const ManifoldSpec& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case ManifoldKind::SE3Product: return n == o.n;
    case ManifoldKind::SPD: return d == o.d;
    case ManifoldKind::Grassmann: return k == o.k && m == o.m;
    case ManifoldKind::Euclidean: return dim == o.dim;
  }
  return false;
}

std::string ManifoldSpec::to_string() const {
  std::ostringstream os;
  switch (kind) {
    case ManifoldKind::SE3Product: os << "se3:" << n; break;
    case ManifoldKind::SPD: os << "spd:" << d; break;
    case ManifoldKind::Grassmann: os << "grassmann:" << k << "," << m; break;
    case ManifoldKind::Euclidean: os << "euclidean:" << dim; break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

Point exp_map(const ManifoldSpec& spec, const Point& p, const Tangent& v) {
  check_finite(p.data, "point");
  check_tangent_valid(spec, p, v);
  switch (spec.kind) {
    case ManifoldKind::SE3Product: return se3_exp(p, v);
    case ManifoldKind::SPD: return spd_exp(p, v);
    case ManifoldKind::Grassmann: return grass_exp(p, v);
    case ManifoldKind::Euclidean: return Point(spec, p.data + v.data);
  }
  throw NumericalError("unreachable");
}

Tangent log_map(const ManifoldSpec& spec, const Point& p, const Point& q) {
  check_finite(p.data, "point p");
  check_finite(q.data, "point q");
  switch (spec.kind) {
    case ManifoldKind::SE3Product: return se3_log_map(p, q);
    case ManifoldKind::SPD: return spd_log(p, q);
    case ManifoldKind::Grassmann: return grass_log(p, q);
    case ManifoldKind::Euclidean: return Tangent(spec, p, q.data - p.data);
  }
  throw NumericalError("unreachable");
}

Tangent parallel_transport(const ManifoldSpec& spec, const Tangent& v,
                           const Point& p, const Point& q) {
  check_tangent_valid(spec, p, v);
  switch (spec.kind) {
    case ManifoldKind::SE3Product:
      // transport via group translation: xi coordinates are unchanged
      return Tangent(spec, q, v.data);
    case ManifoldKind::SPD: return spd_transport(v, p, q);
    case ManifoldKind::Grassmann: return grass_transport(v, p, q);
    case ManifoldKind::Euclidean: return Tangent(spec, q, v.data);
  }
  throw NumericalError("unreachable");
}

double inner(const ManifoldSpec& spec, const Point& p, const Tangent& u,
             const Tangent& v) {
  if ((u.base.data - p.data).cwiseAbs().maxCoeff() > 1e-9 ||
      (v.base.data - p.data).cwiseAbs().maxCoeff() > 1e-9)
    throw BasePointMismatch("tangent base points differ from p");
  return flat_coords(spec, p, u.data).dot(flat_coords(spec, p, v.data));
}

double tangent_norm(const ManifoldSpec& spec, const Point& p,
                    const Tangent& v) {
  return flat_coords(spec, p, v.data).norm();
}

double geodesic_distance(const ManifoldSpec& spec, const Point& p,
                         const Point& q) {
  Tangent v = log_map(spec, p, q);
  return tangent_norm(spec, p, v);
}

VectorXd flat_coords(const ManifoldSpec& spec, const Point& base,
                     const VectorXd& tangent_data) {
  if (spec.kind == ManifoldKind::SPD) {
    MatrixXd A = spd_mat(base).inverse() *
                 as_matrix(tangent_data, spec.d, spec.d);
    return flatten(A);
  }
  return tangent_data;
}

VectorXd unflat_coords(const ManifoldSpec& spec, const Point& base,
                       const VectorXd& flat) {
  if (spec.kind == ManifoldKind::SPD) {
    MatrixXd V = spd_mat(base) * as_matrix(flat, spec.d, spec.d);
    return flatten(V);
  }
  return flat;
}

Point geodesic_point(const ManifoldSpec& spec, const Point& p, const Point& q,
                     double t) {
  Tangent v = log_map(spec, p, q);
  v.data *= t;
  return exp_map(spec, p, v);
}

Point identity_point(const ManifoldSpec& spec) {
  switch (spec.kind) {
    case ManifoldKind::SE3Product: {
      VectorXd v(16 * spec.n);
      for (int i = 0; i < spec.n; ++i)
        v.segment<16>(16 * i) = flatten(Mat4::Identity());
      return Point(spec, v);
    }
    case ManifoldKind::SPD:
      return Point(spec, flatten(MatrixXd::Identity(spec.d, spec.d)));
    case ManifoldKind::Grassmann: {
      MatrixXd P = MatrixXd::Zero(spec.m, spec.m);
      P.topLeftCorner(spec.k, spec.k).setIdentity();
      return Point(spec, flatten(P));
    }
    case ManifoldKind::Euclidean:
      return Point(spec, VectorXd::Zero(spec.dim));
  }
  throw NumericalError("unreachable");
}

Point project_to_manifold(const ManifoldSpec& spec, const VectorXd& raw) {
  if (raw.size() != spec.ambient_size())
    throw ValidationError("ambient storage size mismatch");
  check_finite(raw, "raw point");
  switch (spec.kind) {
    case ManifoldKind::SE3Product: {
      VectorXd out(raw.size());
      for (int i = 0; i < spec.n; ++i) {
        Mat4 g = as_matrix(raw, 4 * spec.n, 4).block<4, 4>(4 * i, 0);
        Eigen::JacobiSVD<Mat3> svd(g.topLeftCorner<3, 3>(),
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
        Mat3 R = svd.matrixU() * svd.matrixV().transpose();
        if (R.determinant() < 0) {
          Mat3 flip = Mat3::Identity();
          flip(2, 2) = -1;
          R = svd.matrixU() * flip * svd.matrixV().transpose();
        }
        Mat4 gp = Mat4::Identity();
        gp.topLeftCorner<3, 3>() = R;
        gp.topRightCorner<3, 1>() = g.topRightCorner<3, 1>();
        out.segment<16>(16 * i) = flatten(gp);
      }
      return Point(spec, out);
    }
    case ManifoldKind::SPD: {
      MatrixXd S = symmetrize(as_matrix(raw, spec.d, spec.d));
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
      VectorXd ev = es.eigenvalues().cwiseMax(1e-12);
      MatrixXd P = es.eigenvectors() * ev.asDiagonal() *
                   es.eigenvectors().transpose();
      P /= std::pow(P.determinant(), 1.0 / spec.d);
      return Point(spec, flatten(P));
    }
    case ManifoldKind::Grassmann: {
      MatrixXd S = symmetrize(as_matrix(raw, spec.m, spec.m));
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
      MatrixXd Y = es.eigenvectors().rightCols(spec.k);
      return Point(spec, flatten(MatrixXd(Y * Y.transpose())));
    }
    case ManifoldKind::Euclidean:
      return Point(spec, raw);
  }
  throw NumericalError("unreachable");
}

PointDiagnostics validate_point(const ManifoldSpec& spec, const Point& p) {
  PointDiagnostics diag;
  auto add = [&](const std::string& name, double v) {
    diag.violations.emplace_back(name, v);
    diag.max_violation = std::max(diag.max_violation, v);
  };
  if (p.data.size() != spec.ambient_size()) {
    add("storage_size", 1.0);
    return diag;
  }
  if (!p.data.allFinite()) {
    add("finite", std::numeric_limits<double>::infinity());
    return diag;
  }
  switch (spec.kind) {
    case ManifoldKind::SE3Product: {
      double ortho = 0, det = 0, bottom = 0;
      for (int i = 0; i < spec.n; ++i) {
        Mat4 g = se3_block(p, i);
        Mat3 R = g.topLeftCorner<3, 3>();
        ortho = std::max(ortho, (R.transpose() * R - Mat3::Identity())
                                    .cwiseAbs()
                                    .maxCoeff());
        det = std::max(det, std::abs(R.determinant() - 1.0));
        Eigen::RowVector4d want(0, 0, 0, 1);
        bottom = std::max(bottom, (g.row(3) - want).cwiseAbs().maxCoeff());
      }
      add("rotation_orthogonality", ortho);
      add("rotation_determinant", det);
      add("bottom_row", bottom);
      break;
    }
    case ManifoldKind::SPD: {
      MatrixXd P = spd_mat(p);
      add("symmetry", (P - P.transpose()).cwiseAbs().maxCoeff());
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(
          MatrixXd(0.5 * (P + P.transpose())));
      add("positivity", std::max(0.0, -es.eigenvalues().minCoeff()));
      add("determinant", std::abs(P.determinant() - 1.0));
      break;
    }
    case ManifoldKind::Grassmann: {
      MatrixXd P = as_matrix(p.data, spec.m, spec.m);
      add("symmetry", (P - P.transpose()).cwiseAbs().maxCoeff());
      add("idempotency", (P * P - P).cwiseAbs().maxCoeff());
      add("trace", std::abs(P.trace() - spec.k));
      break;
    }
    case ManifoldKind::Euclidean:
      add("finite", 0.0);
      break;
  }
  return diag;
}

Tangent random_tangent(const ManifoldSpec& spec, const Point& p, double scale,
                       std::uint64_t rng_seed) {
  if (scale < 0) throw ValidationError("random_tangent: scale < 0");
  VectorXd data = VectorXd::Zero(spec.tangent_size());
  if (scale == 0.0) return Tangent(spec, p, data);
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < data.size(); ++i) data[i] = gauss(rng);
  switch (spec.kind) {
    case ManifoldKind::SPD: {
      MatrixXd A = symmetrize(as_matrix(data, spec.d, spec.d));
      A -= (A.trace() / spec.d) * MatrixXd::Identity(spec.d, spec.d);
      data = flatten(MatrixXd(spd_mat(p) * A));
      break;
    }
    case ManifoldKind::Grassmann: {
      MatrixXd Y = grass_basis(p);
      MatrixXd H = as_matrix(data, spec.m, spec.k);
      H -= Y * (Y.transpose() * H);
      data = flatten(H);
      break;
    }
    default:
      break;
  }
  Tangent t(spec, p, data);
  double nrm = tangent_norm(spec, p, t);
  if (nrm < 1e-300) throw NumericalError("degenerate random tangent");
  t.data *= scale / nrm;
  return t;
}

KarcherResult karcher_mean_points(const ManifoldSpec& spec,
                                  const std::vector<Point>& points, double tol,
                                  int max_iter, MeanMode mode) {
  if (points.empty()) throw EmptyInput("karcher_mean_points: no points");
  if (points.size() == 1) return {points.front(), true, 0, 0.0};

  if (mode == MeanMode::Auto)
    mode = spec.kind == ManifoldKind::SE3Product ? MeanMode::Extrinsic
                                                 : MeanMode::Intrinsic;

  if (mode == MeanMode::Extrinsic) {
    VectorXd acc = VectorXd::Zero(spec.ambient_size());
    for (const auto& p : points) acc += p.data;
    acc /= static_cast<double>(points.size());
    return {project_to_manifold(spec, acc), true, 1, 0.0};
  }

  Point mu = points.front();
  for (int it = 0; it < max_iter; ++it) {
    VectorXd grad = VectorXd::Zero(spec.tangent_size());
    for (const auto& p : points) grad += log_map(spec, mu, p).data;
    grad /= static_cast<double>(points.size());
    Tangent step(spec, mu, grad);
    double gn = tangent_norm(spec, mu, step);
    if (gn <= tol) return {mu, true, it, gn};
    mu = exp_map(spec, mu, step);
  }
  VectorXd grad = VectorXd::Zero(spec.tangent_size());
  for (const auto& p : points) grad += log_map(spec, mu, p).data;
  grad /= static_cast<double>(points.size());
  double gn = tangent_norm(spec, mu, Tangent(spec, mu, grad));
  return {mu, gn <= tol, max_iter, gn};
}

}  // namespace rft
