#ifndef RFT_MANIFOLD_HPP
#define RFT_MANIFOLD_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace rft {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidTangent : Error { using Error::Error; };
struct NumericalError : Error { using Error::Error; };
struct CutLocusError : Error { using Error::Error; };
struct BasePointMismatch : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct RankError : Error { using Error::Error; };
struct DegenerateData : Error { using Error::Error; };
struct NotInvertible : Error { using Error::Error; };
struct ReferenceMismatch : Error { using Error::Error; };
struct DegenerateBone : Error { using Error::Error; };
struct DegenerateShape : Error { using Error::Error; };
struct SingularCovariance : Error { using Error::Error; };
struct InvalidK : Error { using Error::Error; };
struct SplitError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct VersionError : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// ManifoldSpec
// ---------------------------------------------------------------------------

enum class ManifoldKind { SE3Product, SPD, Grassmann, Euclidean };

/// Tagged descriptor of which manifold (and its dimensions) a point lives on.
struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::Euclidean;
  int n = 1;  // SE3Product: component count
  int d = 2;  // SPD: matrix size
  int k = 1;  // Grassmann: subspace dimension
  int m = 2;  // Grassmann: ambient dimension
  int dim = 1;  // Euclidean: vector dimension

  static ManifoldSpec se3_product(int n);
  static ManifoldSpec spd(int d);
  static ManifoldSpec grassmann(int k, int m);
  static ManifoldSpec euclidean(int dim);

  /// Flattened storage size of a point (row-major).
  int ambient_size() const;
  /// Flattened storage size of a tangent vector.
  int tangent_size() const;

  bool operator==(const ManifoldSpec& o) const;
  bool operator!=(const ManifoldSpec& o) const { return !(*this == o); }

  std::string to_string() const;
};

// ---------------------------------------------------------------------------
// Point / Tangent
// ---------------------------------------------------------------------------

/// A manifold element, stored as a flattened row-major array.
///   SE3Product: n 4x4 blocks; SPD: d x d matrix; Grassmann: m x m projection
///   matrix; Euclidean: the vector itself.
struct Point {
  ManifoldSpec spec;
  VectorXd data;

  Point() = default;
  Point(ManifoldSpec s, VectorXd v) : spec(s), data(std::move(v)) {}
};

/// A tangent vector anchored at a base point.
///   SE3Product: n stacked xi in R^6 (omega, v); SPD at P: the matrix P*A with
///   A symmetric trace-free; Grassmann: an m x k horizontal lift H at the
///   canonical orthonormal basis of the base projection matrix.
struct Tangent {
  ManifoldSpec spec;
  Point base;
  VectorXd data;

  Tangent() = default;
  Tangent(ManifoldSpec s, Point b, VectorXd v)
      : spec(s), base(std::move(b)), data(std::move(v)) {}
};

/// Per-invariant violation magnitudes reported by validate_point.
struct PointDiagnostics {
  double max_violation = 0.0;
  std::vector<std::pair<std::string, double>> violations;
  bool ok(double tol = 1e-9) const { return max_violation <= tol; }
};

}  // namespace rft

#endif  // RFT_MANIFOLD_HPP
