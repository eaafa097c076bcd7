#ifndef RFT_GEOMETRY_HPP
#define RFT_GEOMETRY_HPP

#include "rft/manifold.hpp"

namespace rft {

// Exact differential-geometric kernels for SE(3)^n, SPD P(d) (det = 1),
// Grassmann G(k, m-k) in projection form, and Euclidean R^n.
//
// All functions are pure; Points and Tangents are immutable value types and
// every routine is safe to call concurrently.

Point exp_map(const ManifoldSpec& spec, const Point& p, const Tangent& v);
Tangent log_map(const ManifoldSpec& spec, const Point& p, const Point& q);

/// Parallel transport of v (anchored at p) along the geodesic p -> q.
Tangent parallel_transport(const ManifoldSpec& spec, const Tangent& v,
                           const Point& p, const Point& q);

double inner(const ManifoldSpec& spec, const Point& p, const Tangent& u,
             const Tangent& v);
double tangent_norm(const ManifoldSpec& spec, const Point& p, const Tangent& v);

double geodesic_distance(const ManifoldSpec& spec, const Point& p,
                         const Point& q);

enum class MeanMode {
  Auto,       // extrinsic for SE3Product, intrinsic otherwise
  Intrinsic,  // Karcher iteration
  Extrinsic,  // ambient average + projection (SE3Product only)
};

struct KarcherResult {
  Point mean;
  bool converged = true;
  int iterations = 0;
  double gradient_norm = 0.0;
};

KarcherResult karcher_mean_points(const ManifoldSpec& spec,
                                  const std::vector<Point>& points,
                                  double tol = 1e-10, int max_iter = 100,
                                  MeanMode mode = MeanMode::Auto);

/// Deterministic random tangent at p with norm exactly `scale`.
Tangent random_tangent(const ManifoldSpec& spec, const Point& p, double scale,
                       std::uint64_t rng_seed);

PointDiagnostics validate_point(const ManifoldSpec& spec, const Point& p);

/// Identity-like canonical base point of the manifold (SE3: I4 blocks,
/// SPD: I_d, Grassmann: diag(I_k, 0), Euclidean: 0).
Point identity_point(const ManifoldSpec& spec);

/// Project raw ambient data onto the manifold (SE3: orthogonalize R blocks;
/// SPD: symmetrize, clamp eigenvalues, det-normalize; Grassmann: nearest
/// rank-k projection). Used on ingestion.
Point project_to_manifold(const ManifoldSpec& spec, const VectorXd& raw);

/// Coordinates in which `inner` is the plain dot product. Identity for all
/// manifolds except SPD, where the tangent P*A maps to A.
VectorXd flat_coords(const ManifoldSpec& spec, const Point& base,
                     const VectorXd& tangent_data);
VectorXd unflat_coords(const ManifoldSpec& spec, const Point& base,
                       const VectorXd& flat);

/// Geodesic interpolation: exp_p(t * log_p(q)).
Point geodesic_point(const ManifoldSpec& spec, const Point& p, const Point& q,
                     double t);

}  // namespace rft

#endif  // RFT_GEOMETRY_HPP
