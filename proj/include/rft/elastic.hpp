#ifndef RFT_ELASTIC_HPP
#define RFT_ELASTIC_HPP

#include "rft/geometry.hpp"

namespace rft {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// T manifold points sampled on the uniform grid t_i = i/(T-1) over [0,1].
/// Row t of `samples` is the flattened point at time t.
struct Trajectory {
  ManifoldSpec spec;
  MatrixXd samples;  // T x ambient_size

  Trajectory() = default;
  Trajectory(ManifoldSpec s, MatrixXd pts)
      : spec(s), samples(std::move(pts)) {}

  int length() const { return static_cast<int>(samples.rows()); }
  Point point(int t) const { return Point(spec, samples.row(t)); }
  void set_point(int t, const Point& p) { samples.row(t) = p.data; }
};

/// Discrete non-decreasing reparameterization of [0,1] with fixed endpoints.
struct WarpingFunction {
  VectorXd values;  // gamma(t_i), i = 0..T-1

  int length() const { return static_cast<int>(values.size()); }
  static WarpingFunction identity(int T);
  /// gamma(0)=0, gamma(1)=1, non-decreasing, values in [0,1].
  bool valid(double tol = 1e-9) const;
};

/// Transported square-root velocity field: T tangent vectors anchored at the
/// common reference point c, stored as rows of tangent data.
struct Tsrvf {
  ManifoldSpec spec;
  Point reference;
  MatrixXd field;  // T x tangent_size

  int length() const { return static_cast<int>(field.rows()); }
};

struct MeanResult {
  Trajectory mean;
  std::vector<Trajectory> aligned;
  std::vector<WarpingFunction> warps;
  std::vector<double> error_trace;  // registration error per iteration
  bool converged = false;
  int iterations = 0;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

Tsrvf compute_tsrvf(const Trajectory& traj, const Point& c);

/// L2 distance between fields at the same reference (trapezoid quadrature).
double tsrvf_distance(const Tsrvf& h1, const Tsrvf& h2);

Trajectory warp_trajectory(const Trajectory& traj, const WarpingFunction& g);

/// Field of the warped trajectory: h(gamma(t)) * sqrt(gamma'(t)).
Tsrvf warp_tsrvf(const Tsrvf& h, const WarpingFunction& g);

WarpingFunction gamma_compose(const WarpingFunction& g1,
                              const WarpingFunction& g2);
WarpingFunction gamma_inverse(const WarpingFunction& g);

struct DpOptions {
  /// Predecessor steps (di, dj) on the T x T grid.
  std::vector<std::pair<int, int>> steps = {{1, 1}, {1, 2}, {2, 1}, {1, 3}, {3, 1}};
};

struct DpResult {
  WarpingFunction gamma;
  double cost = 0.0;
};

/// Best piecewise-linear monotone warp of h2 onto h1 over grid paths.
DpResult optimal_warp_dp(const Tsrvf& h1, const Tsrvf& h2,
                         const DpOptions& opts = {});

/// Continuous refinement of a DP warp: coordinate descent over the interior
/// gamma values, each restricted to its neighbor interval.
WarpingFunction refine_warp(const Tsrvf& h1, const Tsrvf& h2,
                            WarpingFunction g, int max_sweeps = 50);

/// Rate-invariant quotient distance d_s (one-sided optimization over the
/// warp applied to a2).
double rate_invariant_distance(const Trajectory& a1, const Trajectory& a2,
                               const Point& c, const DpOptions& opts = {});

struct MeanOptions {
  double tol = 1e-6;
  int max_iter = 50;
  DpOptions dp;
  /// Golden-section sweeps applied after each DP alignment (0 disables).
  int refine_sweeps = 50;
  MeanMode point_mean_mode = MeanMode::Auto;
  /// When true (SE3Product only), DP runs independently per component and
  /// warps apply componentwise.
  bool per_component_warp = false;
};

/// Karcher mean of trajectories with simultaneous alignment.
MeanResult trajectory_mean(const std::vector<Trajectory>& trajs,
                           const Point& c, const MeanOptions& opts = {});

/// Sum over trajectories and time of squared geodesic distance to mu.
double registration_error(const Trajectory& mu,
                          const std::vector<Trajectory>& trajs);

/// Geodesic-interpolated resampling onto a uniform grid of length new_T.
Trajectory resample(const Trajectory& traj, int new_T);
/// First new_T samples, re-gridded.
Trajectory subsequence(const Trajectory& traj, int new_T);

/// Default reference point: identity for SE3Product/SPD/Euclidean, Karcher
/// mean of the first-frame points for Grassmann.
Point default_reference(const ManifoldSpec& spec,
                        const std::vector<Trajectory>& trajs);

/// Field rows mapped to coordinates in which the metric is the dot product.
MatrixXd flat_field(const Tsrvf& h);

}  // namespace rft

#endif  // RFT_ELASTIC_HPP
