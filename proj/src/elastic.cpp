#include "rft/elastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rft {

namespace {

constexpr double kZeroVelocity = 1e-10;

void check_matched(const Tsrvf& h1, const Tsrvf& h2) {
  if (h1.spec != h2.spec) throw ValidationError("TSRVF spec mismatch");
  if (h1.length() != h2.length()) throw ValidationError("TSRVF length mismatch");
  if ((h1.reference.data - h2.reference.data).cwiseAbs().maxCoeff() > 1e-9)
    throw ReferenceMismatch("TSRVF reference points differ");
}

/// Linear interpolation of matrix rows at fractional index s in [0, T-1].
VectorXd interp_row(const MatrixXd& rows, double s) {
  int T = static_cast<int>(rows.rows());
  if (s <= 0) return rows.row(0);
  if (s >= T - 1) return rows.row(T - 1);
  int j = static_cast<int>(std::floor(s));
  double f = s - j;
  return (1.0 - f) * rows.row(j) + f * rows.row(j + 1);
}

double interp_scalar(const VectorXd& v, double s) {
  int T = static_cast<int>(v.size());
  if (s <= 0) return v[0];
  if (s >= T - 1) return v[T - 1];
  int j = static_cast<int>(std::floor(s));
  double f = s - j;
  return (1.0 - f) * v[j] + f * v[j + 1];
}

/// Finite-difference derivative of gamma on the uniform grid (central in the
/// interior, one-sided at the endpoints), in units of d(gamma)/dt.
VectorXd gamma_dot(const WarpingFunction& g) {
  int T = g.length();
  double h = 1.0 / (T - 1);
  VectorXd dot(T);
  dot[0] = (g.values[1] - g.values[0]) / h;
  dot[T - 1] = (g.values[T - 1] - g.values[T - 2]) / h;
  for (int i = 1; i < T - 1; ++i)
    dot[i] = (g.values[i + 1] - g.values[i - 1]) / (2.0 * h);
  return dot;
}

void check_trajectory(const Trajectory& traj) {
  if (traj.length() < 2) throw ValidationError("trajectory needs T >= 2");
  if (traj.samples.cols() != traj.spec.ambient_size())
    throw ValidationError("trajectory ambient size mismatch");
}

Point geodesic_sample(const Trajectory& traj, double s) {
  int T = traj.length();
  if (s <= 0) return traj.point(0);
  if (s >= T - 1) return traj.point(T - 1);
  int j = static_cast<int>(std::floor(s));
  double f = s - j;
  if (f < 1e-14) return traj.point(j);
  return geodesic_point(traj.spec, traj.point(j), traj.point(j + 1), f);
}

}  // namespace

WarpingFunction WarpingFunction::identity(int T) {
  WarpingFunction g;
  g.values = VectorXd::LinSpaced(T, 0.0, 1.0);
  return g;
}

bool WarpingFunction::valid(double tol) const {
  int T = length();
  if (T < 2) return false;
  if (std::abs(values[0]) > tol || std::abs(values[T - 1] - 1.0) > tol)
    return false;
  for (int i = 0; i + 1 < T; ++i)
    if (values[i + 1] < values[i] - tol) return false;
  return values.minCoeff() >= -tol && values.maxCoeff() <= 1.0 + tol;
}

MatrixXd flat_field(const Tsrvf& h) {
  if (h.spec.kind != ManifoldKind::SPD) return h.field;
  MatrixXd flat(h.field.rows(), h.field.cols());
  for (int t = 0; t < h.length(); ++t)
    flat.row(t) = flat_coords(h.spec, h.reference, h.field.row(t));
  return flat;
}

Tsrvf compute_tsrvf(const Trajectory& traj, const Point& c) {
  check_trajectory(traj);
  const ManifoldSpec& spec = traj.spec;
  int T = traj.length();
  double scale = static_cast<double>(T - 1);  // 1/h

  Tsrvf h;
  h.spec = spec;
  h.reference = c;
  h.field.resize(T, spec.tangent_size());

  for (int t = 0; t < T; ++t) {
    Point p = traj.point(t);
    VectorXd vel;
    try {
      if (t == 0) {
        vel = scale * log_map(spec, p, traj.point(1)).data;
      } else if (t == T - 1) {
        vel = -scale * log_map(spec, p, traj.point(T - 2)).data;
      } else {
        vel = 0.5 * scale *
              (log_map(spec, p, traj.point(t + 1)).data -
               log_map(spec, p, traj.point(t - 1)).data);
      }
    } catch (const CutLocusError&) {
      throw CutLocusError("compute_tsrvf: cut locus at sample " +
                          std::to_string(t));
    }
    Tangent v(spec, p, vel);
    double speed = tangent_norm(spec, p, v);
    if (speed < kZeroVelocity) {
      h.field.row(t).setZero();
      continue;
    }
    Tangent transported;
    try {
      transported = parallel_transport(spec, v, p, c);
    } catch (const CutLocusError&) {
      throw CutLocusError("compute_tsrvf: transport failed at sample " +
                          std::to_string(t));
    }
    h.field.row(t) = transported.data / std::sqrt(speed);
  }
  return h;
}

double tsrvf_distance(const Tsrvf& h1, const Tsrvf& h2) {
  check_matched(h1, h2);
  int T = h1.length();
  double dt = 1.0 / (T - 1);
  MatrixXd f1 = flat_field(h1), f2 = flat_field(h2);
  double acc = 0.0;
  for (int t = 0; t < T; ++t) {
    double w = (t == 0 || t == T - 1) ? 0.5 : 1.0;
    acc += w * (f1.row(t) - f2.row(t)).squaredNorm() * dt;
  }
  return std::sqrt(acc);
}

Trajectory warp_trajectory(const Trajectory& traj, const WarpingFunction& g) {
  check_trajectory(traj);
  if (!g.valid()) throw ValidationError("invalid warping function");
  if (g.length() != traj.length())
    throw ValidationError("warp length mismatch");
  int T = traj.length();
  Trajectory out;
  out.spec = traj.spec;
  out.samples.resize(T, traj.samples.cols());
  for (int t = 0; t < T; ++t)
    out.samples.row(t) = geodesic_sample(traj, g.values[t] * (T - 1)).data;
  return out;
}

Tsrvf warp_tsrvf(const Tsrvf& h, const WarpingFunction& g) {
  if (!g.valid()) throw ValidationError("invalid warping function");
  if (g.length() != h.length()) throw ValidationError("warp length mismatch");
  int T = h.length();
  VectorXd dot = gamma_dot(g);
  Tsrvf out;
  out.spec = h.spec;
  out.reference = h.reference;
  out.field.resize(T, h.field.cols());
  for (int t = 0; t < T; ++t)
    out.field.row(t) = interp_row(h.field, g.values[t] * (T - 1)) *
                       std::sqrt(std::max(dot[t], 0.0));
  return out;
}

WarpingFunction gamma_compose(const WarpingFunction& g1,
                              const WarpingFunction& g2) {
  if (g1.length() != g2.length())
    throw ValidationError("gamma length mismatch");
  int T = g1.length();
  WarpingFunction out;
  out.values.resize(T);
  for (int t = 0; t < T; ++t)
    out.values[t] = interp_scalar(g1.values, g2.values[t] * (T - 1));
  out.values[0] = 0.0;
  out.values[T - 1] = 1.0;
  return out;
}

WarpingFunction gamma_inverse(const WarpingFunction& g) {
  int T = g.length();
  for (int i = 0; i + 1 < T; ++i)
    if (g.values[i + 1] <= g.values[i])
      throw NotInvertible("gamma has a flat or decreasing segment");
  WarpingFunction out;
  out.values.resize(T);
  out.values[0] = 0.0;
  out.values[T - 1] = 1.0;
  for (int t = 1; t < T - 1; ++t) {
    double u = static_cast<double>(t) / (T - 1);
    // find bracketing segment of g
    int lo = 0;
    for (int i = 0; i + 1 < T; ++i)
      if (g.values[i] <= u && u <= g.values[i + 1]) { lo = i; break; }
    double f = (u - g.values[lo]) / (g.values[lo + 1] - g.values[lo]);
    out.values[t] = (lo + f) / (T - 1);
  }
  return out;
}

DpResult optimal_warp_dp(const Tsrvf& h1, const Tsrvf& h2,
                         const DpOptions& opts) {
  check_matched(h1, h2);
  int T = h1.length();
  MatrixXd f1 = flat_field(h1), f2 = flat_field(h2);
  double dt = 1.0 / (T - 1);
  const double inf = std::numeric_limits<double>::infinity();

  // Node cost under a segment of slope s: the integrand of the warped L2
  // distance at integer grid index tau, gamma(tau) = j0 + s (tau - i0).
  auto node_cost = [&](int tau, double gamma_tau, double slope) {
    VectorXd d =
        f1.row(tau).transpose() - std::sqrt(slope) * interp_row(f2, gamma_tau);
    return d.squaredNorm();
  };
  // Trapezoid accumulation across the unit sub-steps of one segment.
  auto segment_cost = [&](int i0, int j0, int i1, int j1) {
    double slope = static_cast<double>(j1 - j0) / (i1 - i0);
    double acc = 0.0;
    for (int tau = i0; tau <= i1; ++tau) {
      double w = (tau == i0 || tau == i1) ? 0.5 : 1.0;
      acc += w * node_cost(tau, j0 + slope * (tau - i0), slope);
    }
    return acc * dt;
  };

  MatrixXd E = MatrixXd::Constant(T, T, inf);
  Eigen::MatrixXi pred = Eigen::MatrixXi::Constant(T, T, -1);
  E(0, 0) = 0.0;
  for (int i = 1; i < T; ++i) {
    for (int j = 1; j < T; ++j) {
      for (size_t si = 0; si < opts.steps.size(); ++si) {
        int pi = i - opts.steps[si].first;
        int pj = j - opts.steps[si].second;
        if (pi < 0 || pj < 0 || E(pi, pj) == inf) continue;
        double cand = E(pi, pj) + segment_cost(pi, pj, i, j);
        if (cand < E(i, j)) {
          E(i, j) = cand;
          pred(i, j) = static_cast<int>(si);
        }
      }
    }
  }
  if (E(T - 1, T - 1) == inf)
    throw NumericalError("DP grid unreachable with the given step set");

  // backtrack, filling gamma by linear interpolation inside multi-steps
  WarpingFunction gamma;
  gamma.values.resize(T);
  int i = T - 1, j = T - 1;
  gamma.values[T - 1] = 1.0;
  while (i > 0) {
    int si = pred(i, j);
    int pi = i - opts.steps[si].first;
    int pj = j - opts.steps[si].second;
    double slope = static_cast<double>(j - pj) / (i - pi);
    for (int tau = pi; tau < i; ++tau)
      gamma.values[tau] = (pj + slope * (tau - pi)) / (T - 1);
    i = pi;
    j = pj;
  }
  gamma.values[0] = 0.0;
  return {gamma, std::sqrt(E(T - 1, T - 1))};
}

WarpingFunction refine_warp(const Tsrvf& h1, const Tsrvf& h2,
                            WarpingFunction g, int max_sweeps) {
  check_matched(h1, h2);
  int T = h1.length();
  if (g.length() != T) throw ValidationError("warp length mismatch");
  MatrixXd f1 = flat_field(h1), f2 = flat_field(h2);
  double dt = 1.0 / (T - 1);

  // Trapezoid-weighted integrand of |h1 - (h2, gamma)|^2 at node t, with
  // gamma' by the same finite differences warp_tsrvf uses.
  auto node_term = [&](const VectorXd& gv, int t) {
    double gd;
    if (t == 0)
      gd = (gv[1] - gv[0]) / dt;
    else if (t == T - 1)
      gd = (gv[T - 1] - gv[T - 2]) / dt;
    else
      gd = (gv[t + 1] - gv[t - 1]) / (2.0 * dt);
    VectorXd d = f1.row(t).transpose() -
                 std::sqrt(std::max(gd, 0.0)) *
                     interp_row(f2, gv[t] * (T - 1));
    double w = (t == 0 || t == T - 1) ? 0.5 : 1.0;
    return w * d.squaredNorm() * dt;
  };
  auto local = [&](VectorXd& gv, int i, double x) {
    double save = gv[i];
    gv[i] = x;
    double v = node_term(gv, i - 1) + node_term(gv, i) + node_term(gv, i + 1);
    gv[i] = save;
    return v;
  };

  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  VectorXd gv = g.values;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double moved = 0.0;
    for (int i = 1; i < T - 1; ++i) {
      double lo = gv[i - 1], hi = gv[i + 1];
      if (hi - lo < 1e-14) continue;
      double a = lo, b = hi;
      double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
      double fx1 = local(gv, i, x1), fx2 = local(gv, i, x2);
      for (int it = 0; it < 30 && b - a > 1e-12; ++it) {
        if (fx1 < fx2) {
          b = x2; x2 = x1; fx2 = fx1;
          x1 = b - phi * (b - a);
          fx1 = local(gv, i, x1);
        } else {
          a = x1; x1 = x2; fx1 = fx2;
          x2 = a + phi * (b - a);
          fx2 = local(gv, i, x2);
        }
      }
      double best = 0.5 * (a + b);
      if (local(gv, i, best) < local(gv, i, gv[i])) {
        moved = std::max(moved, std::abs(best - gv[i]));
        gv[i] = best;
      }
    }
    if (moved < 1e-10) break;
  }
  WarpingFunction out;
  out.values = gv;
  return out;
}

double rate_invariant_distance(const Trajectory& a1, const Trajectory& a2,
                               const Point& c, const DpOptions& opts) {
  Tsrvf h1 = compute_tsrvf(a1, c);
  Tsrvf h2 = compute_tsrvf(a2, c);
  auto dp = optimal_warp_dp(h1, h2, opts);
  if (dp.cost == 0.0) return 0.0;
  WarpingFunction g = refine_warp(h1, h2, dp.gamma, 50);
  return tsrvf_distance(h1, warp_tsrvf(h2, g));
}

double registration_error(const Trajectory& mu,
                          const std::vector<Trajectory>& trajs) {
  double acc = 0.0;
  for (const auto& traj : trajs) {
    if (traj.length() != mu.length())
      throw ValidationError("registration_error: length mismatch");
    for (int t = 0; t < mu.length(); ++t) {
      double d = geodesic_distance(mu.spec, mu.point(t), traj.point(t));
      acc += d * d;
    }
  }
  return acc;
}

namespace {

std::vector<WarpingFunction> align_warps(const Trajectory& mu,
                                         const std::vector<Trajectory>& trajs,
                                         const Point& c,
                                         const MeanOptions& opts) {
  Tsrvf hmu = compute_tsrvf(mu, c);
  std::vector<WarpingFunction> warps;
  warps.reserve(trajs.size());
  for (const auto& traj : trajs) {
    Tsrvf hj = compute_tsrvf(traj, c);
    auto dp = optimal_warp_dp(hmu, hj, opts.dp);
    warps.push_back(opts.refine_sweeps > 0
                        ? refine_warp(hmu, hj, dp.gamma, opts.refine_sweeps)
                        : dp.gamma);
  }
  return warps;
}

// Split an SE(3)^n trajectory into per-component single-SE(3) trajectories.
std::vector<Trajectory> split_components(const Trajectory& traj) {
  std::vector<Trajectory> out;
  auto sub = ManifoldSpec::se3_product(1);
  for (int i = 0; i < traj.spec.n; ++i) {
    Trajectory c;
    c.spec = sub;
    c.samples = traj.samples.middleCols(16 * i, 16);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

MeanResult trajectory_mean(const std::vector<Trajectory>& trajs,
                           const Point& c, const MeanOptions& opts) {
  if (trajs.empty()) throw EmptyInput("trajectory_mean: no trajectories");
  const ManifoldSpec& spec = trajs.front().spec;
  int T = trajs.front().length();
  for (const auto& traj : trajs) {
    if (traj.spec != spec) throw ValidationError("trajectory spec mismatch");
    if (traj.length() != T) throw ValidationError("trajectory length mismatch");
  }

  MeanResult res;
  if (trajs.size() == 1) {
    res.mean = trajs.front();
    res.aligned = trajs;
    res.warps = {WarpingFunction::identity(T)};
    res.error_trace = {0.0};
    res.converged = true;
    res.iterations = 0;
    return res;
  }

  size_t N = trajs.size();
  Trajectory mu = trajs.front();
  std::vector<Trajectory> aligned = trajs;
  std::vector<WarpingFunction> warps(N, WarpingFunction::identity(T));
  double prev_err = std::numeric_limits<double>::infinity();

  for (int it = 0; it < opts.max_iter; ++it) {
    // (b) re-align every trajectory to the current mean
    std::vector<WarpingFunction> new_warps;
    if (opts.per_component_warp && spec.kind == ManifoldKind::SE3Product &&
        spec.n > 1) {
      new_warps.assign(N, WarpingFunction::identity(T));
      auto mu_parts = split_components(mu);
      std::vector<Trajectory> new_aligned(N);
      for (size_t j = 0; j < N; ++j) {
        auto parts = split_components(trajs[j]);
        Trajectory warped;
        warped.spec = spec;
        warped.samples.resize(T, spec.ambient_size());
        for (int comp = 0; comp < spec.n; ++comp) {
          Point sub_c = identity_point(ManifoldSpec::se3_product(1));
          Tsrvf hm = compute_tsrvf(mu_parts[comp], sub_c);
          Tsrvf hj = compute_tsrvf(parts[comp], sub_c);
          WarpingFunction g = optimal_warp_dp(hm, hj, opts.dp).gamma;
          if (opts.refine_sweeps > 0)
            g = refine_warp(hm, hj, g, opts.refine_sweeps);
          Trajectory wc = warp_trajectory(parts[comp], g);
          warped.samples.middleCols(16 * comp, 16) = wc.samples;
          if (comp == 0) new_warps[j] = g;  // representative warp
        }
        new_aligned[j] = std::move(warped);
      }
      aligned = std::move(new_aligned);
      warps = std::move(new_warps);
    } else {
      new_warps = align_warps(mu, trajs, c, opts);
      for (size_t j = 0; j < N; ++j)
        aligned[j] = warp_trajectory(trajs[j], new_warps[j]);
      warps = std::move(new_warps);
    }

    double err = registration_error(mu, aligned);
    if (!res.error_trace.empty() && err > res.error_trace.back()) {
      // early stop keeps the trace non-increasing
      res.converged = true;
      break;
    }
    res.error_trace.push_back(err);
    res.iterations = it + 1;
    if (prev_err - err < opts.tol && it > 0) {
      res.converged = true;
      prev_err = err;
      // final mean update against the converged alignment
      break;
    }
    prev_err = err;

    // (a) cross-sectional Karcher mean at each time sample
    Trajectory new_mu;
    new_mu.spec = spec;
    new_mu.samples.resize(T, spec.ambient_size());
    for (int t = 0; t < T; ++t) {
      std::vector<Point> pts;
      pts.reserve(N);
      for (const auto& a : aligned) pts.push_back(a.point(t));
      new_mu.samples.row(t) =
          karcher_mean_points(spec, pts, 1e-10, 100, opts.point_mean_mode)
              .mean.data;
    }
    mu = std::move(new_mu);
  }

  res.mean = mu;
  res.aligned = aligned;
  res.warps = warps;
  if (res.error_trace.empty())
    res.error_trace.push_back(registration_error(mu, aligned));
  return res;
}

Trajectory resample(const Trajectory& traj, int new_T) {
  check_trajectory(traj);
  if (new_T < 2) throw ValidationError("resample: T' >= 2 required");
  int T = traj.length();
  Trajectory out;
  out.spec = traj.spec;
  out.samples.resize(new_T, traj.samples.cols());
  for (int t = 0; t < new_T; ++t) {
    double s = static_cast<double>(t) / (new_T - 1) * (T - 1);
    out.samples.row(t) = geodesic_sample(traj, s).data;
  }
  return out;
}

Trajectory subsequence(const Trajectory& traj, int new_T) {
  check_trajectory(traj);
  if (new_T < 2 || new_T > traj.length())
    throw ValidationError("subsequence: 2 <= T' <= T required");
  Trajectory out;
  out.spec = traj.spec;
  out.samples = traj.samples.topRows(new_T);
  return out;
}

Point default_reference(const ManifoldSpec& spec,
                        const std::vector<Trajectory>& trajs) {
  if (spec.kind != ManifoldKind::Grassmann || trajs.empty())
    return identity_point(spec);
  std::vector<Point> firsts;
  firsts.reserve(trajs.size());
  for (const auto& traj : trajs) firsts.push_back(traj.point(0));
  return karcher_mean_points(spec, firsts, 1e-9, 100).mean;
}

}  // namespace rft
