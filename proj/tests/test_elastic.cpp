#include <random>

#include "doctest.h"
#include "rft/elastic.hpp"
#include "test_util.hpp"

using namespace rft;
using namespace rft::testutil;

namespace {

const std::vector<ManifoldSpec> kSpecs = {
    ManifoldSpec::se3_product(2), ManifoldSpec::spd(3),
    ManifoldSpec::grassmann(2, 6), ManifoldSpec::euclidean(4)};

Trajectory constant_trajectory(const ManifoldSpec& spec, const Point& p,
                               int T) {
  Trajectory traj;
  traj.spec = spec;
  traj.samples = p.data.transpose().replicate(T, 1);
  return traj;
}

double l2_field_norm(const Tsrvf& h) {
  Tsrvf zero = h;
  zero.field.setZero();
  return tsrvf_distance(h, zero);
}

// Independent oracle: enumerate every monotone lattice path with the same
// step set and the same per-segment trapezoid cost as the DP.
double brute_force_path_cost(const Eigen::MatrixXd& f1,
                             const Eigen::MatrixXd& f2,
                             const std::vector<std::pair<int, int>>& steps) {
  int T = static_cast<int>(f1.rows());
  double dt = 1.0 / (T - 1);
  auto interp = [&](double s) -> Eigen::VectorXd {
    if (s <= 0) return f2.row(0);
    if (s >= T - 1) return f2.row(T - 1);
    int j = static_cast<int>(std::floor(s));
    double f = s - j;
    return (1.0 - f) * f2.row(j) + f * f2.row(j + 1);
  };
  auto segment_cost = [&](int i0, int j0, int i1, int j1) {
    double slope = static_cast<double>(j1 - j0) / (i1 - i0);
    double acc = 0.0;
    for (int tau = i0; tau <= i1; ++tau) {
      double w = (tau == i0 || tau == i1) ? 0.5 : 1.0;
      Eigen::VectorXd d =
          f1.row(tau).transpose() -
          std::sqrt(slope) * interp(j0 + slope * (tau - i0));
      acc += w * d.squaredNorm();
    }
    return acc * dt;
  };
  double best = std::numeric_limits<double>::infinity();
  std::function<void(int, int, double)> walk = [&](int i, int j, double acc) {
    if (acc >= best) return;
    if (i == T - 1 && j == T - 1) {
      best = acc;
      return;
    }
    for (auto [di, dj] : steps) {
      int ni = i + di, nj = j + dj;
      if (ni > T - 1 || nj > T - 1) continue;
      walk(ni, nj, acc + segment_cost(i, j, ni, nj));
    }
  };
  walk(0, 0, 0.0);
  return std::sqrt(best);
}

}  // namespace

TEST_CASE("warping function basics") {
  auto id = WarpingFunction::identity(10);
  CHECK(id.valid());
  CHECK(id.values[0] == 0.0);
  CHECK(id.values[9] == 1.0);
  WarpingFunction bad;
  bad.values = Eigen::VectorXd::LinSpaced(5, 0.2, 1.0);
  CHECK_FALSE(bad.valid());
}

TEST_CASE("constant trajectory has zero TSRVF") {
  std::mt19937_64 rng(1);
  for (const auto& spec : kSpecs) {
    Point p = random_point(spec, rng);
    Trajectory traj = constant_trajectory(spec, p, 20);
    Tsrvf h = compute_tsrvf(traj, identity_point(spec));
    CHECK(h.field.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("Euclidean TSRVF equals the SRVF") {
  auto spec = ManifoldSpec::euclidean(3);
  std::mt19937_64 rng(2);
  int T = 40;
  Trajectory traj = smooth_trajectory(spec, T, rng, 1.0);
  Point c(spec, Eigen::Vector3d(0.3, -0.1, 0.2));
  Tsrvf h = compute_tsrvf(traj, c);
  double scale = T - 1.0;
  for (int t = 0; t < T; ++t) {
    Eigen::VectorXd vel;
    if (t == 0)
      vel = scale * (traj.samples.row(1) - traj.samples.row(0));
    else if (t == T - 1)
      vel = scale * (traj.samples.row(T - 1) - traj.samples.row(T - 2));
    else
      vel = 0.5 * scale * (traj.samples.row(t + 1) - traj.samples.row(t - 1));
    Eigen::VectorXd want = vel.norm() < 1e-10
                               ? Eigen::VectorXd::Zero(3).eval()
                               : (vel / std::sqrt(vel.norm())).eval();
    CHECK((h.field.row(t).transpose() - want).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("uniform-speed geodesic has constant field norm sqrt(s)") {
  std::mt19937_64 rng(3);
  for (const auto& spec : kSpecs) {
    int T = 60;
    double speed = 0.8;
    Point p0 = random_point(spec, rng, 0.3);
    Tangent dir = random_tangent(spec, p0, speed, rng());
    Trajectory traj;
    traj.spec = spec;
    traj.samples.resize(T, spec.ambient_size());
    for (int t = 0; t < T; ++t) {
      Tangent v(spec, p0, dir.data * (static_cast<double>(t) / (T - 1)));
      traj.samples.row(t) = exp_map(spec, p0, v).data;
    }
    Tsrvf h = compute_tsrvf(traj, identity_point(spec));
    for (int t = 1; t < T - 1; ++t)
      CHECK(std::abs(flat_coords(spec, h.reference, h.field.row(t)).norm() -
                     std::sqrt(speed)) < 2.0 / T);
  }
}

TEST_CASE("tsrvf_distance: identity, zero field, reference mismatch") {
  std::mt19937_64 rng(4);
  for (const auto& spec : kSpecs) {
    Trajectory traj = smooth_trajectory(spec, 50, rng);
    Point c = identity_point(spec);
    Tsrvf h = compute_tsrvf(traj, c);
    CHECK(tsrvf_distance(h, h) == 0.0);

    Tsrvf zero = h;
    zero.field.setZero();
    double dist = tsrvf_distance(h, zero);
    CHECK(dist == doctest::Approx(l2_field_norm(h)).epsilon(1e-14));
  }
  auto e = ManifoldSpec::euclidean(2);
  Trajectory t1 = smooth_trajectory(e, 20, rng);
  Tsrvf h1 = compute_tsrvf(t1, Point(e, Eigen::Vector2d(0, 0)));
  Tsrvf h2 = compute_tsrvf(t1, Point(e, Eigen::Vector2d(1, 0)));
  CHECK_THROWS_AS(tsrvf_distance(h1, h2), ReferenceMismatch);
}

TEST_CASE("trapezoid vs midpoint quadrature gap is O(1/T^2)") {
  auto spec = ManifoldSpec::euclidean(2);
  std::mt19937_64 rng(5);
  int T = 101;
  Trajectory t1 = smooth_trajectory(spec, T, rng);
  Trajectory t2 = smooth_trajectory(spec, T, rng);
  Point c = identity_point(spec);
  Tsrvf h1 = compute_tsrvf(t1, c), h2 = compute_tsrvf(t2, c);
  double trap = tsrvf_distance(h1, h2);
  // midpoint oracle on the same sampled fields
  double acc = 0.0;
  for (int t = 0; t + 1 < T; ++t) {
    Eigen::VectorXd mid = 0.5 * (h1.field.row(t) + h1.field.row(t + 1)) -
                          0.5 * (h2.field.row(t) + h2.field.row(t + 1));
    acc += mid.squaredNorm() / (T - 1);
  }
  double midp = std::sqrt(acc);
  CHECK(std::abs(trap - midp) < 50.0 / (T * T));
}

TEST_CASE("warp_trajectory basics") {
  std::mt19937_64 rng(6);
  for (const auto& spec : kSpecs) {
    int T = 50;
    Trajectory traj = smooth_trajectory(spec, T, rng);
    Trajectory same = warp_trajectory(traj, WarpingFunction::identity(T));
    CHECK((same.samples - traj.samples).cwiseAbs().maxCoeff() < 1e-12);

    // gamma then gamma^{-1} round trip
    WarpingFunction g = random_smooth_warp(T, rng, 0.8);
    Trajectory warped = warp_trajectory(traj, g);
    Trajectory back = warp_trajectory(warped, gamma_inverse(g));
    for (int t = 0; t < T; ++t)
      CHECK(geodesic_distance(spec, traj.point(t), back.point(t)) <
            2.0 / T * 3.0);

    Point p = random_point(spec, rng);
    Trajectory flat = constant_trajectory(spec, p, T);
    Trajectory fw = warp_trajectory(flat, g);
    CHECK((fw.samples - flat.samples).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("warp_tsrvf: identity, norm preservation, path consistency") {
  std::mt19937_64 rng(7);
  for (const auto& spec : kSpecs) {
    int T = 100;
    Trajectory traj = smooth_trajectory(spec, T, rng);
    Point c = identity_point(spec);
    Tsrvf h = compute_tsrvf(traj, c);

    Tsrvf same = warp_tsrvf(h, WarpingFunction::identity(T));
    CHECK((same.field - h.field).cwiseAbs().maxCoeff() < 1e-12);

    WarpingFunction g = random_smooth_warp(T, rng, 0.8);
    Tsrvf warped = warp_tsrvf(h, g);
    double n0 = l2_field_norm(h), n1 = l2_field_norm(warped);
    CHECK(std::abs(n1 - n0) / n0 < 0.02);

    // Two routes to the TSRVF of the warped trajectory
    Tsrvf via_traj = compute_tsrvf(warp_trajectory(traj, g), c);
    CHECK(tsrvf_distance(via_traj, warped) / std::max(n0, 1.0) < 0.05);
  }
}

TEST_CASE("gamma group operations") {
  int T = 100;
  auto id = WarpingFunction::identity(T);
  auto cc = gamma_compose(id, id);
  CHECK((cc.values - id.values).cwiseAbs().maxCoeff() < 1e-12);

  // inverse of gamma(t) = t^2 is sqrt(t)
  WarpingFunction sq;
  sq.values.resize(T);
  for (int t = 0; t < T; ++t) {
    double s = static_cast<double>(t) / (T - 1);
    sq.values[t] = s * s;
  }
  auto inv = gamma_inverse(sq);
  for (int t = 0; t < T; ++t) {
    double s = static_cast<double>(t) / (T - 1);
    CHECK(std::abs(inv.values[t] - std::sqrt(s)) < 1.0 / T);
  }

  std::mt19937_64 rng(8);
  auto g1 = random_smooth_warp(T, rng), g2 = random_smooth_warp(T, rng),
       g3 = random_smooth_warp(T, rng);
  auto left = gamma_compose(gamma_compose(g1, g2), g3);
  auto right = gamma_compose(g1, gamma_compose(g2, g3));
  CHECK((left.values - right.values).cwiseAbs().maxCoeff() < 2.0 / T);

  auto roundtrip = gamma_compose(g1, gamma_inverse(g1));
  CHECK((roundtrip.values - id.values).cwiseAbs().maxCoeff() < 1.0 / T);

  WarpingFunction flat;
  flat.values.resize(4);
  flat.values << 0.0, 0.5, 0.5, 1.0;
  CHECK_THROWS_AS(gamma_inverse(flat), NotInvertible);
}

TEST_CASE("DP: identical fields give the identity warp at zero cost") {
  std::mt19937_64 rng(9);
  for (const auto& spec : kSpecs) {
    Trajectory traj = smooth_trajectory(spec, 40, rng);
    Tsrvf h = compute_tsrvf(traj, identity_point(spec));
    auto res = optimal_warp_dp(h, h);
    CHECK(res.cost == 0.0);
    CHECK((res.gamma.values - WarpingFunction::identity(40).values)
              .cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("DP matches exhaustive path enumeration for small T") {
  std::mt19937_64 rng(10);
  DpOptions opts;
  for (int trial = 0; trial < 100; ++trial) {
    const auto& spec = kSpecs[trial % kSpecs.size()];
    int T = 4 + trial % 3;  // 4..6
    Trajectory t1 = smooth_trajectory(spec, T, rng);
    Trajectory t2 = smooth_trajectory(spec, T, rng);
    Point c = identity_point(spec);
    Tsrvf h1 = compute_tsrvf(t1, c), h2 = compute_tsrvf(t2, c);
    auto res = optimal_warp_dp(h1, h2, opts);
    double brute =
        brute_force_path_cost(flat_field(h1), flat_field(h2), opts.steps);
    CHECK(res.cost == brute);
  }
}

TEST_CASE("DP recovers a known ground-truth warp") {
  std::mt19937_64 rng(11);
  for (const auto& spec : kSpecs) {
    int T = 100;
    Trajectory traj = smooth_trajectory(spec, T, rng);
    Tsrvf h = compute_tsrvf(traj, identity_point(spec));
    WarpingFunction g = random_smooth_warp(T, rng, 0.7);
    Tsrvf warped = warp_tsrvf(h, g);
    auto res = optimal_warp_dp(h, warped);
    WarpingFunction gstar = refine_warp(h, warped, res.gamma, 50);
    // gamma* inverts g, so gamma* composed with g should be the identity
    auto comp = gamma_compose(gstar, g);
    CHECK((comp.values - WarpingFunction::identity(T).values)
              .cwiseAbs().maxCoeff() < 2.0 / T);
    // feasibility bound: optimal cost never exceeds the unwarped distance
    CHECK(res.cost <= tsrvf_distance(h, warped) + 1e-12);
  }
}

TEST_CASE("rate-invariant distance: quotient property and invariance") {
  std::mt19937_64 rng(12);
  for (const auto& spec : kSpecs) {
    int T = 100;
    Trajectory traj = smooth_trajectory(spec, T, rng);
    Point c = identity_point(spec);
    CHECK(rate_invariant_distance(traj, traj, c) == 0.0);

    WarpingFunction g = random_smooth_warp(T, rng, 0.7);
    Trajectory warped = warp_trajectory(traj, g);
    double hnorm = l2_field_norm(compute_tsrvf(traj, c));
    double ds = rate_invariant_distance(traj, warped, c);
    CHECK(ds <= 0.02 * std::max(hnorm, 1.0));

    // d_h invariance under common warping
    Trajectory other = smooth_trajectory(spec, T, rng);
    Tsrvf h1 = compute_tsrvf(traj, c), h2 = compute_tsrvf(other, c);
    double base = tsrvf_distance(h1, h2);
    double after =
        tsrvf_distance(warp_tsrvf(h1, g), warp_tsrvf(h2, g));
    CHECK(std::abs(base - after) / base < 0.05);
  }
}

TEST_CASE("trajectory_mean: single input and warped copies") {
  std::mt19937_64 rng(13);
  auto spec = ManifoldSpec::euclidean(3);
  int T = 60;
  Trajectory traj = smooth_trajectory(spec, T, rng, 1.0);

  auto single = trajectory_mean({traj}, identity_point(spec));
  CHECK((single.mean.samples - traj.samples).cwiseAbs().maxCoeff() == 0.0);
  CHECK(single.warps.size() == 1);
  CHECK(single.converged);

  // warped copies collapse onto the template
  std::vector<Trajectory> copies;
  for (int i = 0; i < 5; ++i)
    copies.push_back(warp_trajectory(traj, random_smooth_warp(T, rng, 0.6)));
  double init_err = registration_error(copies[0], copies);
  MeanOptions opts;
  opts.max_iter = 30;
  auto res = trajectory_mean(copies, identity_point(spec), opts);
  CHECK(res.error_trace.back() <= 0.01 * init_err);
  for (size_t i = 1; i < res.error_trace.size(); ++i)
    CHECK(res.error_trace[i] <= res.error_trace[i - 1] + 1e-12);

  CHECK_THROWS_AS(trajectory_mean({}, identity_point(spec)), EmptyInput);
}

TEST_CASE("trajectory_mean on a non-Euclidean spec") {
  std::mt19937_64 rng(14);
  auto spec = ManifoldSpec::grassmann(2, 5);
  int T = 40;
  Trajectory traj = smooth_trajectory(spec, T, rng, 0.6);
  std::vector<Trajectory> copies;
  for (int i = 0; i < 4; ++i)
    copies.push_back(warp_trajectory(traj, random_smooth_warp(T, rng, 0.5)));
  double init_err = registration_error(copies[0], copies);
  MeanOptions opts;
  opts.max_iter = 25;
  auto res = trajectory_mean(copies, default_reference(spec, copies), opts);
  CHECK(res.error_trace.back() <= 0.05 * init_err);
  for (int t = 0; t < T; ++t)
    CHECK(validate_point(spec, res.mean.point(t)).max_violation < 1e-9);
}

TEST_CASE("per-component warping mode on SE(3) products") {
  std::mt19937_64 rng(15);
  auto spec = ManifoldSpec::se3_product(3);
  int T = 30;
  Trajectory traj = smooth_trajectory(spec, T, rng, 0.5);
  std::vector<Trajectory> copies;
  for (int i = 0; i < 3; ++i)
    copies.push_back(warp_trajectory(traj, random_smooth_warp(T, rng, 0.5)));
  MeanOptions opts;
  opts.max_iter = 10;
  opts.per_component_warp = true;
  auto res = trajectory_mean(copies, identity_point(spec), opts);
  CHECK(res.error_trace.back() <= res.error_trace.front() + 1e-12);
  CHECK(res.mean.length() == T);
}

TEST_CASE("registration error") {
  std::mt19937_64 rng(16);
  auto spec = ManifoldSpec::spd(3);
  int T = 25;
  Trajectory mu = smooth_trajectory(spec, T, rng, 0.4);
  CHECK(registration_error(mu, {mu, mu}) < 1e-20);

  // single trajectory at constant geodesic distance r at every t
  double r = 0.3;
  Trajectory off;
  off.spec = spec;
  off.samples.resize(T, spec.ambient_size());
  for (int t = 0; t < T; ++t) {
    Point p = mu.point(t);
    off.samples.row(t) = exp_map(spec, p, random_tangent(spec, p, r, 7)).data;
  }
  CHECK(registration_error(mu, {off}) ==
        doctest::Approx(T * r * r).epsilon(1e-6));

  Trajectory a = smooth_trajectory(spec, T, rng, 0.4);
  Trajectory b = smooth_trajectory(spec, T, rng, 0.4);
  CHECK(registration_error(mu, {a, b}) ==
        doctest::Approx(registration_error(mu, {b, a})).epsilon(1e-12));
}

TEST_CASE("resample and subsequence") {
  std::mt19937_64 rng(17);
  for (const auto& spec : kSpecs) {
    int T = 100;
    // geodesic: closed under geodesic interpolation
    Point p0 = random_point(spec, rng, 0.3);
    Tangent dir = random_tangent(spec, p0, 0.8, rng());
    Trajectory geo;
    geo.spec = spec;
    geo.samples.resize(T, spec.ambient_size());
    for (int t = 0; t < T; ++t) {
      Tangent v(spec, p0, dir.data * (static_cast<double>(t) / (T - 1)));
      geo.samples.row(t) = exp_map(spec, p0, v).data;
    }
    Trajectory same = resample(geo, T);
    CHECK((same.samples - geo.samples).cwiseAbs().maxCoeff() < 1e-12);

    Trajectory down = resample(geo, 50);
    Trajectory up = resample(down, T);
    for (int t = 0; t < T; ++t)
      CHECK(geodesic_distance(spec, geo.point(t), up.point(t)) < 1e-8);

    Trajectory sub = subsequence(geo, T);
    CHECK((sub.samples - geo.samples).cwiseAbs().maxCoeff() == 0.0);
    CHECK(subsequence(geo, 40).length() == 40);
  }
}
