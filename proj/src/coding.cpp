#include "rft/coding.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace rft {

std::string to_string(CodingMethod m) {
  switch (m) {
    case CodingMethod::PCA: return "pca";
    case CodingMethod::KSVD: return "ksvd";
    case CodingMethod::LCKSVD: return "lcksvd";
  }
  return "pca";
}

CodingMethod coding_method_from_string(const std::string& s) {
  if (s == "pca") return CodingMethod::PCA;
  if (s == "ksvd") return CodingMethod::KSVD;
  if (s == "lcksvd") return CodingMethod::LCKSVD;
  throw ParseError("unknown coding method: " + s);
}

namespace {

int first_nonzero_index(const VectorXd& v, double tol = 1e-12) {
  for (int i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > tol) return i;
  return static_cast<int>(v.size());
}

void canonical_sign(Eigen::Ref<VectorXd> v) {
  int i = first_nonzero_index(v);
  if (i < v.size() && v[i] < 0.0) v = -v;
}

/// PCA of the rows of X (already centered) through the N x N Gram matrix.
/// Returns the top-d orthonormal basis columns and all positive eigenvalues
/// in descending order. Throws RankError when d exceeds the numerical rank.
std::pair<MatrixXd, VectorXd> gram_pca(const MatrixXd& X, int d) {
  const int N = static_cast<int>(X.rows());
  MatrixXd G = X * X.transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
  if (es.info() != Eigen::Success)
    throw NumericalError("gram_pca: eigendecomposition failed");

  VectorXd lam = es.eigenvalues().reverse();
  MatrixXd U = es.eigenvectors().rowwise().reverse();
  double lam_max = std::max(lam[0], 0.0);
  if (lam_max <= 1e-24) throw DegenerateData("gram_pca: zero-variance data");
  double thresh = std::max(N, static_cast<int>(X.cols())) * 1e-14 * lam_max;

  int rank = 0;
  while (rank < N && lam[rank] > thresh) ++rank;
  if (d > rank) throw RankError("gram_pca: d exceeds numerical rank");

  MatrixXd basis(X.cols(), rank);
  for (int j = 0; j < rank; ++j)
    basis.col(j) = X.transpose() * U.col(j) / std::sqrt(lam[j]);

  // deterministic order within eigenvalue ties, then canonical signs
  std::vector<int> order(rank);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (std::abs(lam[a] - lam[b]) > 1e-12 * lam_max) return lam[a] > lam[b];
    return first_nonzero_index(basis.col(a)) < first_nonzero_index(basis.col(b));
  });
  MatrixXd B(X.cols(), d);
  VectorXd ev(rank);
  for (int j = 0; j < rank; ++j) ev[j] = lam[order[j]];
  for (int j = 0; j < d; ++j) B.col(j) = basis.col(order[j]);

  // one modified Gram-Schmidt pass to pin orthonormality
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < j; ++i) B.col(j) -= B.col(i).dot(B.col(j)) * B.col(i);
    B.col(j).normalize();
    canonical_sign(B.col(j));
  }
  return {B, ev};
}

MatrixXd shooting_rows(const ManifoldSpec& spec, const Trajectory& mu,
                       const std::vector<Trajectory>& aligned) {
  int T = mu.length();
  int m = spec.tangent_size();
  MatrixXd V(static_cast<int>(aligned.size()), T * m);
  for (size_t i = 0; i < aligned.size(); ++i) {
    for (int t = 0; t < T; ++t) {
      Point mt = mu.point(t);
      Tangent v = log_map(spec, mt, aligned[i].point(t));
      V.row(i).segment(t * m, m) = flat_coords(spec, mt, v.data);
    }
  }
  return V;
}

}  // namespace

namespace {

std::vector<Trajectory> align_to_mean(const Trajectory& mu,
                                      const std::vector<Trajectory>& trajs,
                                      const Point& c, int refine_sweeps) {
  Tsrvf hmu = compute_tsrvf(mu, c);
  std::vector<Trajectory> out;
  out.reserve(trajs.size());
  for (const auto& traj : trajs) {
    Tsrvf hj = compute_tsrvf(traj, c);
    WarpingFunction g = optimal_warp_dp(hmu, hj).gamma;
    if (refine_sweeps > 0) g = refine_warp(hmu, hj, g, refine_sweeps);
    out.push_back(warp_trajectory(traj, g));
  }
  return out;
}

Trajectory cross_sectional_mean(const ManifoldSpec& spec,
                                const std::vector<Trajectory>& aligned,
                                MeanMode mode) {
  int T = aligned.front().length();
  Trajectory mu;
  mu.spec = spec;
  mu.samples.resize(T, spec.ambient_size());
  for (int t = 0; t < T; ++t) {
    std::vector<Point> pts;
    pts.reserve(aligned.size());
    for (const auto& a : aligned) pts.push_back(a.point(t));
    mu.samples.row(t) = karcher_mean_points(spec, pts, 1e-12, 200, mode).mean.data;
  }
  return mu;
}

}  // namespace

ShootingSet shooting_set(const std::vector<Trajectory>& trajs, const Point& c,
                         double tol, int max_iter,
                         const MeanOptions& mean_opts) {
  if (trajs.empty()) throw EmptyInput("shooting_set: no trajectories");
  MeanOptions opts = mean_opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  MeanResult mr = trajectory_mean(trajs, c, opts);

  ShootingSet ss;
  ss.spec = trajs.front().spec;
  ss.reference = c;
  ss.mean = mr.mean;
  ss.aligned = mr.aligned;

  // Polish mean and alignment to a joint fixed point so that the shooting
  // rows are zero-mean (Karcher stationarity) and re-encoding a training
  // trajectory reproduces its row exactly.
  if (trajs.size() > 1 && !opts.per_component_warp) {
    // intrinsic means: Karcher stationarity makes the rows (near) zero-mean
    MeanMode mode = opts.point_mean_mode == MeanMode::Extrinsic
                        ? MeanMode::Extrinsic
                        : MeanMode::Intrinsic;
    Trajectory mu = ss.mean;
    for (int it = 0; it < 30; ++it) {
      auto aligned = align_to_mean(mu, trajs, c, opts.refine_sweeps);
      Trajectory next = cross_sectional_mean(ss.spec, aligned, mode);
      double delta = 0.0;
      for (int t = 0; t < mu.length(); ++t)
        delta = std::max(delta, geodesic_distance(ss.spec, mu.point(t),
                                                  next.point(t)));
      mu = std::move(next);
      if (delta < 1e-9) break;
    }
    ss.mean = mu;
    ss.aligned = align_to_mean(mu, trajs, c, opts.refine_sweeps);
  }
  ss.vectors = shooting_rows(ss.spec, ss.mean, ss.aligned);
  return ss;
}

VectorXd omp_encode(const MatrixXd& B, const VectorXd& x, int s) {
  const int d = static_cast<int>(B.cols());
  if (s < 1) throw ValidationError("omp_encode: sparsity >= 1 required");
  s = std::min(s, d);
  VectorXd code = VectorXd::Zero(d);
  VectorXd r = x;
  std::vector<int> support;
  for (int step = 0; step < s; ++step) {
    int best = -1;
    double best_corr = 1e-14;
    for (int j = 0; j < d; ++j) {
      if (std::find(support.begin(), support.end(), j) != support.end())
        continue;
      double corr = std::abs(B.col(j).dot(r));
      if (corr > best_corr) {
        best_corr = corr;
        best = j;
      }
    }
    if (best < 0) break;
    support.push_back(best);
    MatrixXd Bs(B.rows(), support.size());
    for (size_t k = 0; k < support.size(); ++k) Bs.col(k) = B.col(support[k]);
    VectorXd cs = Bs.colPivHouseholderQr().solve(x);
    r = x - Bs * cs;
    for (size_t k = 0; k < support.size(); ++k) code[support[k]] = cs[k];
    if (r.norm() < 1e-12) break;
  }
  return code;
}

namespace {

/// Leading singular triple of E, computed through the small side E^T E.
void rank_one_update(const MatrixXd& E, VectorXd& atom, VectorXd& coeffs) {
  MatrixXd S = E.transpose() * E;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  VectorXd v = es.eigenvectors().col(S.rows() - 1);
  VectorXd Ev = E * v;
  double sigma = Ev.norm();
  if (sigma < 1e-14) return;  // keep the previous atom
  atom = Ev / sigma;
  canonical_sign(atom);
  coeffs = E.transpose() * atom;
}

struct KsvdFit {
  MatrixXd dict;   // D x d
  MatrixXd codes;  // d x N
  std::vector<double> trace;
};

KsvdFit ksvd(const MatrixXd& X, int d, int s, int max_iter, double tol,
             std::uint64_t seed, const std::vector<int>* init_rows) {
  const int N = static_cast<int>(X.cols());
  const int D = static_cast<int>(X.rows());

  MatrixXd dict(D, d);
  std::mt19937_64 rng(seed);
  if (init_rows) {
    for (int j = 0; j < d; ++j) dict.col(j) = X.col((*init_rows)[j]);
  } else {
    std::vector<int> idx(N);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int j = 0; j < d; ++j) dict.col(j) = X.col(idx[j % N]);
  }
  std::normal_distribution<double> g(0.0, 1.0);
  for (int j = 0; j < d; ++j) {
    if (dict.col(j).norm() < 1e-12)
      for (int i = 0; i < D; ++i) dict(i, j) = g(rng);
    dict.col(j).normalize();
    canonical_sign(dict.col(j));
  }

  MatrixXd codes = MatrixXd::Zero(d, N);
  KsvdFit fit;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    // sparse coding; keep the previous column when OMP does not improve it
    for (int i = 0; i < N; ++i) {
      VectorXd cand = omp_encode(dict, X.col(i), s);
      double rn = (X.col(i) - dict * cand).norm();
      double ro = (X.col(i) - dict * codes.col(i)).norm();
      if (it == 0 || rn <= ro) codes.col(i) = cand;
    }
    // atom updates
    for (int k = 0; k < d; ++k) {
      std::vector<int> users;
      for (int i = 0; i < N; ++i)
        if (codes(k, i) != 0.0) users.push_back(i);
      if (users.empty()) {
        // replace with the worst-represented signal
        int worst = 0;
        double worst_err = -1.0;
        for (int i = 0; i < N; ++i) {
          double e = (X.col(i) - dict * codes.col(i)).norm();
          if (e > worst_err) {
            worst_err = e;
            worst = i;
          }
        }
        if (worst_err > 1e-12) {
          dict.col(k) = X.col(worst).normalized();
          canonical_sign(dict.col(k));
        }
        continue;
      }
      MatrixXd E(D, users.size());
      for (size_t u = 0; u < users.size(); ++u) {
        int i = users[u];
        E.col(u) = X.col(i) - dict * codes.col(i) + dict.col(k) * codes(k, i);
      }
      VectorXd atom = dict.col(k);
      VectorXd coeffs(users.size());
      for (size_t u = 0; u < users.size(); ++u) coeffs[u] = codes(k, users[u]);
      rank_one_update(E, atom, coeffs);
      dict.col(k) = atom;
      for (size_t u = 0; u < users.size(); ++u) codes(k, users[u]) = coeffs[u];
    }
    double err = (X - dict * codes).norm();
    fit.trace.push_back(err);
    if (prev - err < tol) break;
    prev = err;
  }
  fit.dict = std::move(dict);
  fit.codes = std::move(codes);
  return fit;
}

}  // namespace

FitResult fit_codebook(const ShootingSet& ss, const FitOptions& opts,
                       const std::vector<int>& labels) {
  const int N = ss.count();
  const int D = ss.dim();
  const int d = opts.d;
  if (d < 1 || d > std::min(N, D))
    throw RankError("fit_codebook: d must satisfy 1 <= d <= min(N, D)");
  if ((ss.vectors.rowwise() - ss.vectors.row(0)).norm() < 1e-12 * std::max(1.0, ss.vectors.norm()))
    throw DegenerateData("fit_codebook: all shooting rows identical");

  FitResult out;
  Codebook& cb = out.codebook;
  cb.method = opts.method;
  cb.spec = ss.spec;
  cb.reference = ss.reference;
  cb.mean = ss.mean;

  if (opts.method == CodingMethod::PCA) {
    VectorXd center = ss.vectors.colwise().mean().transpose();
    MatrixXd X = ss.vectors.rowwise() - center.transpose();
    auto [basis, ev] = gram_pca(X, d);
    cb.basis = std::move(basis);
    cb.center = std::move(center);
    cb.sparsity = 0;
    out.eigenvalues = std::move(ev);
    out.codes.matrix = cb.basis.transpose() * X.transpose();
    return out;
  }

  if (opts.sparsity < 1)
    throw ValidationError("fit_codebook: sparsity >= 1 required");
  cb.sparsity = std::min(opts.sparsity, d);
  cb.center = VectorXd::Zero(D);
  MatrixXd X = ss.vectors.transpose();  // D x N, signals as columns

  if (opts.method == CodingMethod::KSVD) {
    KsvdFit fit =
        ksvd(X, d, cb.sparsity, opts.max_iter, opts.tol, opts.seed, nullptr);
    cb.basis = std::move(fit.dict);
    out.codes.matrix = std::move(fit.codes);
    out.objective_trace = std::move(fit.trace);
    return out;
  }

  // LC-KSVD1: stack a label-consistency block under the signals and run the
  // same alternation on the extended problem.
  if (static_cast<int>(labels.size()) != N)
    throw ValidationError("fit_codebook: LCKSVD requires one label per row");
  std::vector<int> classes(labels);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  // atoms assigned to classes round-robin; each initialized from a row of
  // its own class
  cb.label_map.resize(d);
  std::vector<std::vector<int>> by_class(classes.size());
  for (int i = 0; i < N; ++i) {
    int c = static_cast<int>(std::lower_bound(classes.begin(), classes.end(),
                                              labels[i]) -
                             classes.begin());
    by_class[c].push_back(i);
  }
  std::mt19937_64 rng(opts.seed);
  std::vector<int> init_rows(d);
  for (int k = 0; k < d; ++k) {
    int c = k % static_cast<int>(classes.size());
    cb.label_map[k] = classes[c];
    const auto& rows = by_class[c];
    init_rows[k] = rows[rng() % rows.size()];
  }

  MatrixXd Q = MatrixXd::Zero(d, N);
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < N; ++i)
      if (cb.label_map[k] == labels[i]) Q(k, i) = 1.0;

  double rk = std::sqrt(opts.kappa);
  MatrixXd Xs(D + d, N);
  Xs.topRows(D) = X;
  Xs.bottomRows(d) = rk * Q;
  KsvdFit fit = ksvd(Xs, d, cb.sparsity, opts.max_iter, opts.tol, opts.seed,
                     &init_rows);

  // keep the signal part of each atom, renormalized; rescale codes to match
  cb.basis.resize(D, d);
  for (int k = 0; k < d; ++k) {
    VectorXd atom = fit.dict.col(k).head(D);
    double nrm = atom.norm();
    if (nrm < 1e-12) {
      cb.basis.col(k) = fit.dict.col(k).head(D);
      continue;
    }
    cb.basis.col(k) = atom / nrm;
    fit.codes.row(k) *= nrm;
  }
  out.codes.matrix = std::move(fit.codes);
  out.objective_trace = std::move(fit.trace);
  return out;
}

VectorXd shooting_row(const ManifoldSpec& spec, const Trajectory& mean,
                      const Point& reference, const Trajectory& traj) {
  if (traj.spec != spec)
    throw ValidationError("shooting_row: manifold spec mismatch");
  if (traj.length() != mean.length())
    throw ValidationError("shooting_row: trajectory length mismatch");
  Tsrvf hmu = compute_tsrvf(mean, reference);
  Tsrvf hj = compute_tsrvf(traj, reference);
  auto dp = optimal_warp_dp(hmu, hj);
  WarpingFunction g = refine_warp(hmu, hj, dp.gamma, 50);
  Trajectory aligned = warp_trajectory(traj, g);
  return shooting_rows(spec, mean, {aligned}).row(0);
}

VectorXd shooting_row(const Codebook& cb, const Trajectory& traj) {
  return shooting_row(cb.spec, cb.mean, cb.reference, traj);
}

VectorXd encode(const Codebook& cb, const Trajectory& traj) {
  VectorXd v = shooting_row(cb, traj);
  if (cb.method == CodingMethod::PCA)
    return cb.basis.transpose() * (v - cb.center);
  return omp_encode(cb.basis, v, cb.sparsity);
}

Trajectory decode(const Codebook& cb, const VectorXd& code) {
  if (code.size() != cb.code_size())
    throw ValidationError("decode: code length mismatch");
  VectorXd v = cb.basis * code;
  if (cb.method == CodingMethod::PCA) v += cb.center;

  int T = cb.length();
  int m = cb.spec.tangent_size();
  Trajectory out;
  out.spec = cb.spec;
  out.samples.resize(T, cb.spec.ambient_size());
  for (int t = 0; t < T; ++t) {
    Point mt = cb.mean.point(t);
    VectorXd data = unflat_coords(cb.spec, mt, v.segment(t * m, m));
    out.samples.row(t) = exp_map(cb.spec, mt, Tangent(cb.spec, mt, data)).data;
  }
  return out;
}

PgaModel pga_fit(const std::vector<Trajectory>& trajs, int d_frame) {
  if (trajs.empty()) throw EmptyInput("pga_fit: no trajectories");
  const ManifoldSpec& spec = trajs.front().spec;
  int T = trajs.front().length();
  int N = static_cast<int>(trajs.size());
  int m = spec.tangent_size();
  for (const auto& tr : trajs) {
    if (tr.spec != spec) throw ValidationError("pga_fit: spec mismatch");
    if (tr.length() != T) throw ValidationError("pga_fit: length mismatch");
  }
  if (d_frame < 1 || d_frame > std::min(N, m))
    throw RankError("pga_fit: d_frame must satisfy 1 <= d_frame <= min(N, m)");

  PgaModel model;
  model.spec = spec;
  model.d_frame = d_frame;
  model.codes.resize(N, T * d_frame);
  for (int t = 0; t < T; ++t) {
    std::vector<Point> pts;
    pts.reserve(N);
    for (const auto& tr : trajs) pts.push_back(tr.point(t));
    Point mt = karcher_mean_points(spec, pts).mean;
    model.frame_means.push_back(mt);

    MatrixXd U(N, m);
    for (int i = 0; i < N; ++i)
      U.row(i) = flat_coords(spec, mt, log_map(spec, mt, pts[i]).data);

    // Karcher stationarity makes the rows (near) zero-mean already; the
    // basis handles rank deficiency with zero columns past the rank.
    MatrixXd B = MatrixXd::Zero(m, d_frame);
    MatrixXd G = U * U.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
    VectorXd lam = es.eigenvalues().reverse();
    MatrixXd W = es.eigenvectors().rowwise().reverse();
    double lam_max = std::max(lam[0], 0.0);
    double thresh = std::max(N, m) * 1e-14 * std::max(lam_max, 1e-300);
    for (int j = 0; j < d_frame && j < N; ++j) {
      if (lam[j] <= thresh) break;
      B.col(j) = U.transpose() * W.col(j) / std::sqrt(lam[j]);
      canonical_sign(B.col(j));
    }
    model.frame_bases.push_back(B);
    model.codes.middleCols(t * d_frame, d_frame) = U * B;
  }
  return model;
}

VectorXd pga_encode(const PgaModel& model, const Trajectory& traj) {
  int T = static_cast<int>(model.frame_means.size());
  int df = model.d_frame;
  if (traj.spec != model.spec)
    throw ValidationError("pga_encode: manifold spec mismatch");
  if (traj.length() != T)
    throw ValidationError("pga_encode: trajectory length mismatch");
  VectorXd code(T * df);
  for (int t = 0; t < T; ++t) {
    const Point& mt = model.frame_means[t];
    VectorXd u =
        flat_coords(model.spec, mt, log_map(model.spec, mt, traj.point(t)).data);
    code.segment(t * df, df) = model.frame_bases[t].transpose() * u;
  }
  return code;
}

Trajectory pga_decode(const PgaModel& model, const VectorXd& code) {
  int T = static_cast<int>(model.frame_means.size());
  int df = model.d_frame;
  if (code.size() != T * df)
    throw ValidationError("pga_decode: code length mismatch");
  Trajectory out;
  out.spec = model.spec;
  out.samples.resize(T, model.spec.ambient_size());
  for (int t = 0; t < T; ++t) {
    const Point& mt = model.frame_means[t];
    VectorXd flat = model.frame_bases[t] * code.segment(t * df, df);
    VectorXd data = unflat_coords(model.spec, mt, flat);
    out.samples.row(t) =
        exp_map(model.spec, mt, Tangent(model.spec, mt, data)).data;
  }
  return out;
}

}  // namespace rft
