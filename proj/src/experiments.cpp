#include "rft/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace rft {

int LabeledDataset::class_count() const {
  std::set<int> s(labels.begin(), labels.end());
  return static_cast<int>(s.size());
}

std::string to_string(Pipeline p) {
  switch (p) {
    case Pipeline::UnwarpedL2: return "unwarped-l2";
    case Pipeline::TsrvfNN: return "tsrvf-nn";
    case Pipeline::TsrvfSVM: return "tsrvf-svm";
    case Pipeline::RfPca: return "rf-pca";
    case Pipeline::RfKsvd: return "rf-ksvd";
    case Pipeline::RfLcksvd: return "rf-lcksvd";
    case Pipeline::Pga: return "pga";
  }
  return "unwarped-l2";
}

Pipeline pipeline_from_string(const std::string& s) {
  if (s == "unwarped-l2" || s == "unwarped") return Pipeline::UnwarpedL2;
  if (s == "tsrvf-nn") return Pipeline::TsrvfNN;
  if (s == "tsrvf-svm") return Pipeline::TsrvfSVM;
  if (s == "rf-pca" || s == "rfpca") return Pipeline::RfPca;
  if (s == "rf-ksvd" || s == "rfksvd") return Pipeline::RfKsvd;
  if (s == "rf-lcksvd" || s == "rflcksvd") return Pipeline::RfLcksvd;
  if (s == "pga") return Pipeline::Pga;
  throw ParseError("unknown pipeline: " + s);
}

Trajectory random_trajectory(const ManifoldSpec& spec, int T, double amplitude,
                             std::mt19937_64& rng) {
  Point base = exp_map(spec, identity_point(spec),
                       random_tangent(spec, identity_point(spec), 0.3, rng()));
  constexpr int kModes = 3;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<VectorXd> dirs;
  std::vector<double> phase, amp;
  for (int j = 0; j < kModes; ++j) {
    dirs.push_back(random_tangent(spec, base, 1.0, rng()).data);
    phase.push_back(2.0 * M_PI * u(rng));
    amp.push_back(amplitude * (0.3 + 0.7 * u(rng)) / kModes);
  }
  Trajectory traj;
  traj.spec = spec;
  traj.samples.resize(T, spec.ambient_size());
  for (int t = 0; t < T; ++t) {
    double s = static_cast<double>(t) / (T - 1);
    VectorXd v = VectorXd::Zero(spec.tangent_size());
    for (int j = 0; j < kModes; ++j)
      v += amp[j] * std::sin(M_PI * (1.0 + j) * s + phase[j]) * dirs[j];
    traj.samples.row(t) = exp_map(spec, base, Tangent(spec, base, v)).data;
  }
  return traj;
}

WarpingFunction random_warp(int T, double strength, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr int kModes = 3;
  std::vector<double> phase, amp;
  for (int j = 0; j < kModes; ++j) {
    phase.push_back(2.0 * M_PI * u(rng));
    amp.push_back(strength * (0.2 + 0.8 * u(rng)) / kModes);
  }
  VectorXd rate(T);
  for (int t = 0; t < T; ++t) {
    double s = static_cast<double>(t) / (T - 1);
    double b = 0.0;
    for (int j = 0; j < kModes; ++j)
      b += amp[j] * std::sin(2.0 * M_PI * (1.0 + j) * s + phase[j]);
    rate[t] = std::exp(b);
  }
  WarpingFunction g;
  g.values.resize(T);
  g.values[0] = 0.0;
  for (int t = 1; t < T; ++t)
    g.values[t] = g.values[t - 1] + 0.5 * (rate[t - 1] + rate[t]);
  g.values /= g.values[T - 1];
  return g;
}

LabeledDataset synth_dataset(const ManifoldSpec& spec, int k_classes,
                             int n_per_class, int T, double warp_strength,
                             double noise, std::uint64_t seed) {
  if (k_classes < 1 || n_per_class < 1 || T < 2)
    throw ValidationError("synth_dataset: bad shape parameters");
  std::mt19937_64 rng(seed);
  LabeledDataset ds;
  for (int c = 0; c < k_classes; ++c) {
    Trajectory tmpl = random_trajectory(spec, T, 0.6, rng);
    for (int i = 0; i < n_per_class; ++i) {
      Trajectory inst = tmpl;
      if (warp_strength > 0.0)
        inst = warp_trajectory(tmpl, random_warp(T, warp_strength, rng));
      if (noise > 0.0) inst = perturb_trajectory(inst, noise, rng());
      ds.trajectories.push_back(std::move(inst));
      ds.labels.push_back(c);
    }
  }
  std::ostringstream meta;
  meta << "synth spec=" << spec.to_string() << " k=" << k_classes
       << " n=" << n_per_class << " T=" << T << " warp=" << warp_strength
       << " noise=" << noise << " seed=" << seed;
  ds.metadata = meta.str();
  return ds;
}

Trajectory perturb_trajectory(const Trajectory& traj, double k_max,
                              std::uint64_t seed) {
  if (k_max < 0.0) throw ValidationError("perturb_trajectory: k_max < 0");
  if (k_max == 0.0) return traj;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Trajectory out = traj;
  for (int t = 0; t < out.length(); ++t) {
    double k = k_max * u(rng);
    if (k == 0.0) continue;
    Point p = out.point(t);
    out.set_point(t, exp_map(out.spec, p, random_tangent(out.spec, p, k, rng())));
  }
  return out;
}

MatrixXd train_linear_svm(const MatrixXd& X, const std::vector<int>& labels,
                          int classes, double C, double tol, int max_epochs) {
  const int n = static_cast<int>(X.rows());
  const int D = static_cast<int>(X.cols());
  MatrixXd W = MatrixXd::Zero(D + 1, classes);
  VectorXd qii(n);
  for (int i = 0; i < n; ++i) qii[i] = X.row(i).squaredNorm() + 1.0;

  for (int c = 0; c < classes; ++c) {
    VectorXd w = VectorXd::Zero(D + 1);
    VectorXd alpha = VectorXd::Zero(n);
    for (int epoch = 0; epoch < max_epochs; ++epoch) {
      double max_change = 0.0;
      for (int i = 0; i < n; ++i) {
        double y = labels[i] == c ? 1.0 : -1.0;
        double score = w.head(D).dot(X.row(i)) + w[D];
        double grad = y * score - 1.0;
        double pg = grad;
        if (alpha[i] <= 0.0)
          pg = std::min(grad, 0.0);
        else if (alpha[i] >= C)
          pg = std::max(grad, 0.0);
        if (std::abs(pg) < 1e-12) continue;
        double next = std::clamp(alpha[i] - grad / qii[i], 0.0, C);
        double delta = next - alpha[i];
        if (delta == 0.0) continue;
        w.head(D) += delta * y * X.row(i).transpose();
        w[D] += delta * y;
        alpha[i] = next;
        max_change = std::max(max_change, std::abs(delta));
      }
      if (max_change < tol) break;
    }
    W.col(c) = w;
  }
  return W;
}

namespace {

double unwarped_sq_distance(const Trajectory& a, const Trajectory& b) {
  double acc = 0.0;
  int T = a.length();
  for (int t = 0; t < T; ++t) {
    double d = geodesic_distance(a.spec, a.point(t), b.point(t));
    double w = (t == 0 || t == T - 1) ? 0.5 : 1.0;
    acc += w * d * d;
  }
  return acc / (T - 1);
}

int nearest_label(const VectorXd& dists, const std::vector<int>& labels) {
  int best = 0;
  for (int i = 1; i < dists.size(); ++i)
    if (dists[i] < dists[best]) best = i;
  return labels[best];
}

struct Split {
  std::vector<int> train, test;
};

Split make_split(const LabeledDataset& ds, double train_fraction,
                 std::mt19937_64& rng) {
  std::map<int, std::vector<int>> by_class;
  for (int i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
  Split sp;
  for (auto& [label, idx] : by_class) {
    if (idx.size() < 2)
      throw SplitError("class " + std::to_string(label) +
                       " has fewer than 2 instances");
    std::shuffle(idx.begin(), idx.end(), rng);
    int n_train = std::clamp(
        static_cast<int>(std::lround(train_fraction * idx.size())), 1,
        static_cast<int>(idx.size()) - 1);
    for (size_t i = 0; i < idx.size(); ++i)
      (static_cast<int>(i) < n_train ? sp.train : sp.test).push_back(idx[i]);
  }
  std::sort(sp.train.begin(), sp.train.end());
  std::sort(sp.test.begin(), sp.test.end());
  return sp;
}

std::vector<Trajectory> gather(const LabeledDataset& ds,
                               const std::vector<int>& idx) {
  std::vector<Trajectory> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(ds.trajectories[i]);
  return out;
}

std::vector<int> gather_labels(const LabeledDataset& ds,
                               const std::vector<int>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(ds.labels[i]);
  return out;
}

/// Predicted labels for the test set under one pipeline; sets `dimension`
/// to the representation length fed to the classifier.
std::vector<int> run_pipeline(const LabeledDataset& ds, Pipeline pipeline,
                              const Split& sp, const EvalOptions& opts,
                              int classes, std::uint64_t fit_seed,
                              int& dimension) {
  const ManifoldSpec& spec = ds.trajectories.front().spec;
  int T = ds.trajectories.front().length();
  auto train = gather(ds, sp.train);
  auto train_labels = gather_labels(ds, sp.train);
  int n_train = static_cast<int>(train.size());
  std::vector<int> pred;

  if (pipeline == Pipeline::UnwarpedL2 || pipeline == Pipeline::TsrvfNN) {
    Point c = default_reference(spec, train);
    dimension = pipeline == Pipeline::UnwarpedL2 ? T * spec.ambient_size()
                                                 : T * spec.tangent_size();
    for (int i : sp.test) {
      VectorXd d(n_train);
      for (int j = 0; j < n_train; ++j)
        d[j] = pipeline == Pipeline::UnwarpedL2
                   ? unwarped_sq_distance(ds.trajectories[i], train[j])
                   : rate_invariant_distance(ds.trajectories[i], train[j], c);
      pred.push_back(nearest_label(d, train_labels));
    }
    return pred;
  }

  if (pipeline == Pipeline::Pga) {
    int df = std::clamp(opts.code_dim, 1, std::min(n_train, spec.tangent_size()));
    PgaModel model = pga_fit(train, df);
    dimension = T * df;
    MatrixXd train_codes = model.codes;
    for (int i : sp.test) {
      VectorXd code = pga_encode(model, ds.trajectories[i]);
      VectorXd d(n_train);
      for (int j = 0; j < n_train; ++j)
        d[j] = (code - train_codes.row(j).transpose()).norm();
      pred.push_back(nearest_label(d, train_labels));
    }
    return pred;
  }

  Point c = default_reference(spec, train);
  ShootingSet ss = shooting_set(train, c);

  if (pipeline == Pipeline::TsrvfSVM) {
    dimension = ss.dim();
    MatrixXd W = train_linear_svm(ss.vectors, train_labels, classes);
    for (int i : sp.test) {
      VectorXd row = shooting_row(spec, ss.mean, ss.reference,
                                  ds.trajectories[i]);
      VectorXd score =
          W.topRows(ss.dim()).transpose() * row + W.row(ss.dim()).transpose();
      int best = 0;
      for (int cidx = 1; cidx < classes; ++cidx)
        if (score[cidx] > score[best]) best = cidx;
      pred.push_back(best);
    }
    return pred;
  }

  FitOptions fo;
  fo.method = pipeline == Pipeline::RfPca    ? CodingMethod::PCA
              : pipeline == Pipeline::RfKsvd ? CodingMethod::KSVD
                                             : CodingMethod::LCKSVD;
  fo.seed = fit_seed;
  fo.d = std::clamp(opts.code_dim, 1, std::min(n_train - 1, ss.dim()));
  fo.sparsity = std::clamp(opts.sparsity, 1, fo.d);
  FitResult fit;
  for (;;) {
    try {
      fit = fit_codebook(ss, fo, train_labels);
      break;
    } catch (const RankError&) {
      if (fo.d <= 1) throw;
      --fo.d;
      fo.sparsity = std::min(fo.sparsity, fo.d);
    }
  }
  dimension = fo.d;
  for (int i : sp.test) {
    VectorXd code = encode(fit.codebook, ds.trajectories[i]);
    VectorXd d(n_train);
    for (int j = 0; j < n_train; ++j)
      d[j] = (code - fit.codes.matrix.col(j)).norm();
    pred.push_back(nearest_label(d, train_labels));
  }
  return pred;
}

}  // namespace

EvalReport evaluate_classification(const LabeledDataset& ds, Pipeline pipeline,
                                   const EvalOptions& opts) {
  if (ds.size() < 2) throw EmptyInput("evaluate_classification: dataset too small");
  if (ds.class_count() < 2)
    throw ValidationError("evaluate_classification: need at least 2 classes");
  if (opts.splits < 1) throw ValidationError("evaluate_classification: splits >= 1");

  int classes = 0;
  for (int l : ds.labels) {
    if (l < 0) throw ValidationError("labels must be non-negative");
    classes = std::max(classes, l + 1);
  }

  auto t0 = std::chrono::steady_clock::now();
  EvalReport rep;
  rep.method = to_string(pipeline);
  rep.confusion = MatrixXd::Zero(classes, classes);

  for (int s = 0; s < opts.splits; ++s) {
    std::mt19937_64 rng(opts.seed * 0x9E3779B97F4A7C15ULL + 0x51ED2701ULL + s);
    Split sp = make_split(ds, opts.train_fraction, rng);
    int dimension = 0;
    std::vector<int> pred =
        run_pipeline(ds, pipeline, sp, opts, classes, rng(), dimension);
    rep.dimension = dimension;
    int hits = 0;
    for (size_t i = 0; i < sp.test.size(); ++i) {
      int truth = ds.labels[sp.test[i]];
      rep.confusion(truth, pred[i]) += 1.0;
      if (pred[i] == truth) ++hits;
    }
    rep.split_accuracies.push_back(static_cast<double>(hits) / sp.test.size());
  }

  double mean = std::accumulate(rep.split_accuracies.begin(),
                                rep.split_accuracies.end(), 0.0) /
                opts.splits;
  double var = 0.0;
  for (double a : rep.split_accuracies) var += (a - mean) * (a - mean);
  rep.accuracy = mean;
  rep.accuracy_stddev =
      opts.splits > 1 ? std::sqrt(var / (opts.splits - 1)) : 0.0;
  rep.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return rep;
}

ClusterResult kmedoids_cluster(const MatrixXd& dists, int k,
                               std::uint64_t seed) {
  const int N = static_cast<int>(dists.rows());
  if (dists.cols() != N) throw ValidationError("kmedoids: square matrix required");
  if (k < 1 || k > N) throw InvalidK("kmedoids: need 1 <= k <= N");

  std::vector<int> idx(N);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<int> medoids(idx.begin(), idx.begin() + k);
  std::sort(medoids.begin(), medoids.end());

  auto total_cost = [&](const std::vector<int>& meds) {
    double cost = 0.0;
    for (int i = 0; i < N; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int m : meds) best = std::min(best, dists(i, m));
      cost += best;
    }
    return cost;
  };

  ClusterResult res;
  double cost = total_cost(medoids);
  res.objective_trace.push_back(cost);
  for (int round = 0; round < 200; ++round) {
    double best_cost = cost;
    int best_slot = -1, best_cand = -1;
    for (int slot = 0; slot < k; ++slot) {
      for (int cand = 0; cand < N; ++cand) {
        if (std::find(medoids.begin(), medoids.end(), cand) != medoids.end())
          continue;
        std::vector<int> trial = medoids;
        trial[slot] = cand;
        double c = total_cost(trial);
        if (c < best_cost - 1e-12) {
          best_cost = c;
          best_slot = slot;
          best_cand = cand;
        }
      }
    }
    if (best_slot < 0) break;
    medoids[best_slot] = best_cand;
    std::sort(medoids.begin(), medoids.end());
    cost = best_cost;
    res.objective_trace.push_back(cost);
  }

  res.medoids = medoids;
  res.cost = cost;
  res.assignments.resize(N);
  for (int i = 0; i < N; ++i) {
    int best = 0;
    for (int m = 1; m < k; ++m)
      if (dists(i, medoids[m]) < dists(i, medoids[best])) best = m;
    res.assignments[i] = best;
  }
  return res;
}

EigenDecay eigen_decay(const ShootingSet& ss) {
  if (ss.count() < 2) throw ValidationError("eigen_decay: N >= 2 required");
  MatrixXd X = ss.vectors.rowwise() - ss.vectors.colwise().mean();
  MatrixXd G = X * X.transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
  EigenDecay out;
  out.eigenvalues = es.eigenvalues().reverse().cwiseMax(0.0);
  double total = out.eigenvalues.sum();
  out.cumulative.resize(out.eigenvalues.size());
  double acc = 0.0;
  for (int i = 0; i < out.eigenvalues.size(); ++i) {
    acc += out.eigenvalues[i];
    out.cumulative[i] = total > 0.0 ? acc / total : 1.0;
  }
  return out;
}

StabilityResult reference_stability(const std::vector<Trajectory>& trajs,
                                    const Point& c_good, const Point& c_bad,
                                    int iters) {
  if (trajs.size() < 2)
    throw ValidationError("reference_stability: need >= 2 trajectories");
  MeanOptions opts;
  opts.max_iter = iters;
  StabilityResult out;
  MeanResult good = trajectory_mean(trajs, c_good, opts);
  MeanResult bad = trajectory_mean(trajs, c_bad, opts);
  out.good_trace = good.error_trace;
  out.bad_trace = bad.error_trace;
  out.good_converged = good.converged;
  out.bad_converged = bad.converged;
  return out;
}

std::vector<EvalReport> sampling_study(const LabeledDataset& ds,
                                       const std::vector<double>& factors,
                                       Pipeline pipeline,
                                       const EvalOptions& opts) {
  if (ds.size() == 0) throw EmptyInput("sampling_study: empty dataset");
  int T = ds.trajectories.front().length();
  std::vector<EvalReport> out;
  for (double f : factors) {
    if (f < 0.25 || f > 4.0)
      throw ValidationError("sampling_study: factors must lie in [0.25, 4]");
    int new_T = std::max(2, static_cast<int>(std::lround(f * T)));
    LabeledDataset scaled;
    scaled.labels = ds.labels;
    scaled.metadata = ds.metadata;
    for (const auto& traj : ds.trajectories)
      scaled.trajectories.push_back(new_T == T ? traj : resample(traj, new_T));
    EvalReport rep = evaluate_classification(scaled, pipeline, opts);
    rep.factor = f;
    out.push_back(std::move(rep));
  }
  return out;
}

}  // namespace rft
