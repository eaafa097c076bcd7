#ifndef RFT_EXPERIMENTS_HPP
#define RFT_EXPERIMENTS_HPP

#include <random>

#include "rft/coding.hpp"

namespace rft {

// Desk-scale evaluation harness: synthetic data, classification and
// clustering runs, eigen-decay reports, and robustness studies.

struct LabeledDataset {
  std::vector<Trajectory> trajectories;
  std::vector<int> labels;
  std::string metadata;

  int size() const { return static_cast<int>(trajectories.size()); }
  int class_count() const;
};

/// k class templates (random smooth trajectories), each instance a warped
/// and tangent-perturbed copy of its template. Deterministic per seed.
LabeledDataset synth_dataset(const ManifoldSpec& spec, int k_classes,
                             int n_per_class, int T, double warp_strength,
                             double noise, std::uint64_t seed);

/// Random smooth trajectory of length T (shared by synth_dataset and the
/// CLI synth command).
Trajectory random_trajectory(const ManifoldSpec& spec, int T, double amplitude,
                             std::mt19937_64& rng);

/// Random diffeomorphism of [0,1] sampled on T nodes.
WarpingFunction random_warp(int T, double strength, std::mt19937_64& rng);

/// Moves every sample along a random tangent direction by a distance drawn
/// uniformly from [0, k_max].
Trajectory perturb_trajectory(const Trajectory& traj, double k_max,
                              std::uint64_t seed);

enum class Pipeline {
  UnwarpedL2,  // 1-NN on the raw sampled trajectories
  TsrvfNN,     // 1-NN under the rate-invariant distance
  TsrvfSVM,    // linear one-vs-rest SVM on aligned shooting rows
  RfPca,
  RfKsvd,
  RfLcksvd,
  Pga,
};

std::string to_string(Pipeline p);
Pipeline pipeline_from_string(const std::string& s);

struct EvalOptions {
  int splits = 5;
  double train_fraction = 0.6;
  std::uint64_t seed = 0;
  int code_dim = 8;   // cap for RF/PGA code length; clamped to the data
  int sparsity = 2;   // KSVD variants
};

struct EvalReport {
  std::string method;
  double accuracy = 0.0;
  double accuracy_stddev = 0.0;
  int dimension = 0;
  MatrixXd confusion;  // class x class counts over all splits
  double seconds = 0.0;
  std::vector<double> split_accuracies;
  double factor = 1.0;  // sampling factor (sampling_study)
};

EvalReport evaluate_classification(const LabeledDataset& ds, Pipeline pipeline,
                                   const EvalOptions& opts = {});

struct ClusterResult {
  std::vector<int> assignments;
  std::vector<int> medoids;
  std::vector<double> objective_trace;
  double cost = 0.0;
};

/// PAM-style k-medoids on a symmetric distance matrix.
ClusterResult kmedoids_cluster(const MatrixXd& dists, int k,
                               std::uint64_t seed);

struct EigenDecay {
  VectorXd eigenvalues;  // descending, non-negative
  VectorXd cumulative;   // cumulative fraction of total variance
};

EigenDecay eigen_decay(const ShootingSet& ss);

struct StabilityResult {
  std::vector<double> good_trace;
  std::vector<double> bad_trace;
  bool good_converged = false;
  bool bad_converged = false;
};

/// trajectory_mean under two reference points; returns both error traces.
StabilityResult reference_stability(const std::vector<Trajectory>& trajs,
                                    const Point& c_good, const Point& c_bad,
                                    int iters);

/// Re-evaluates the pipeline after resampling every trajectory by each
/// factor (factor f maps length T to round(f * T)).
std::vector<EvalReport> sampling_study(const LabeledDataset& ds,
                                       const std::vector<double>& factors,
                                       Pipeline pipeline,
                                       const EvalOptions& opts = {});

/// Linear one-vs-rest SVM trained by dual coordinate descent (C = 1).
/// Rows of X are samples; returns one weight column per class including a
/// trailing bias term.
MatrixXd train_linear_svm(const MatrixXd& X, const std::vector<int>& labels,
                          int classes, double C = 1.0, double tol = 1e-4,
                          int max_epochs = 1000);

}  // namespace rft

#endif  // RFT_EXPERIMENTS_HPP
