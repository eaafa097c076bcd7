#ifndef RFT_CODING_HPP
#define RFT_CODING_HPP

#include "rft/elastic.hpp"

namespace rft {

enum class CodingMethod { PCA, KSVD, LCKSVD };

std::string to_string(CodingMethod m);
CodingMethod coding_method_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Shooting-vector representation of a registered trajectory set.
/// Row i of `vectors` is [v(i,0)^T ... v(i,T-1)^T] where v(i,t) is the
/// tangent at mu(t) pointing to the i-th aligned trajectory, in flat
/// coordinates (so the Euclidean dot product of rows is the field metric).
struct ShootingSet {
  ManifoldSpec spec;
  Point reference;              // TSRVF reference used for alignment
  Trajectory mean;              // mu(t)
  std::vector<Trajectory> aligned;
  MatrixXd vectors;             // N x D, D = T * tangent_size

  int count() const { return static_cast<int>(vectors.rows()); }
  int length() const { return mean.length(); }
  int dim() const { return static_cast<int>(vectors.cols()); }
};

struct Codebook {
  CodingMethod method = CodingMethod::PCA;
  MatrixXd basis;               // D x d; orthonormal for PCA, unit atoms else
  VectorXd center;              // length D; zero for KSVD variants
  int sparsity = 0;             // nonzeros per code column (KSVD variants)
  std::vector<int> label_map;   // per-atom label (LCKSVD only)
  ManifoldSpec spec;
  Point reference;
  Trajectory mean;

  int dim() const { return static_cast<int>(basis.rows()); }
  int code_size() const { return static_cast<int>(basis.cols()); }
  int length() const { return mean.length(); }
};

struct Codes {
  MatrixXd matrix;  // d x N

  int count() const { return static_cast<int>(matrix.cols()); }
};

struct FitOptions {
  CodingMethod method = CodingMethod::PCA;
  int d = 2;
  int sparsity = 1;      // KSVD variants
  double kappa = 1.0;    // label-consistency weight (LCKSVD)
  int max_iter = 50;     // KSVD alternations
  double tol = 1e-6;     // KSVD stopping threshold on error decrease
  std::uint64_t seed = 0;
};

struct FitResult {
  Codebook codebook;
  Codes codes;
  std::vector<double> objective_trace;   // per alternation (KSVD variants)
  VectorXd eigenvalues;                  // descending (PCA)
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Registers the trajectories to their elastic mean and extracts shooting
/// vectors v(i,t) = log_{mu(t)}(aligned_i(t)).
ShootingSet shooting_set(const std::vector<Trajectory>& trajs, const Point& c,
                         double tol = 1e-6, int max_iter = 50,
                         const MeanOptions& mean_opts = {});

/// Learns a basis/dictionary over the shooting rows. `labels` (one per
/// trajectory) are required for LCKSVD and ignored otherwise.
FitResult fit_codebook(const ShootingSet& ss, const FitOptions& opts,
                       const std::vector<int>& labels = {});

/// Aligns traj to the stored mean with one DP pass and codes its shooting
/// row against the fitted basis.
VectorXd encode(const Codebook& cb, const Trajectory& traj);

/// Reconstructs a trajectory from a code by travelling along the decoded
/// tangents from mu(t).
Trajectory decode(const Codebook& cb, const VectorXd& code);

/// Shooting row of a trajectory already expressed against a fitted codebook
/// (align, log, flatten) without the coding step.
VectorXd shooting_row(const Codebook& cb, const Trajectory& traj);
VectorXd shooting_row(const ManifoldSpec& spec, const Trajectory& mean,
                      const Point& reference, const Trajectory& traj);

/// Dense coefficient vector of the best s-sparse approximation of x over the
/// unit-norm dictionary columns of B (orthogonal matching pursuit).
VectorXd omp_encode(const MatrixXd& B, const VectorXd& x, int s);

// ---------------------------------------------------------------------------
// PGA baseline: per-frame tangent PCA without temporal registration.
// ---------------------------------------------------------------------------

struct PgaModel {
  ManifoldSpec spec;
  int d_frame = 0;
  std::vector<Point> frame_means;
  std::vector<MatrixXd> frame_bases;    // tangent_size x d_frame each
  MatrixXd codes;                       // N x (T * d_frame)
};

PgaModel pga_fit(const std::vector<Trajectory>& trajs, int d_frame);

/// Concatenated per-frame code row of a new trajectory.
VectorXd pga_encode(const PgaModel& model, const Trajectory& traj);

/// Per-frame reconstruction from a concatenated PGA code row.
Trajectory pga_decode(const PgaModel& model, const VectorXd& code);

}  // namespace rft

#endif  // RFT_CODING_HPP
