#ifndef RFT_IO_HPP
#define RFT_IO_HPP

#include "rft/experiments.hpp"
#include "rft/features.hpp"

namespace rft {

inline constexpr int kFormatVersion = 1;

enum class DatasetFormat { Json, SkeletonCsv };

/// Inverse of ManifoldSpec::to_string: "se3:5", "spd:3", "grassmann:2,10",
/// "euclidean:4".
ManifoldSpec manifold_spec_from_string(const std::string& s);

/// Canonical JSON dataset or skeleton CSV (one row per frame: frame index
/// then J x 3 joint coordinates, bone list in a sidecar JSON next to it).
/// Every loaded point must pass validate_point within `strictness`.
LabeledDataset read_dataset(const std::string& path,
                            DatasetFormat format = DatasetFormat::Json,
                            double strictness = 1e-6);
void write_dataset(const LabeledDataset& ds, const std::string& path);

/// foo.csv -> foo.bones.json
std::string bones_sidecar_path(const std::string& csv_path);
SkeletonSequence read_skeleton_csv(const std::string& csv_path,
                                   const std::string& bones_path);

struct ModelProvenance {
  std::uint64_t seed = 0;
  std::string method;
  int dim = 0;
  int sparsity = 0;
  double kappa = 0.0;
};

struct ModelFile {
  Codebook codebook;
  Codes codes;
  ModelProvenance provenance;
};

void save_model(const Codebook& cb, const Codes& codes,
                const ModelProvenance& prov, const std::string& path);
ModelFile load_model(const std::string& path);

void write_codes(const Codes& codes, const std::string& path);
Codes read_codes(const std::string& path);

void write_reference(const Point& p, const std::string& path);
Point read_reference(const std::string& path);

void write_mean_result(const ManifoldSpec& spec, const MeanResult& res,
                       const std::string& path);

/// Timing fields are omitted so reports are byte-deterministic per seed.
void write_report_json(const std::vector<EvalReport>& reports,
                       const std::string& path);

void write_matrix_csv(const MatrixXd& m, const std::string& path);

/// Shortest decimal that parses back to exactly x.
std::string format_double(double x);

/// Write-temp-then-rename; the destination never holds partial content.
void atomic_write(const std::string& path, const std::string& contents);

}  // namespace rft

#endif  // RFT_IO_HPP
