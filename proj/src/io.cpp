#include "rft/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace rft {

using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json parse_json(const std::string& path) {
  try {
    return json::parse(slurp(path));
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

const json& field(const json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end())
    throw ParseError(path + ": missing field \"" + key + "\"");
  return *it;
}

int int_field(const json& j, const char* key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_number_integer())
    throw ParseError(path + ": field \"" + key + "\" must be an integer");
  return v.get<int>();
}

void check_version(const json& j, const std::string& path) {
  int v = int_field(j, "format_version", path);
  if (v != kFormatVersion)
    throw VersionError(path + ": format_version " + std::to_string(v) +
                       ", expected " + std::to_string(kFormatVersion));
}

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd json_to_matrix(const json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + " must be an array of rows");
  int rows = static_cast<int>(j.size());
  int cols = rows == 0 ? 0 : static_cast<int>(j[0].size());
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const json& row = j[i];
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      throw ValidationError(what + ": row " + std::to_string(i) +
                            " has inconsistent width");
    for (int c = 0; c < cols; ++c) {
      if (!row[c].is_number())
        throw ParseError(what + ": non-numeric entry at row " +
                         std::to_string(i));
      m(i, c) = row[c].get<double>();
    }
  }
  return m;
}

json vector_to_json(const VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

VectorXd json_to_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + " must be an array");
  VectorXd v(j.size());
  for (int i = 0; i < static_cast<int>(j.size()); ++i) {
    if (!j[i].is_number())
      throw ParseError(what + ": non-numeric entry at index " +
                       std::to_string(i));
    v(i) = j[i].get<double>();
  }
  return v;
}

void dump_to(const json& j, const std::string& path) {
  atomic_write(path, j.dump() + "\n");
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void atomic_write(const std::string& path, const std::string& contents) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp);
    out << contents;
    out.flush();
    if (!out) throw ValidationError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

ManifoldSpec manifold_spec_from_string(const std::string& s) {
  auto colon = s.find(':');
  if (colon == std::string::npos)
    throw ParseError("manifold \"" + s + "\": expected kind:params");
  std::string kind = s.substr(0, colon);
  std::string args = s.substr(colon + 1);
  auto to_int = [&](const std::string& t) {
    int v = 0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size() || v <= 0)
      throw ParseError("manifold \"" + s + "\": bad parameter \"" + t + "\"");
    return v;
  };
  if (kind == "se3") return ManifoldSpec::se3_product(to_int(args));
  if (kind == "spd") return ManifoldSpec::spd(to_int(args));
  if (kind == "euclidean") return ManifoldSpec::euclidean(to_int(args));
  if (kind == "grassmann") {
    auto comma = args.find(',');
    if (comma == std::string::npos)
      throw ParseError("manifold \"" + s + "\": grassmann needs k,m");
    return ManifoldSpec::grassmann(to_int(args.substr(0, comma)),
                                   to_int(args.substr(comma + 1)));
  }
  throw ParseError("unknown manifold kind \"" + kind + "\"");
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

void write_dataset(const LabeledDataset& ds, const std::string& path) {
  if (ds.trajectories.empty()) throw EmptyInput("dataset has no trajectories");
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "dataset";
  j["manifold"] = ds.trajectories[0].spec.to_string();
  j["N"] = ds.size();
  j["T"] = ds.trajectories[0].length();
  json trajs = json::array();
  for (const auto& t : ds.trajectories) trajs.push_back(matrix_to_json(t.samples));
  j["samples"] = std::move(trajs);
  if (!ds.labels.empty()) j["labels"] = ds.labels;
  if (!ds.metadata.empty()) j["metadata"] = ds.metadata;
  dump_to(j, path);
}

namespace {

LabeledDataset read_dataset_json(const std::string& path, double strictness) {
  json j = parse_json(path);
  if (!j.is_object()) throw ParseError(path + ": top level must be an object");
  check_version(j, path);
  ManifoldSpec spec = manifold_spec_from_string(
      field(j, "manifold", path).get<std::string>());
  int N = int_field(j, "N", path);
  int T = int_field(j, "T", path);
  const json& samples = field(j, "samples", path);
  if (!samples.is_array()) throw ParseError(path + ": samples must be an array");
  if (N == 0 || samples.empty()) throw EmptyInput(path + ": empty trajectory list");
  if (static_cast<int>(samples.size()) != N)
    throw ValidationError(path + ": declared N=" + std::to_string(N) +
                          " but payload has " + std::to_string(samples.size()) +
                          " trajectories");
  LabeledDataset ds;
  std::vector<std::string> bad;
  for (int i = 0; i < N; ++i) {
    MatrixXd m = json_to_matrix(samples[i], path + ": trajectory " +
                                                std::to_string(i));
    if (m.rows() != T || m.cols() != spec.ambient_size())
      throw ValidationError(path + ": trajectory " + std::to_string(i) +
                            " is " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + ", expected " +
                            std::to_string(T) + "x" +
                            std::to_string(spec.ambient_size()));
    Trajectory traj(spec, std::move(m));
    for (int t = 0; t < T; ++t) {
      if (!validate_point(spec, traj.point(t)).ok(strictness) &&
          bad.size() < 10)
        bad.push_back("(" + std::to_string(i) + "," + std::to_string(t) + ")");
    }
    ds.trajectories.push_back(std::move(traj));
  }
  if (!bad.empty()) {
    std::string list;
    for (const auto& b : bad) list += (list.empty() ? "" : " ") + b;
    throw ValidationError(path + ": invalid points at " + list);
  }
  if (j.contains("labels")) {
    const json& labels = j["labels"];
    if (!labels.is_array() || static_cast<int>(labels.size()) != N)
      throw ValidationError(path + ": labels must list one entry per trajectory");
    for (const auto& l : labels) ds.labels.push_back(l.get<int>());
  }
  if (j.contains("metadata")) ds.metadata = j["metadata"].get<std::string>();
  return ds;
}

}  // namespace

std::string bones_sidecar_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension("");
  return p.string() + ".bones.json";
}

SkeletonSequence read_skeleton_csv(const std::string& csv_path,
                                   const std::string& bones_path) {
  std::ifstream in(csv_path);
  if (!in) throw ParseError("cannot open " + csv_path);
  SkeletonSequence seq;
  std::string line;
  int lineno = 0;
  int joints = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw ParseError(csv_path + ": line " + std::to_string(lineno) +
                         ": bad number \"" + cell + "\"");
      vals.push_back(v);
    }
    if (vals.size() < 7 || (vals.size() - 1) % 3 != 0)
      throw ParseError(csv_path + ": line " + std::to_string(lineno) +
                       ": expected frame index plus 3 coordinates per joint");
    int j = static_cast<int>((vals.size() - 1) / 3);
    if (joints == -1) joints = j;
    if (j != joints)
      throw ParseError(csv_path + ": line " + std::to_string(lineno) +
                       ": joint count changed from " + std::to_string(joints) +
                       " to " + std::to_string(j));
    MatrixXd frame(joints, 3);
    for (int q = 0; q < joints; ++q)
      for (int c = 0; c < 3; ++c) frame(q, c) = vals[1 + 3 * q + c];
    seq.frames.push_back(std::move(frame));
  }
  if (seq.frames.empty()) throw EmptyInput(csv_path + ": no frames");

  json jb = parse_json(bones_path);
  const json& bones = field(jb, "bones", bones_path);
  if (!bones.is_array()) throw ParseError(bones_path + ": bones must be an array");
  for (const auto& b : bones) {
    if (!b.is_array() || b.size() != 2)
      throw ParseError(bones_path + ": each bone must be a [parent, child] pair");
    seq.bones.emplace_back(b[0].get<int>(), b[1].get<int>());
  }
  return seq;
}

LabeledDataset read_dataset(const std::string& path, DatasetFormat format,
                            double strictness) {
  if (format == DatasetFormat::Json) return read_dataset_json(path, strictness);
  SkeletonSequence seq = read_skeleton_csv(path, bones_sidecar_path(path));
  validate_skeleton(seq);
  LabeledDataset ds;
  ds.trajectories.push_back(larp_from_skeleton(seq));
  ds.labels.push_back(0);
  ds.metadata = "skeleton joints=" + std::to_string(seq.joint_count()) +
                " frames=" + std::to_string(seq.frame_count());
  (void)strictness;
  return ds;
}

// ---------------------------------------------------------------------------
// Models, codes, references
// ---------------------------------------------------------------------------

void save_model(const Codebook& cb, const Codes& codes,
                const ModelProvenance& prov, const std::string& path) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "model";
  j["manifold"] = cb.spec.to_string();
  j["method"] = to_string(cb.method);
  j["basis"] = matrix_to_json(cb.basis);
  j["center"] = vector_to_json(cb.center);
  j["sparsity"] = cb.sparsity;
  j["label_map"] = cb.label_map;
  j["reference"] = vector_to_json(cb.reference.data);
  j["mean"] = matrix_to_json(cb.mean.samples);
  j["codes"] = matrix_to_json(codes.matrix);
  j["provenance"] = {{"dim", prov.dim},
                     {"kappa", prov.kappa},
                     {"method", prov.method},
                     {"seed", prov.seed},
                     {"sparsity", prov.sparsity}};
  dump_to(j, path);
}

ModelFile load_model(const std::string& path) {
  json j = parse_json(path);
  if (!j.is_object() || field(j, "kind", path) != "model")
    throw ParseError(path + ": not a model file");
  check_version(j, path);
  ModelFile m;
  Codebook& cb = m.codebook;
  cb.spec = manifold_spec_from_string(field(j, "manifold", path).get<std::string>());
  cb.method = coding_method_from_string(field(j, "method", path).get<std::string>());
  cb.basis = json_to_matrix(field(j, "basis", path), path + ": basis");
  cb.center = json_to_vector(field(j, "center", path), path + ": center");
  cb.sparsity = int_field(j, "sparsity", path);
  for (const auto& l : field(j, "label_map", path))
    cb.label_map.push_back(l.get<int>());
  cb.reference = Point(cb.spec, json_to_vector(field(j, "reference", path),
                                               path + ": reference"));
  cb.mean = Trajectory(cb.spec,
                       json_to_matrix(field(j, "mean", path), path + ": mean"));
  m.codes.matrix = json_to_matrix(field(j, "codes", path), path + ": codes");
  const json& p = field(j, "provenance", path);
  m.provenance.seed = field(p, "seed", path).get<std::uint64_t>();
  m.provenance.method = field(p, "method", path).get<std::string>();
  m.provenance.dim = int_field(p, "dim", path);
  m.provenance.sparsity = int_field(p, "sparsity", path);
  m.provenance.kappa = field(p, "kappa", path).get<double>();
  if (cb.mean.samples.cols() != cb.spec.ambient_size() ||
      cb.basis.rows() != cb.mean.length() * cb.spec.tangent_size())
    throw ValidationError(path + ": basis/mean sizes disagree with the manifold");
  return m;
}

void write_codes(const Codes& codes, const std::string& path) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "codes";
  j["matrix"] = matrix_to_json(codes.matrix);
  dump_to(j, path);
}

Codes read_codes(const std::string& path) {
  json j = parse_json(path);
  if (!j.is_object() || field(j, "kind", path) != "codes")
    throw ParseError(path + ": not a codes file");
  check_version(j, path);
  Codes c;
  c.matrix = json_to_matrix(field(j, "matrix", path), path + ": matrix");
  return c;
}

void write_reference(const Point& p, const std::string& path) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "reference";
  j["manifold"] = p.spec.to_string();
  j["point"] = vector_to_json(p.data);
  dump_to(j, path);
}

Point read_reference(const std::string& path) {
  json j = parse_json(path);
  if (!j.is_object() || field(j, "kind", path) != "reference")
    throw ParseError(path + ": not a reference file");
  check_version(j, path);
  ManifoldSpec spec =
      manifold_spec_from_string(field(j, "manifold", path).get<std::string>());
  Point p(spec, json_to_vector(field(j, "point", path), path + ": point"));
  if (p.data.size() != spec.ambient_size())
    throw ValidationError(path + ": point size disagrees with the manifold");
  if (!validate_point(spec, p).ok(1e-6))
    throw ValidationError(path + ": point fails manifold invariants");
  return p;
}

void write_mean_result(const ManifoldSpec& spec, const MeanResult& res,
                       const std::string& path) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "mean-result";
  j["manifold"] = spec.to_string();
  j["mean"] = matrix_to_json(res.mean.samples);
  json aligned = json::array();
  for (const auto& t : res.aligned) aligned.push_back(matrix_to_json(t.samples));
  j["aligned"] = std::move(aligned);
  json warps = json::array();
  for (const auto& w : res.warps) warps.push_back(vector_to_json(w.values));
  j["warps"] = std::move(warps);
  j["error_trace"] = res.error_trace;
  j["converged"] = res.converged;
  j["iterations"] = res.iterations;
  dump_to(j, path);
}

void write_report_json(const std::vector<EvalReport>& reports,
                       const std::string& path) {
  json all = json::array();
  for (const auto& r : reports) {
    json j;
    j["method"] = r.method;
    j["accuracy"] = r.accuracy;
    j["accuracy_stddev"] = r.accuracy_stddev;
    j["dimension"] = r.dimension;
    j["factor"] = r.factor;
    j["confusion"] = matrix_to_json(r.confusion);
    j["split_accuracies"] = r.split_accuracies;
    all.push_back(std::move(j));
  }
  json top;
  top["format_version"] = kFormatVersion;
  top["kind"] = "report";
  top["reports"] = std::move(all);
  dump_to(top, path);
}

void write_matrix_csv(const MatrixXd& m, const std::string& path) {
  std::string out;
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  atomic_write(path, out);
}

}  // namespace rft
