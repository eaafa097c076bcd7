#include <Eigen/Core>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rft/io.hpp"

namespace {

using namespace rft;

double unwarped_l2(const Trajectory& a, const Trajectory& b) {
  int T = a.length();
  double acc = 0.0;
  for (int t = 0; t < T; ++t) {
    double d = geodesic_distance(a.spec, a.point(t), b.point(t));
    double w = (t == 0 || t == T - 1) ? 0.5 : 1.0;
    acc += w * d * d / (T - 1);
  }
  return std::sqrt(acc);
}

double dataset_diameter(const ManifoldSpec& spec,
                        const std::vector<Trajectory>& trajs) {
  double diam = 0.0;
  for (size_t i = 0; i < trajs.size(); ++i)
    for (size_t j = i + 1; j < trajs.size(); ++j)
      for (int t = 0; t < trajs[i].length(); ++t)
        diam = std::max(diam, geodesic_distance(spec, trajs[i].point(t),
                                                trajs[j].point(t)));
  return diam;
}

std::string trace_csv(const std::vector<double>& good,
                      const std::vector<double>& bad) {
  std::string out = "iteration,good_error,bad_error\n";
  size_t rows = std::max(good.size(), bad.size());
  for (size_t i = 0; i < rows; ++i) {
    out += std::to_string(i);
    out += ',';
    if (i < good.size()) out += format_double(good[i]);
    out += ',';
    if (i < bad.size()) out += format_double(bad[i]);
    out += '\n';
  }
  return out;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const VersionError*>(&e))
    return 4;
  if (dynamic_cast<const NumericalError*>(&e) ||
      dynamic_cast<const RankError*>(&e) ||
      dynamic_cast<const CutLocusError*>(&e) ||
      dynamic_cast<const DegenerateData*>(&e) ||
      dynamic_cast<const SingularCovariance*>(&e) ||
      dynamic_cast<const NotInvertible*>(&e) ||
      dynamic_cast<const DegenerateBone*>(&e) ||
      dynamic_cast<const DegenerateShape*>(&e) ||
      dynamic_cast<const InvalidTangent*>(&e))
    return 3;
  if (dynamic_cast<const Error*>(&e)) return 2;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elastic trajectory analysis on Riemannian manifolds"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = library default)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  std::string sy_manifold = "euclidean:3", sy_out;
  int sy_classes = 2, sy_per = 5, sy_T = 40;
  double sy_warp = 1.0, sy_noise = 0.01;
  std::uint64_t sy_seed = 0;
  synth->add_option("--manifold", sy_manifold);
  synth->add_option("--classes", sy_classes);
  synth->add_option("--per-class", sy_per);
  synth->add_option("--samples", sy_T);
  synth->add_option("--warp", sy_warp);
  synth->add_option("--noise", sy_noise);
  synth->add_option("--seed", sy_seed);
  synth->add_option("--out", sy_out)->required();

  // dist
  auto* dist = app.add_subcommand("dist", "Pairwise distance matrix");
  std::string di_in, di_metric = "ds", di_out;
  dist->add_option("--in", di_in)->required();
  dist->add_option("--metric", di_metric)
      ->check(CLI::IsMember({"ds", "tsrvf", "unwarped"}));
  dist->add_option("--out", di_out)->required();

  // align
  auto* align = app.add_subcommand("align", "Register all trajectories to their mean");
  std::string al_in, al_ref = "default", al_out;
  align->add_option("--in", al_in)->required();
  align->add_option("--ref", al_ref);
  align->add_option("--out", al_out)->required();

  // encode
  auto* encode_cmd = app.add_subcommand("encode", "Fit a codebook and code the dataset");
  std::string en_in, en_method = "pca", en_model, en_codes;
  int en_dim = 8, en_sparsity = 2;
  double en_kappa = 1.0;
  std::uint64_t en_seed = 0;
  encode_cmd->add_option("--in", en_in)->required();
  encode_cmd->add_option("--method", en_method)
      ->check(CLI::IsMember({"pca", "ksvd", "lcksvd"}));
  encode_cmd->add_option("--dim", en_dim);
  encode_cmd->add_option("--sparsity", en_sparsity);
  encode_cmd->add_option("--kappa", en_kappa);
  encode_cmd->add_option("--seed", en_seed);
  encode_cmd->add_option("--model", en_model)->required();
  encode_cmd->add_option("--codes", en_codes)->required();

  // decode
  auto* decode_cmd = app.add_subcommand("decode", "Reconstruct trajectories from codes");
  std::string de_model, de_codes, de_out;
  decode_cmd->add_option("--model", de_model)->required();
  decode_cmd->add_option("--codes", de_codes)->required();
  decode_cmd->add_option("--out", de_out)->required();

  // classify
  auto* classify = app.add_subcommand("classify", "Cross-validated classification");
  std::string cl_in, cl_pipeline = "tsrvf-nn", cl_report;
  int cl_dim = 8, cl_splits = 5, cl_sparsity = 2;
  std::uint64_t cl_seed = 0;
  classify->add_option("--in", cl_in)->required();
  classify->add_option("--pipeline", cl_pipeline);
  classify->add_option("--dim", cl_dim);
  classify->add_option("--splits", cl_splits);
  classify->add_option("--sparsity", cl_sparsity);
  classify->add_option("--seed", cl_seed);
  classify->add_option("--report", cl_report)->required();

  // cluster
  auto* cluster = app.add_subcommand("cluster", "K-medoids in code space");
  std::string cu_codes, cu_report;
  int cu_k = 2;
  std::uint64_t cu_seed = 0;
  cluster->add_option("--codes", cu_codes)->required();
  cluster->add_option("--k", cu_k);
  cluster->add_option("--seed", cu_seed);
  cluster->add_option("--report", cu_report)->required();

  // eigendecay
  auto* eigendecay = app.add_subcommand("eigendecay", "Shooting-space spectrum");
  std::string ei_in, ei_out;
  eigendecay->add_option("--in", ei_in)->required();
  eigendecay->add_option("--out", ei_out)->required();

  // perturb
  auto* perturb = app.add_subcommand("perturb", "Random pointwise perturbation");
  std::string pe_in, pe_out;
  double pe_kmax = 0.1;
  std::uint64_t pe_seed = 0;
  perturb->add_option("--in", pe_in)->required();
  perturb->add_option("--kmax", pe_kmax);
  perturb->add_option("--seed", pe_seed);
  perturb->add_option("--out", pe_out)->required();

  // stability
  auto* stability = app.add_subcommand("stability", "Mean convergence vs reference choice");
  std::string st_in, st_out;
  bool st_bad = false;
  int st_iters = 80;
  std::uint64_t st_seed = 0;
  stability->add_option("--in", st_in)->required();
  stability->add_flag("--bad-ref", st_bad,
                      "Also run a far-away adversarial reference");
  stability->add_option("--iters", st_iters);
  stability->add_option("--seed", st_seed);
  stability->add_option("--out", st_out)->required();

  // sampling
  auto* sampling = app.add_subcommand("sampling", "Accuracy across resampling factors");
  std::string sa_in, sa_pipeline = "tsrvf-nn", sa_report;
  std::vector<double> sa_factors = {0.5, 1.0, 2.0};
  int sa_dim = 8, sa_splits = 5;
  std::uint64_t sa_seed = 0;
  sampling->add_option("--in", sa_in)->required();
  sampling->add_option("--factors", sa_factors)->delimiter(',');
  sampling->add_option("--pipeline", sa_pipeline);
  sampling->add_option("--dim", sa_dim);
  sampling->add_option("--splits", sa_splits);
  sampling->add_option("--seed", sa_seed);
  sampling->add_option("--report", sa_report)->required();

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) Eigen::setNbThreads(threads);

  try {
    if (*synth) {
      auto spec = manifold_spec_from_string(sy_manifold);
      auto ds = synth_dataset(spec, sy_classes, sy_per, sy_T, sy_warp,
                              sy_noise, sy_seed);
      write_dataset(ds, sy_out);
    } else if (*dist) {
      auto ds = read_dataset(di_in);
      int N = ds.size();
      Point c = default_reference(ds.trajectories[0].spec, ds.trajectories);
      std::vector<Tsrvf> fields;
      if (di_metric == "tsrvf")
        for (const auto& t : ds.trajectories)
          fields.push_back(compute_tsrvf(t, c));
      MatrixXd m = MatrixXd::Zero(N, N);
      for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j) {
          double d = 0.0;
          if (di_metric == "ds")
            d = rate_invariant_distance(ds.trajectories[i], ds.trajectories[j], c);
          else if (di_metric == "tsrvf")
            d = tsrvf_distance(fields[i], fields[j]);
          else
            d = unwarped_l2(ds.trajectories[i], ds.trajectories[j]);
          m(i, j) = m(j, i) = d;
        }
      write_matrix_csv(m, di_out);
    } else if (*align) {
      auto ds = read_dataset(al_in);
      const auto& spec = ds.trajectories[0].spec;
      Point c = al_ref == "default" ? default_reference(spec, ds.trajectories)
                                    : read_reference(al_ref);
      auto res = trajectory_mean(ds.trajectories, c);
      write_mean_result(spec, res, al_out);
    } else if (*encode_cmd) {
      auto ds = read_dataset(en_in);
      const auto& spec = ds.trajectories[0].spec;
      Point c = default_reference(spec, ds.trajectories);
      auto ss = shooting_set(ds.trajectories, c);
      FitOptions opts;
      opts.method = coding_method_from_string(en_method);
      opts.d = en_dim;
      opts.sparsity = en_sparsity;
      opts.kappa = en_kappa;
      opts.seed = en_seed;
      auto fit = fit_codebook(ss, opts, ds.labels);
      ModelProvenance prov{en_seed, en_method, en_dim, en_sparsity, en_kappa};
      save_model(fit.codebook, fit.codes, prov, en_model);
      write_codes(fit.codes, en_codes);
    } else if (*decode_cmd) {
      auto model = load_model(de_model);
      auto codes = read_codes(de_codes);
      if (codes.matrix.rows() != model.codebook.code_size())
        throw ValidationError("code length disagrees with the model basis");
      LabeledDataset out;
      for (int i = 0; i < codes.count(); ++i)
        out.trajectories.push_back(
            decode(model.codebook, codes.matrix.col(i)));
      write_dataset(out, de_out);
    } else if (*classify) {
      auto ds = read_dataset(cl_in);
      EvalOptions opts;
      opts.splits = cl_splits;
      opts.seed = cl_seed;
      opts.code_dim = cl_dim;
      opts.sparsity = cl_sparsity;
      auto report =
          evaluate_classification(ds, pipeline_from_string(cl_pipeline), opts);
      write_report_json({report}, cl_report);
    } else if (*cluster) {
      auto codes = read_codes(cu_codes);
      int N = codes.count();
      MatrixXd d = MatrixXd::Zero(N, N);
      for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j)
          d(i, j) = d(j, i) =
              (codes.matrix.col(i) - codes.matrix.col(j)).norm();
      auto res = kmedoids_cluster(d, cu_k, cu_seed);
      nlohmann::json j;
      j["format_version"] = kFormatVersion;
      j["kind"] = "cluster-report";
      j["assignments"] = res.assignments;
      j["medoids"] = res.medoids;
      j["objective_trace"] = res.objective_trace;
      j["cost"] = res.cost;
      atomic_write(cu_report, j.dump() + "\n");
    } else if (*eigendecay) {
      auto ds = read_dataset(ei_in);
      Point c = default_reference(ds.trajectories[0].spec, ds.trajectories);
      auto decay = eigen_decay(shooting_set(ds.trajectories, c));
      std::string out = "index,eigenvalue,cumulative\n";
      for (int i = 0; i < decay.eigenvalues.size(); ++i)
        out += std::to_string(i) + "," + format_double(decay.eigenvalues(i)) +
               "," + format_double(decay.cumulative(i)) + "\n";
      atomic_write(ei_out, out);
    } else if (*perturb) {
      auto ds = read_dataset(pe_in);
      for (int i = 0; i < ds.size(); ++i)
        ds.trajectories[i] =
            perturb_trajectory(ds.trajectories[i], pe_kmax, pe_seed + i);
      write_dataset(ds, pe_out);
    } else if (*stability) {
      auto ds = read_dataset(st_in);
      const auto& spec = ds.trajectories[0].spec;
      Point c_good = default_reference(spec, ds.trajectories);
      Point c_bad = c_good;
      if (st_bad) {
        double diam = dataset_diameter(spec, ds.trajectories);
        Point start = ds.trajectories[0].point(0);
        c_bad = exp_map(spec, start,
                        random_tangent(spec, start, 5.0 * diam, st_seed));
      }
      auto res = reference_stability(ds.trajectories, c_good, c_bad, st_iters);
      atomic_write(st_out, trace_csv(res.good_trace, res.bad_trace));
    } else if (*sampling) {
      auto ds = read_dataset(sa_in);
      EvalOptions opts;
      opts.splits = sa_splits;
      opts.seed = sa_seed;
      opts.code_dim = sa_dim;
      auto reports = sampling_study(ds, sa_factors,
                                    pipeline_from_string(sa_pipeline), opts);
      write_report_json(reports, sa_report);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
