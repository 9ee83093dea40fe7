#include <CLI11.hpp>

#include <cecm/block_io.hpp>
#include <cecm/pipeline.hpp>
#include <cecm/rule_io.hpp>
#include <cecm/srsvd.hpp>
#include <cecm/svd.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "bench_suites.hpp"
#include "cli_common.hpp"

namespace cecm::cli {

namespace fs = std::filesystem;

std::vector<std::pair<double, double>> parse_box(const std::string& spec) {
  std::vector<std::pair<double, double>> box;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const std::size_t comma = spec.find(',', pos);
    const std::string part = spec.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    const std::size_t dots = part.find("..");
    if (dots == std::string::npos)
      throw InputError("bad box range \"" + part + "\", expected lo..hi");
    try {
      box.emplace_back(std::stod(part.substr(0, dots)),
                       std::stod(part.substr(dots + 2)));
    } catch (const std::exception&) {
      throw InputError("bad box range \"" + part + "\"");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (box.empty() || box.size() > 3)
    throw InputError("box must list 1 to 3 ranges");
  return box;
}

std::vector<int> parse_divisions(const std::string& spec) {
  std::vector<int> divs;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const std::size_t comma = spec.find(',', pos);
    const std::string part = spec.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      divs.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw InputError("bad division count \"" + part + "\"");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (divs.empty() || divs.size() > 3)
    throw InputError("divisions must list 1 to 3 counts");
  return divs;
}

namespace {

ElementKind default_kind(int dim) {
  switch (dim) {
    case 1:
      return ElementKind::LineLinear;
    case 2:
      return ElementKind::QuadBilinear;
    default:
      return ElementKind::HexTrilinear;
  }
}

// Benchmark meshes of the registry families.
Mesh registry_default_mesh(const SnapshotOptions& snaps) {
  if (snaps.function_name == "lagrange1d")
    return make_structured_mesh({{-1.0, 1.0}}, {200}, ElementKind::LineLinear,
                                4);
  if (snaps.function_name == "lagrange2d")
    return make_structured_mesh({{-1.0, 1.0}, {-1.0, 1.0}}, {20, 20},
                                ElementKind::QuadBilinear, 2);
  if (snaps.function_name == "lagrange3d")
    return make_structured_mesh({{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}},
                                {20, 20, 20}, ElementKind::HexTrilinear, 2);
  if (snaps.function_name == "expsin3d") {
    const int n = snaps.full_scale ? 30 : 10;
    return make_structured_mesh({{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}},
                                {n, n, n}, ElementKind::HexTrilinear, 3);
  }
  throw InputError("no default mesh for function \"" + snaps.function_name +
                   "\"; pass --mesh or --box/--divisions");
}

}  // namespace

Mesh resolve_mesh(const MeshOptions& mesh_opts, const SnapshotOptions& snaps) {
  if (!mesh_opts.mesh_file.empty()) {
    Mesh mesh = load_mesh_json(mesh_opts.mesh_file);
    if (mesh_opts.gauss_per_dir > 0) {
      mesh.gauss_per_dir = mesh_opts.gauss_per_dir;
      finalize_mesh(mesh);
    }
    return mesh;
  }
  if (!mesh_opts.box_spec.empty()) {
    const auto box = parse_box(mesh_opts.box_spec);
    const auto divs = parse_divisions(mesh_opts.divisions_spec);
    if (box.size() != divs.size())
      throw InputError("box and divisions arity mismatch");
    const ElementKind kind =
        mesh_opts.kind_name.empty()
            ? default_kind(static_cast<int>(box.size()))
            : element_kind_from_name(mesh_opts.kind_name);
    const int q = mesh_opts.gauss_per_dir > 0 ? mesh_opts.gauss_per_dir : 2;
    return make_structured_mesh(box, divs, kind, q);
  }
  if (!snaps.function_name.empty()) return registry_default_mesh(snaps);
  throw InputError("no mesh given: pass --mesh or --box/--divisions");
}

PreparedInputs prepare_inputs(const MeshOptions& mesh_opts,
                              const SnapshotOptions& snaps, Index block_cols) {
  if (snaps.function_name.empty() == snaps.snapshot_file.empty())
    throw InputError(
        "exactly one snapshot source required: --function or --snapshots");

  PreparedInputs out;
  out.mesh = resolve_mesh(mesh_opts, snaps);
  out.field = gauss_field(out.mesh);
  out.snapshots.weights = out.field.weights;
  if (!snaps.weights_file.empty()) {
    // Externally supplied W_FE (snapshots generated elsewhere); the mesh
    // still provides the geometry for location and interpolation.
    Vector w = read_weights_file(snaps.weights_file);
    if (w.size() != out.field.size())
      throw InputError("weights file has " + std::to_string(w.size()) +
                       " entries, mesh has " +
                       std::to_string(out.field.size()) + " Gauss points");
    if ((w.array() <= 0.0).any())
      throw InputError("weights file must be strictly positive");
    out.snapshots.weights = std::move(w);
  }

  if (!snaps.function_name.empty()) {
    out.integrand =
        make_registry_function(snaps.function_name, snaps.degree, snaps.grid);
    if (out.integrand->dim != out.mesh.dim)
      throw InputError("function \"" + snaps.function_name +
                       "\" has dimension " +
                       std::to_string(out.integrand->dim) +
                       " but the mesh is " + std::to_string(out.mesh.dim) +
                       "D");
    if (block_cols > 0)
      out.snapshots.data = std::make_shared<SampledBlockSource>(
          *out.integrand, out.field.points, block_cols);
    else
      out.snapshots.data = std::make_shared<DenseBlockSource>(
          sample_integrand(*out.integrand, out.field.points));
  } else {
    const fs::path path = snaps.snapshot_file;
    std::shared_ptr<const BlockSource> source;
    if (path.extension() == ".json")
      source = std::make_shared<FileBlockSource>(path);
    else
      source = std::make_shared<DenseBlockSource>(read_block_file(path));
    if (source->rows() != out.field.size())
      throw InputError("snapshot rows (" + std::to_string(source->rows()) +
                       ") do not match the mesh Gauss count (" +
                       std::to_string(out.field.size()) + ")");
    out.snapshots.data = std::move(source);
  }
  return out;
}

double default_eps_svd(const SnapshotOptions& snaps) {
  if (!snaps.function_name.empty() &&
      snaps.function_name.rfind("lagrange", 0) == 0)
    return 0.0;  // exact-integration benchmark mode
  return 1e-6;
}

namespace {

void write_report_json(const fs::path& path, const PipelineStats& s) {
  nlohmann::json j;
  j["gauss_points"] = s.gauss_points;
  j["snapshot_columns"] = s.snapshot_columns;
  j["basis_functions"] = s.basis_functions;
  j["decm_points"] = s.decm_points;
  j["cecm_points"] = s.cecm_points;
  j["decm_residual"] = s.decm_residual;
  j["cecm_residual"] = s.cecm_residual;
  j["full_matrix_error_decm"] = s.full_error_decm;
  j["full_matrix_error_cecm"] = s.full_error_cecm;
  j["sum_weights_fe"] = s.sum_weights_fe;
  j["sum_weights_rule"] = s.sum_weights_rule;
  j["seconds"] = {{"svd", s.seconds_svd},
                  {"decm", s.seconds_decm},
                  {"cecm", s.seconds_cecm}};
  std::ofstream os(path, std::ios::trunc);
  os << j.dump(2) << "\n";
}

struct CommonOpts {
  std::uint64_t seed = 0;
  double eps_svd = -1.0;  // <0 = per-source default
  std::string out_dir = ".";
  int threads = 0;
  MeshOptions mesh;
  SnapshotOptions snaps;
  SolverParams solver;
  std::string svd_method = "auto";
  std::string backend;  // empty = by source
  std::string constant_route = "basis";
  bool global_search = false;
};

SvdMethod parse_svd_method(const std::string& name) {
  if (name == "auto") return SvdMethod::Auto;
  if (name == "dense") return SvdMethod::Dense;
  if (name == "randomized") return SvdMethod::Randomized;
  if (name == "sequential") return SvdMethod::Sequential;
  throw InputError("unknown svd method \"" + name + "\"");
}

int run_rule_cmd(const CommonOpts& opts, bool cecm_stage) {
  // The sequential path streams registry snapshots in column blocks so the
  // full matrix never has to be assembled.
  const Index block_cols = (opts.svd_method == "sequential") ? 96 : 0;
  const PreparedInputs inputs =
      prepare_inputs(opts.mesh, opts.snaps, block_cols);

  RuleConfig config;
  config.eps_svd =
      opts.eps_svd >= 0.0 ? opts.eps_svd : default_eps_svd(opts.snaps);
  config.svd_method = parse_svd_method(opts.svd_method);
  config.solver = opts.solver;
  config.seed = opts.seed;
  config.run_cecm = cecm_stage;
  if (opts.constant_route == "basis")
    config.constant_route = ConstantRoute::Basis;
  else if (opts.constant_route == "column")
    config.constant_route = ConstantRoute::Column;
  else
    throw InputError("unknown augmentation route \"" + opts.constant_route +
                     "\"");
  config.global_search = opts.global_search;
  if (opts.backend.empty())
    config.backend = inputs.integrand ? EvalBackend::Analytic
                                      : EvalBackend::Interpolatory;
  else if (opts.backend == "analytic")
    config.backend = EvalBackend::Analytic;
  else if (opts.backend == "interp")
    config.backend = EvalBackend::Interpolatory;
  else
    throw InputError("unknown backend \"" + opts.backend + "\"");

  const RulePipelineResult res = run_rule_pipeline(
      inputs.mesh, inputs.field, inputs.snapshots, inputs.integrand, config);

  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);
  save_rule_json(out / "rule.json", to_rule_file(res.rule, inputs.mesh.dim));
  if (cecm_stage) {
    // The discrete starting rule is kept alongside for comparison.
    save_rule_json(out / "decm_rule.json",
                   to_rule_file(rule_from_decm(res.discrete, inputs.field),
                                inputs.mesh.dim));
  }
  write_report_json(out / "report.json", res.stats);

  std::printf("gauss points     %lld\n",
              static_cast<long long>(res.stats.gauss_points));
  std::printf("basis functions  %lld\n",
              static_cast<long long>(res.stats.basis_functions));
  std::printf("decm points      %lld (residual %.3e)\n",
              static_cast<long long>(res.stats.decm_points),
              res.stats.decm_residual);
  if (cecm_stage)
    std::printf("cecm points      %lld (residual %.3e)\n",
                static_cast<long long>(res.stats.cecm_points),
                res.stats.cecm_residual);
  std::printf("full-matrix error: decm %.3e, cecm %.3e\n",
              res.stats.full_error_decm, res.stats.full_error_cecm);
  std::printf("sum of weights   %.15g (FE %.15g)\n",
              res.stats.sum_weights_rule, res.stats.sum_weights_fe);
  std::printf("rule written to  %s\n", (out / "rule.json").c_str());

  if (cecm_stage && res.rule.eliminations.empty()) {
    std::fprintf(stderr,
                 "sparsification made no progress; the discrete rule was "
                 "returned unchanged\n");
    return kExitInfeasible;
  }
  return kExitOk;
}

int run_svd_cmd(const std::string& manifest, double eps, bool check_dense,
                const std::string& out_dir, std::uint64_t seed) {
  const FileBlockSource blocks{fs::path(manifest)};

  const auto t0 = std::chrono::steady_clock::now();
  const SrsvdResult res = srsvd(blocks, eps, seed);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  write_block_file(out / "svd_u.cubb", res.factors.left);
  write_weights_file(out / "svd_s.cubw", res.factors.singular);
  write_block_file(out / "svd_v.cubb", res.factors.right);

  nlohmann::json report;
  report["rank"] = res.factors.rank;
  report["rows"] = blocks.rows();
  report["cols"] = blocks.total_cols();
  report["seconds"] = seconds;
  double iters_avg = 0.0;
  auto per_block = nlohmann::json::array();
  for (const BlockStats& s : res.stats) {
    per_block.push_back(
        {{"added_cols", s.added_cols}, {"rorth_iters", s.rorth_iters}});
    iters_avg += s.rorth_iters;
  }
  iters_avg /= static_cast<double>(res.stats.size());
  report["blocks"] = std::move(per_block);
  report["rorth_iters_avg"] = iters_avg;

  std::printf("srsvd: rank %lld of %lldx%lld in %.2fs (avg %.2f range-finder "
              "passes/block)\n",
              static_cast<long long>(res.factors.rank),
              static_cast<long long>(blocks.rows()),
              static_cast<long long>(blocks.total_cols()), seconds, iters_avg);

  if (check_dense) {
    Matrix dense(blocks.rows(), blocks.total_cols());
    Index col = 0;
    for (int i = 0; i < blocks.block_count(); ++i) {
      const Matrix b = blocks.load(i);
      dense.middleCols(col, b.cols()) = b;
      col += b.cols();
    }
    const SvdFactors ref = svd_truncated(dense, eps * dense.norm());
    report["dense_rank"] = ref.rank;
    double diff = std::numeric_limits<double>::quiet_NaN();
    if (ref.rank == res.factors.rank && ref.rank > 0)
      diff = (ref.singular - res.factors.singular).norm() /
             ref.singular.norm();
    report["singular_rel_diff"] = diff;
    std::printf("dense check: rank %lld, singular value rel diff %.3e\n",
                static_cast<long long>(ref.rank), diff);
  }

  std::ofstream os(out / "svd_report.json", std::ios::trunc);
  os << report.dump(2) << "\n";
  return kExitOk;
}

int run_verify_cmd(const std::string& rule_path, const CommonOpts& opts) {
  const RuleFile rule = load_rule_json(rule_path);
  const PreparedInputs inputs = prepare_inputs(opts.mesh, opts.snaps);
  if (rule.dim != inputs.mesh.dim)
    throw InputError("rule dimension " + std::to_string(rule.dim) +
                     " does not match the mesh dimension " +
                     std::to_string(inputs.mesh.dim));

  const Vector b_fe = full_integrals(*inputs.snapshots.data,
                                     inputs.snapshots.weights);

  Vector quad = Vector::Zero(b_fe.size());
  if (inputs.integrand) {
    for (Index i = 0; i < rule.points.rows(); ++i)
      quad += rule.weights(i) *
              inputs.integrand->value(rule.points.row(i).transpose())
                  .transpose();
  } else {
    // Reconstruction through the basis of the same snapshots.
    const double eps =
        opts.eps_svd >= 0.0 ? opts.eps_svd : default_eps_svd(opts.snaps);
    BasisModel model = augment_constant(
        compute_basis(inputs.snapshots, eps, SvdMethod::Auto, opts.seed));
    const InterpEvaluator eval(model, inputs.mesh, inputs.field);
    Vector u_quad = Vector::Zero(model.size());
    for (Index i = 0; i < rule.points.rows(); ++i) {
      const auto ev = eval(rule.points.row(i).transpose(), std::nullopt, 0.0);
      if (!ev)
        throw InputError("rule point " + std::to_string(i) +
                         " lies outside the mesh domain");
      u_quad += rule.weights(i) * ev->u.transpose();
    }
    const Index off = model.augmented ? 1 : 0;
    quad = model.v * model.singular.asDiagonal() *
           u_quad.segment(off, model.svd_size());
  }

  const double rel =
      b_fe.norm() > 0.0 ? (quad - b_fe).norm() / b_fe.norm() : quad.norm();
  const double sum_w = rule.weights.sum();
  const double sum_fe = inputs.snapshots.weights.sum();
  std::printf("quadrature error |A^T w - b_FE| / |b_FE| = %.6e\n", rel);
  std::printf("sum of weights: rule %.15g vs FE %.15g (rel diff %.3e)\n",
              sum_w, sum_fe, std::abs(sum_w - sum_fe) / sum_fe);
  return kExitOk;
}

int run_meshgen_cmd(const MeshOptions& mesh_opts, const std::string& output) {
  const auto box = parse_box(mesh_opts.box_spec);
  const auto divs = parse_divisions(mesh_opts.divisions_spec);
  if (box.size() != divs.size())
    throw InputError("box and divisions arity mismatch");
  const ElementKind kind = mesh_opts.kind_name.empty()
                               ? default_kind(static_cast<int>(box.size()))
                               : element_kind_from_name(mesh_opts.kind_name);
  const int q = mesh_opts.gauss_per_dir > 0 ? mesh_opts.gauss_per_dir : 2;
  const Mesh mesh = make_structured_mesh(box, divs, kind, q);
  if (const auto parent = fs::path(output).parent_path(); !parent.empty())
    fs::create_directories(parent);
  save_mesh_json(output, mesh);
  std::printf("mesh: %lld nodes, %lld %s elements, q=%d -> %s\n",
              static_cast<long long>(mesh.nodes.rows()),
              static_cast<long long>(mesh.element_count()),
              element_kind_name(mesh.kind).c_str(), mesh.gauss_per_dir,
              output.c_str());
  return kExitOk;
}

}  // namespace

int run_main(int argc, char** argv) {
  CLI::App app{"Empirical cubature rule synthesis over finite element meshes"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  CommonOpts opts;
  app.add_option("--seed", opts.seed, "RNG seed for the randomized SVD paths");
  app.add_option("--eps-svd", opts.eps_svd,
                 "relative SVD truncation tolerance (default: 0 for the "
                 "polynomial families, 1e-6 otherwise)");
  app.add_option("--out", opts.out_dir, "output directory");
  app.add_option("--threads", opts.threads,
                 "dense-kernel thread count (0 = library default)");

  const auto add_mesh_flags = [&](CLI::App* cmd) {
    cmd->add_option("--mesh", opts.mesh.mesh_file, "mesh JSON file");
    cmd->add_option("--box", opts.mesh.box_spec,
                    "structured box, e.g. -1..1,-1..1");
    cmd->add_option("--divisions", opts.mesh.divisions_spec,
                    "elements per direction, e.g. 20,20");
    cmd->add_option("--kind", opts.mesh.kind_name,
                    "element kind (line-linear, line-quadratic, "
                    "quad-bilinear, quad-quadratic, hex-trilinear)");
    cmd->add_option("--q", opts.mesh.gauss_per_dir,
                    "Gauss points per direction");
  };
  const auto add_snapshot_flags = [&](CLI::App* cmd) {
    cmd->add_option("--function", opts.snaps.function_name,
                    "registry function: lagrange1d, lagrange2d, lagrange3d, "
                    "expsin3d");
    cmd->add_option("--degree", opts.snaps.degree,
                    "polynomial degree for the lagrange families");
    cmd->add_option("--grid", opts.snaps.grid,
                    "parameter grid size per axis for expsin3d");
    cmd->add_option("--snapshots", opts.snaps.snapshot_file,
                    "snapshot block manifest (.json) or single block (.cubb)");
    cmd->add_option("--weights", opts.snaps.weights_file,
                    "CUBW weight vector overriding the mesh Gauss weights");
    cmd->add_flag("--full", opts.snaps.full_scale,
                  "full-scale benchmark mesh for expsin3d (30^3, q=3)");
  };
  const auto add_solver_flags = [&](CLI::App* cmd) {
    cmd->add_option("--kmax", opts.solver.k_max, "Newton iteration budget");
    cmd->add_option("--eps-nr", opts.solver.eps_nr,
                    "Newton residual tolerance");
    cmd->add_option("--nneg", opts.solver.n_neg,
                    "max transient negative weights");
    cmd->add_option("--nsteps", opts.solver.n_steps,
                    "stage-2 weight reduction steps");
  };

  CLI::App* rule = app.add_subcommand(
      "rule", "full pipeline: basis, discrete selection, sparsification");
  add_mesh_flags(rule);
  add_snapshot_flags(rule);
  add_solver_flags(rule);
  rule->add_option("--svd", opts.svd_method,
                   "svd path: auto, dense, randomized, sequential");
  rule->add_option("--backend", opts.backend,
                   "evaluation backend: analytic or interp");
  rule->add_option("--augment", opts.constant_route,
                   "constant-function route: basis (augment the basis) or "
                   "column (append a scaled all-ones snapshot column)");
  rule->add_flag("--global-search", opts.global_search,
                 "fall back to a whole-mesh scan when a relocated point "
                 "leaves the searched element patch");

  CLI::App* decm_cmd = app.add_subcommand(
      "decm", "discrete stage only: basis plus greedy point selection");
  add_mesh_flags(decm_cmd);
  add_snapshot_flags(decm_cmd);
  decm_cmd->add_option("--svd", opts.svd_method,
                       "svd path: auto, dense, randomized, sequential");

  CLI::App* svd_cmd =
      app.add_subcommand("svd", "sequential randomized SVD of a manifest");
  std::string manifest;
  double svd_eps = 1e-6;
  bool check_dense = false;
  svd_cmd->add_option("--manifest", manifest, "block manifest JSON")
      ->required();
  svd_cmd->add_option("--eps", svd_eps, "relative truncation tolerance");
  svd_cmd->add_flag("--check-dense", check_dense,
                    "compare against the dense truncated SVD");

  CLI::App* verify =
      app.add_subcommand("verify", "check a rule file against snapshots");
  std::string rule_path;
  verify->add_option("--rule", rule_path, "rule JSON file")->required();
  add_mesh_flags(verify);
  add_snapshot_flags(verify);

  CLI::App* bench = app.add_subcommand(
      "bench", "regenerate a benchmark suite (table1, table2, table3, srsvd)");
  std::string suite;
  bool bench_full = false;
  bench->add_option("--suite", suite, "suite name")->required();
  bench->add_flag("--full", bench_full, "full-scale variant where defined");

  CLI::App* meshgen =
      app.add_subcommand("meshgen", "write a structured mesh JSON file");
  add_mesh_flags(meshgen);
  std::string mesh_out = "mesh.json";
  meshgen->add_option("--output", mesh_out, "output mesh path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (opts.threads > 0) Eigen::setNbThreads(opts.threads);
    if (rule->parsed()) return run_rule_cmd(opts, true);
    if (decm_cmd->parsed()) return run_rule_cmd(opts, false);
    if (svd_cmd->parsed())
      return run_svd_cmd(manifest, svd_eps, check_dense, opts.out_dir,
                         opts.seed);
    if (verify->parsed()) return run_verify_cmd(rule_path, opts);
    if (bench->parsed())
      return run_bench(suite, opts.out_dir, bench_full, opts.seed);
    if (meshgen->parsed()) return run_meshgen_cmd(opts.mesh, mesh_out);
  } catch (const InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const GeometryError& e) {
    std::fprintf(stderr, "geometry error: %s\n", e.what());
    return kExitInput;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitInput;
}

}  // namespace cecm::cli

int main(int argc, char** argv) { return cecm::cli::run_main(argc, argv); }
