#include "bench_suites.hpp"

#include <cecm/block_source.hpp>
#include <cecm/gauss_legendre.hpp>
#include <cecm/pipeline.hpp>
#include <cecm/registry.hpp>
#include <cecm/srsvd.hpp>
#include <cecm/svd.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <vector>

#include "cli_common.hpp"

namespace cecm::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

// Tensor-product Gauss reference rule on [-1,1]^d, first direction fastest.
void tensor_gauss(int dim, int points_per_dir, Matrix& pts, Vector& ws) {
  const GaussRule1d g1 = gauss_legendre(points_per_dir);
  Index total = 1;
  for (int i = 0; i < dim; ++i) total *= points_per_dir;
  pts = Matrix(total, dim);
  ws = Vector(total);
  for (Index k = 0; k < total; ++k) {
    Index rest = k;
    double w = 1.0;
    for (int i = 0; i < dim; ++i) {
      const Index idx = rest % points_per_dir;
      rest /= points_per_dir;
      pts(k, i) = g1.nodes(idx);
      w *= g1.weights(idx);
    }
    ws(k) = w;
  }
}

std::vector<Index> lexicographic_order(const Matrix& pts) {
  std::vector<Index> order(static_cast<std::size_t>(pts.rows()));
  std::iota(order.begin(), order.end(), Index(0));
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index k = 0; k < pts.cols(); ++k) {
      if (pts(a, k) < pts(b, k) - 1e-12) return true;
      if (pts(a, k) > pts(b, k) + 1e-12) return false;
    }
    return a < b;
  });
  return order;
}

// Relative deviation from the reference rule per the table caption:
// e^2 = (|X_c - X_g|^2 + |w_c - w_g|^2) / (|X_g|^2 + |w_g|^2).
double gauss_deviation(const Matrix& pts, const Vector& ws,
                       const Matrix& ref_pts, const Vector& ref_ws) {
  if (pts.rows() != ref_pts.rows()) return std::numeric_limits<double>::max();
  const auto oc = lexicographic_order(pts);
  const auto og = lexicographic_order(ref_pts);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < oc.size(); ++i) {
    num += (pts.row(oc[i]) - ref_pts.row(og[i])).squaredNorm() +
           std::pow(ws(oc[i]) - ref_ws(og[i]), 2);
    den += ref_pts.row(og[i]).squaredNorm() + ref_ws(og[i]) * ref_ws(og[i]);
  }
  return std::sqrt(num / den);
}

void write_rule_history(const fs::path& path, const ContinuousRule& rule,
                        int dim) {
  std::ofstream os(path, std::ios::trunc);
  os << "state,point";
  for (int k = 0; k < dim; ++k) os << ",x" << k + 1;
  os << ",w\n";
  int state = 0;
  for (const RuleSnapshot& snap : rule.history) {
    for (Index i = 0; i < snap.weights.size(); ++i) {
      if (snap.weights(i) == 0.0) continue;
      os << state << "," << i;
      for (int k = 0; k < dim; ++k) os << "," << fmt(snap.points(i, k));
      os << "," << fmt(snap.weights(i)) << "\n";
    }
    ++state;
  }
}

void write_decm_history(const fs::path& path, const DiscreteRule& rule,
                        const GaussField& field, const Matrix& basis, int dim) {
  // Weights of every greedy prefix, re-solved as in the selection loop.
  std::ofstream os(path, std::ios::trunc);
  os << "iteration,point";
  for (int k = 0; k < dim; ++k) os << ",x" << k + 1;
  os << ",w\n";
  const Vector b = basis.transpose() * field.weights;
  for (std::size_t it = 1; it <= rule.indices.size(); ++it) {
    Matrix uz_t(basis.cols(), static_cast<Index>(it));
    for (std::size_t i = 0; i < it; ++i)
      uz_t.col(static_cast<Index>(i)) = basis.row(rule.indices[i]).transpose();
    const Vector w = uz_t.colPivHouseholderQr().solve(b);
    for (std::size_t i = 0; i < it; ++i) {
      os << it << "," << rule.indices[i];
      for (int k = 0; k < dim; ++k)
        os << "," << fmt(field.points(rule.indices[i], k));
      os << "," << fmt(w(static_cast<Index>(i))) << "\n";
    }
  }
}

int run_table_suite(int dim, int max_degree, const fs::path& out_dir,
                    std::uint64_t seed, const std::string& name) {
  fs::create_directories(out_dir);
  std::ofstream table(out_dir / (name + ".csv"), std::ios::trunc);
  table << "degree,points,point";
  for (int k = 0; k < dim; ++k) table << ",x" << k + 1;
  table << ",w,gauss_deviation\n";

  for (int degree = 1; degree <= max_degree; ++degree) {
    SnapshotOptions snaps;
    snaps.function_name = "lagrange" + std::to_string(dim) + "d";
    snaps.degree = degree;
    MeshOptions mesh_opts;
    if (dim > 1) {
      // Per-element rule rich enough to integrate the sampled degree
      // exactly; otherwise the composite quadrature error in the reference
      // integrals displaces the recovered rule away from the Gauss one.
      mesh_opts.gauss_per_dir = std::max(2, (degree + 2) / 2);
      mesh_opts.box_spec = (dim == 2) ? "-1..1,-1..1" : "-1..1,-1..1,-1..1";
      mesh_opts.divisions_spec = (dim == 2) ? "20,20" : "20,20,20";
    }
    PreparedInputs inputs = prepare_inputs(mesh_opts, snaps);

    RuleConfig config;
    config.eps_svd = 0.0;
    config.seed = seed;
    const RulePipelineResult res = run_rule_pipeline(
        inputs.mesh, inputs.field, inputs.snapshots, inputs.integrand, config);

    const std::vector<Index> actives = res.rule.active();
    Matrix pts(static_cast<Index>(actives.size()), dim);
    Vector ws(static_cast<Index>(actives.size()));
    for (std::size_t i = 0; i < actives.size(); ++i) {
      pts.row(static_cast<Index>(i)) = res.rule.points.row(actives[i]);
      ws(static_cast<Index>(i)) = res.rule.weights(actives[i]);
    }

    double deviation = -1.0;  // reported for odd degrees only
    if (degree % 2 == 1) {
      Matrix ref_pts;
      Vector ref_ws;
      tensor_gauss(dim, (degree + 1) / 2, ref_pts, ref_ws);
      deviation = gauss_deviation(pts, ws, ref_pts, ref_ws);
    }

    const auto order = lexicographic_order(pts);
    for (std::size_t i = 0; i < order.size(); ++i) {
      table << degree << "," << actives.size() << "," << i;
      for (int k = 0; k < dim; ++k) table << "," << fmt(pts(order[i], k));
      table << "," << fmt(ws(order[i])) << ","
            << (deviation >= 0.0 ? fmt(deviation) : "") << "\n";
    }

    const std::string tag = name + "_deg" + std::to_string(degree);
    write_rule_history(out_dir / (tag + "_cecm_path.csv"), res.rule, dim);
    write_decm_history(out_dir / (tag + "_decm_path.csv"), res.discrete,
                       inputs.field, res.model.u, dim);

    std::printf("%s degree %2d: %3lld -> %3lld points", name.c_str(), degree,
                static_cast<long long>(res.stats.decm_points),
                static_cast<long long>(res.stats.cecm_points));
    if (deviation >= 0.0) std::printf(", gauss deviation %.3e", deviation);
    std::printf("\n");
  }
  return kExitOk;
}

int run_srsvd_suite(const fs::path& out_dir, bool full_scale,
                    std::uint64_t seed) {
  fs::create_directories(out_dir);
  const int divisions = full_scale ? 30 : 10;
  const int q = full_scale ? 3 : 2;
  const std::vector<int> ladder =
      full_scale ? std::vector<int>{4, 6, 8, 11, 16, 22, 31}
                 : std::vector<int>{2, 4, 6, 8};

  const Mesh mesh = make_structured_mesh(
      {{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}},
      {divisions, divisions, divisions}, ElementKind::HexTrilinear, q);
  const GaussField field = gauss_field(mesh);
  const Vector sqrt_w = field.weights.array().sqrt().matrix();

  std::ofstream table(out_dir / "srsvd.csv", std::ios::trunc);
  table << "n_samp,n_cols,blocks,rank_dense,rank_srsvd,sing_rel_diff,"
           "seconds_dense,seconds_srsvd,rorth_iters_avg\n";

  constexpr double eps = 1e-4;
  for (int n_samp : ladder) {
    const AnalyticIntegrand family = expsin3d_family(n_samp);
    const Matrix a = sample_integrand(family, field.points);
    const Matrix weighted = sqrt_w.asDiagonal() * a;

    auto t0 = std::chrono::steady_clock::now();
    const SvdFactors dense = svd_truncated(weighted, eps * weighted.norm());
    const double sec_dense =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    // Blocks of roughly 96 columns, mirroring a fixed per-block budget.
    std::vector<Matrix> parts;
    for (Index c = 0; c < weighted.cols(); c += 96)
      parts.push_back(
          weighted.middleCols(c, std::min<Index>(96, weighted.cols() - c)));
    DenseBlockSource blocks(parts);
    t0 = std::chrono::steady_clock::now();
    const SrsvdResult seq = srsvd(blocks, eps, seed);
    const double sec_seq =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    double diff = 0.0;
    if (dense.rank == seq.factors.rank && dense.rank > 0)
      diff = (dense.singular - seq.factors.singular).norm() /
             dense.singular.norm();
    else
      diff = std::numeric_limits<double>::quiet_NaN();
    double iters = 0.0;
    for (const BlockStats& s : seq.stats) iters += s.rorth_iters;
    iters /= static_cast<double>(seq.stats.size());

    table << n_samp << "," << a.cols() << "," << parts.size() << ","
          << dense.rank << "," << seq.factors.rank << "," << fmt(diff) << ","
          << fmt(sec_dense) << "," << fmt(sec_seq) << "," << fmt(iters)
          << "\n";
    std::printf(
        "srsvd n_samp %2d: cols %4lld rank %lld/%lld sing diff %.2e "
        "(%.2fs dense, %.2fs srsvd)\n",
        n_samp, static_cast<long long>(a.cols()),
        static_cast<long long>(dense.rank),
        static_cast<long long>(seq.factors.rank), diff, sec_dense, sec_seq);
  }
  return kExitOk;
}

}  // namespace

int run_bench(const std::string& suite, const fs::path& out_dir,
              bool full_scale, std::uint64_t seed) {
  if (suite == "table1") return run_table_suite(1, 12, out_dir, seed, "table1");
  if (suite == "table2") return run_table_suite(2, 7, out_dir, seed, "table2");
  if (suite == "table3") return run_table_suite(3, 4, out_dir, seed, "table3");
  if (suite == "srsvd") return run_srsvd_suite(out_dir, full_scale, seed);
  throw InputError("unknown bench suite \"" + suite +
                   "\" (expected table1, table2, table3 or srsvd)");
}

}  // namespace cecm::cli
