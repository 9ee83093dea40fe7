#ifndef CECM_CLI_COMMON_HPP
#define CECM_CLI_COMMON_HPP

#include <cecm/basis.hpp>
#include <cecm/mesh.hpp>
#include <cecm/pipeline.hpp>
#include <cecm/registry.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cecm::cli {

// Exit-code discipline shared by every subcommand.
constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitInfeasible = 4;

struct MeshOptions {
  std::string mesh_file;
  std::string box_spec;        // "lo..hi[,lo..hi[,lo..hi]]"
  std::string divisions_spec;  // "n[,n[,n]]"
  std::string kind_name;       // empty = linear kind of the box dimension
  int gauss_per_dir = 0;       // 0 = default
};

struct SnapshotOptions {
  std::string function_name;  // registry function
  int degree = 5;
  int grid = 8;
  std::string snapshot_file;  // manifest .json or single .cubb block
  std::string weights_file;   // optional CUBW vector overriding W_FE
  bool full_scale = false;    // expsin3d full 30^3 mesh
};

/// Parsed box spec, e.g. "-1..1,0..2".
std::vector<std::pair<double, double>> parse_box(const std::string& spec);
std::vector<int> parse_divisions(const std::string& spec);

/// Mesh from an explicit file or generator flags; when neither is given the
/// registry function's benchmark mesh is used.
Mesh resolve_mesh(const MeshOptions& mesh_opts, const SnapshotOptions& snaps);

struct PreparedInputs {
  Mesh mesh;
  GaussField field;
  SnapshotMatrix snapshots;
  std::optional<AnalyticIntegrand> integrand;
};

/// block_cols > 0 turns a registry function into an on-demand sampled
/// block source of that width instead of one dense matrix.
PreparedInputs prepare_inputs(const MeshOptions& mesh_opts,
                              const SnapshotOptions& snaps,
                              Index block_cols = 0);

/// Default SVD truncation: exact for the polynomial families, 1e-6 for
/// empirical input.
double default_eps_svd(const SnapshotOptions& snaps);

}  // namespace cecm::cli

#endif
