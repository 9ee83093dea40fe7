#ifndef CECM_BENCH_SUITES_HPP
#define CECM_BENCH_SUITES_HPP

#include <cstdint>
#include <filesystem>
#include <string>

namespace cecm::cli {

/// Regenerates one benchmark suite (table1, table2, table3, srsvd) into CSV
/// files under out_dir. Returns a process exit code.
int run_bench(const std::string& suite, const std::filesystem::path& out_dir,
              bool full_scale, std::uint64_t seed);

}  // namespace cecm::cli

#endif
