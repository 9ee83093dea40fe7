#ifndef CECM_BLOCK_IO_HPP
#define CECM_BLOCK_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "cecm/block_source.hpp"
#include "cecm/types.hpp"

namespace cecm {

// Binary block format: little-endian, magic "CUBB", version u32, n u64,
// m u64, then n*m column-major doubles. One file per block.
void write_block_file(const std::filesystem::path& path, const Matrix& block);
Matrix read_block_file(const std::filesystem::path& path);

// Weight vector format: magic "CUBW", length u64, little-endian doubles.
void write_weights_file(const std::filesystem::path& path, const Vector& w);
Vector read_weights_file(const std::filesystem::path& path);

/// JSON manifest listing the block files of a partitioned matrix in order,
/// plus the shared row count n. Relative paths resolve against the manifest
/// directory.
struct BlockManifest {
  Index rows = 0;
  std::vector<std::filesystem::path> block_paths;
};

BlockManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path,
                    const BlockManifest& manifest);

/// BlockSource over manifest-listed CUBB files; reads one block at a time.
class FileBlockSource final : public BlockSource {
 public:
  explicit FileBlockSource(const std::filesystem::path& manifest_path);

  int block_count() const override {
    return static_cast<int>(paths_.size());
  }
  Index rows() const override { return rows_; }
  Index block_cols(int i) const override { return cols_.at(i); }
  Matrix load(int i) const override;

 private:
  std::vector<std::filesystem::path> paths_;
  std::vector<Index> cols_;
  Index rows_ = 0;
};

}  // namespace cecm

#endif
