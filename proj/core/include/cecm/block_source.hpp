#ifndef CECM_BLOCK_SOURCE_HPP
#define CECM_BLOCK_SOURCE_HPP

#include <memory>
#include <utility>
#include <vector>

#include "cecm/types.hpp"

namespace cecm {

/// Pull-based access to a column-partitioned matrix. Blocks share the row
/// count, are retrievable repeatedly and identically, and never need to
/// coexist in memory.
class BlockSource {
 public:
  virtual ~BlockSource() = default;

  virtual int block_count() const = 0;
  virtual Index rows() const = 0;
  virtual Index block_cols(int i) const = 0;
  virtual Matrix load(int i) const = 0;

  Index total_cols() const {
    Index m = 0;
    for (int i = 0; i < block_count(); ++i) m += block_cols(i);
    return m;
  }
};

/// In-memory partition of one or more dense blocks.
class DenseBlockSource final : public BlockSource {
 public:
  explicit DenseBlockSource(std::vector<Matrix> blocks)
      : blocks_(std::move(blocks)) {
    for (const Matrix& b : blocks_)
      if (b.rows() != blocks_.front().rows())
        throw InputError("DenseBlockSource: inconsistent row counts");
  }
  explicit DenseBlockSource(Matrix single) {
    blocks_.push_back(std::move(single));
  }

  int block_count() const override { return static_cast<int>(blocks_.size()); }
  Index rows() const override {
    return blocks_.empty() ? 0 : blocks_.front().rows();
  }
  Index block_cols(int i) const override { return blocks_.at(i).cols(); }
  Matrix load(int i) const override { return blocks_.at(i); }

 private:
  std::vector<Matrix> blocks_;
};

/// Appends one extra single-column block to an underlying source.
class AppendColumnBlockSource final : public BlockSource {
 public:
  AppendColumnBlockSource(std::shared_ptr<const BlockSource> inner,
                          Vector column)
      : inner_(std::move(inner)), column_(std::move(column)) {
    if (column_.size() != inner_->rows())
      throw InputError("AppendColumnBlockSource: column length != row count");
  }

  int block_count() const override { return inner_->block_count() + 1; }
  Index rows() const override { return inner_->rows(); }
  Index block_cols(int i) const override {
    return (i == inner_->block_count()) ? 1 : inner_->block_cols(i);
  }
  Matrix load(int i) const override {
    if (i == inner_->block_count()) return column_;
    return inner_->load(i);
  }

 private:
  std::shared_ptr<const BlockSource> inner_;
  Vector column_;
};

/// Applies diag(scale) to every block of an underlying source on load.
class RowScaledBlockSource final : public BlockSource {
 public:
  RowScaledBlockSource(std::shared_ptr<const BlockSource> inner, Vector scale)
      : inner_(std::move(inner)), scale_(std::move(scale)) {
    if (scale_.size() != inner_->rows())
      throw InputError("RowScaledBlockSource: scale length != row count");
  }

  int block_count() const override { return inner_->block_count(); }
  Index rows() const override { return inner_->rows(); }
  Index block_cols(int i) const override { return inner_->block_cols(i); }
  Matrix load(int i) const override {
    return scale_.asDiagonal() * inner_->load(i);
  }

 private:
  std::shared_ptr<const BlockSource> inner_;
  Vector scale_;
};

}  // namespace cecm

#endif
