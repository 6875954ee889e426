#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace nsg {

using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using DisplayMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

// N points in D dimensions with optional ground-truth labels and 2-D display
// coordinates. Row index is the point id (0..N-1). Immutable once built.
class Dataset {
 public:
  // Throws nsg::Error when the invariants do not hold (empty, non-finite
  // entries, label/display size mismatch).
  explicit Dataset(PointMatrix points,
                   std::optional<std::vector<int>> labels = std::nullopt,
                   std::optional<DisplayMatrix> display_xy = std::nullopt);

  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(points_.cols()); }

  const PointMatrix& points() const noexcept { return points_; }
  const std::optional<std::vector<int>>& labels() const noexcept { return labels_; }
  const std::optional<DisplayMatrix>& display_xy() const noexcept { return display_xy_; }

  Dataset with_labels(std::vector<int> labels) const;

  // Rows `ids` in the given order; labels and display coordinates follow.
  Dataset subset(const std::vector<std::size_t>& ids) const;

 private:
  PointMatrix points_;
  std::optional<std::vector<int>> labels_;
  std::optional<DisplayMatrix> display_xy_;
};

struct CsvOptions {
  bool has_header = false;
  std::optional<std::size_t> label_column;
};

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& opts = {});
void save_csv(const std::filesystem::path& path, const Dataset& data);

// idx containers (MNIST). Gzip-compressed files are detected by their magic
// and decompressed transparently.
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

Dataset load_idx_images(const std::filesystem::path& path);
std::vector<int> load_idx_labels(const std::filesystem::path& path);

// Writers used by tests and tooling; output is uncompressed.
void write_idx_images(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                      const std::vector<std::uint8_t>& pixels);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

struct SpiralParams {
  std::size_t n_per_arm = 500;
  double turns = 2.0;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;
  double r_min = 0.5;
  double r_max = 10.0;
};

// Two interleaved Archimedean spiral arms, the second rotated by pi. Points
// 0..n-1 are arm 0, n..2n-1 arm 1; labels are the arm index.
Dataset gen_two_spirals(const SpiralParams& params);

// Deterministic random subsample of `count` rows (a seeded permutation prefix).
std::vector<std::size_t> subsample_ids(std::size_t n, std::size_t count, std::uint64_t seed);

}  // namespace nsg
