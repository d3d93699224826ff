#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "topoloop/geometry.hpp"

namespace topoloop {

// Dense row-major N x d matrix; one descriptor per row.
class DescriptorMatrix {
 public:
  DescriptorMatrix() = default;
  DescriptorMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  DescriptorMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  const std::vector<double>& data() const noexcept { return data_; }

  void append_row(std::span<const double> values);

  friend bool operator==(const DescriptorMatrix&, const DescriptorMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Scales every row to unit L2 norm. Zero rows are left untouched.
void normalize_rows(DescriptorMatrix& m);

struct Frame {
  std::size_t id = 0;
  std::optional<Pose2> pose;
  std::span<const double> descriptor;
};

// Ordered frames of one run. Frame ids are the row indices.
class Traversal {
 public:
  Traversal(DescriptorMatrix descriptors, std::vector<Pose2> poses = {});

  std::size_t size() const noexcept { return descriptors_.rows(); }
  std::size_t dimension() const noexcept { return descriptors_.cols(); }
  bool has_poses() const noexcept { return !poses_.empty(); }

  Frame frame(std::size_t id) const;
  const DescriptorMatrix& descriptors() const noexcept { return descriptors_; }
  const std::vector<Pose2>& poses() const noexcept { return poses_; }

  friend bool operator==(const Traversal&, const Traversal&) = default;

 private:
  DescriptorMatrix descriptors_;
  std::vector<Pose2> poses_;
};

struct LoopPair {
  std::size_t i = 0;
  std::size_t j = 0;
  double score = 0.0;

  friend bool operator==(const LoopPair&, const LoopPair&) = default;
};

// Orders (a, b) so that i < j. Throws ArgumentError when a == b.
LoopPair make_loop_pair(std::size_t a, std::size_t b, double score);

// Sorts by (i, j) and drops repeated frame pairs, keeping the first score.
void sort_and_dedupe(std::vector<LoopPair>& pairs);

// .tdsc: "TDSC", u32 version=1, u32 N, u32 d, N*d float32, little-endian, row-major.
inline constexpr std::uint32_t kDescriptorFormatVersion = 1;
void write_descriptors(const DescriptorMatrix& m, const std::filesystem::path& path);
DescriptorMatrix read_descriptors(const std::filesystem::path& path);

// Text poses, one "id x y theta" per line. Also used for relative odometry.
void write_poses(const std::vector<Pose2>& poses, const std::filesystem::path& path);
std::vector<Pose2> read_poses(const std::filesystem::path& path);
std::vector<Pose2> parse_poses(const std::string& text);

// loops.csv with header "i,j,score", score printed with 6 decimals.
void write_loop_pairs(const std::vector<LoopPair>& pairs, const std::filesystem::path& path);
std::vector<LoopPair> read_loop_pairs(const std::filesystem::path& path);
std::string format_loop_pairs(const std::vector<LoopPair>& pairs);
std::vector<LoopPair> parse_loop_pairs(const std::string& text);

// Small helpers shared by the CSV writers of every module.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::vector<std::string> split(const std::string& line, char sep);
double parse_double(const std::string& field, const std::string& context);
std::size_t parse_index(const std::string& field, const std::string& context);

}  // namespace topoloop
