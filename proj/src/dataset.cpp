#include "topoloop/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "topoloop/errors.hpp"

namespace topoloop {

DescriptorMatrix::DescriptorMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ArgumentError("descriptor matrix: data size does not match rows*cols");
  }
}

void DescriptorMatrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw ArgumentError("descriptor matrix: row dimension mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

void normalize_rows(DescriptorMatrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    double sq = 0.0;
    for (double v : row) sq += v * v;
    if (sq <= 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : row) v *= inv;
  }
}

Traversal::Traversal(DescriptorMatrix descriptors, std::vector<Pose2> poses)
    : descriptors_(std::move(descriptors)), poses_(std::move(poses)) {
  if (descriptors_.empty()) throw EmptyDataError("traversal needs at least one frame and d_g > 0");
  if (!poses_.empty() && poses_.size() != descriptors_.rows()) {
    throw ConsistencyError("traversal: " + std::to_string(poses_.size()) + " poses for " +
                           std::to_string(descriptors_.rows()) + " descriptors");
  }
}

Frame Traversal::frame(std::size_t id) const {
  if (id >= size()) throw ArgumentError("frame id " + std::to_string(id) + " out of range");
  Frame f;
  f.id = id;
  if (has_poses()) f.pose = poses_[id];
  f.descriptor = descriptors_.row(id);
  return f;
}

LoopPair make_loop_pair(std::size_t a, std::size_t b, double score) {
  if (a == b) throw ArgumentError("loop pair needs two distinct frames");
  return a < b ? LoopPair{a, b, score} : LoopPair{b, a, score};
}

void sort_and_dedupe(std::vector<LoopPair>& pairs) {
  std::stable_sort(pairs.begin(), pairs.end(), [](const LoopPair& a, const LoopPair& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  pairs.erase(std::unique(pairs.begin(), pairs.end(),
                          [](const LoopPair& a, const LoopPair& b) { return a.i == b.i && a.j == b.j; }),
              pairs.end());
}

// ---------------------------------------------------------------------------
// .tdsc

namespace {

constexpr std::array<char, 4> kMagic{'T', 'D', 'S', 'C'};
constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFFu));
}

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + k])) << (8 * k);
  }
  return v;
}

}  // namespace

void write_descriptors(const DescriptorMatrix& m, const std::filesystem::path& path) {
  if (m.rows() > 0xFFFFFFFFu || m.cols() > 0xFFFFFFFFu) throw ArgumentError("descriptor matrix too large");
  std::string out;
  out.reserve(kHeaderBytes + 4 * m.data().size());
  out.append(kMagic.begin(), kMagic.end());
  put_u32(out, kDescriptorFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  write_text_file(path, out);
}

DescriptorMatrix read_descriptors(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  if (bytes.size() < kHeaderBytes) throw CorruptionError(path.string() + ": truncated header");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw FormatError(path.string() + ": bad magic, not a .tdsc file");
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kDescriptorFormatVersion) {
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  }
  const std::size_t n = get_u32(bytes, 8);
  const std::size_t d = get_u32(bytes, 12);
  if (n == 0 || d == 0) throw EmptyDataError(path.string() + ": N or d_g is zero");
  const std::size_t expected = kHeaderBytes + 4 * n * d;
  if (bytes.size() != expected) {
    throw CorruptionError(path.string() + ": payload is " + std::to_string(bytes.size()) +
                          " bytes, header declares " + std::to_string(expected));
  }
  std::vector<double> data(n * d);
  for (std::size_t k = 0; k < n * d; ++k) {
    data[k] = static_cast<double>(std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * k)));
  }
  return DescriptorMatrix(n, d, std::move(data));
}

// ---------------------------------------------------------------------------
// Text formats

void write_poses(const std::vector<Pose2>& poses, const std::filesystem::path& path) {
  std::string out;
  char buf[128];
  for (std::size_t k = 0; k < poses.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu %.17g %.17g %.17g\n", k, poses[k].x, poses[k].y, poses[k].theta);
    out += buf;
  }
  write_text_file(path, out);
}

std::vector<Pose2> parse_poses(const std::string& text) {
  std::vector<Pose2> poses;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string ctx = "poses line " + std::to_string(lineno);
    if (tok.size() != 4) throw ParseError(ctx + ": expected 'id x y theta'");
    const std::size_t id = parse_index(tok[0], ctx);
    if (id != poses.size()) {
      throw OrderingError(ctx + ": id " + std::to_string(id) + " where " + std::to_string(poses.size()) +
                          " was expected");
    }
    poses.emplace_back(parse_double(tok[1], ctx), parse_double(tok[2], ctx), parse_double(tok[3], ctx));
  }
  return poses;
}

std::vector<Pose2> read_poses(const std::filesystem::path& path) { return parse_poses(read_text_file(path)); }

std::string format_loop_pairs(const std::vector<LoopPair>& pairs) {
  std::string out = "i,j,score\n";
  char buf[96];
  for (const auto& p : pairs) {
    if (p.i >= p.j) throw CanonicalizationError("loop pair (" + std::to_string(p.i) + "," + std::to_string(p.j) + ") is not canonical");
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.6f\n", p.i, p.j, p.score);
    out += buf;
  }
  return out;
}

void write_loop_pairs(const std::vector<LoopPair>& pairs, const std::filesystem::path& path) {
  write_text_file(path, format_loop_pairs(pairs));
}

std::vector<LoopPair> parse_loop_pairs(const std::string& text) {
  std::vector<LoopPair> pairs;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line == "i,j,score") continue;
    const std::string ctx = "loops line " + std::to_string(lineno);
    const auto tok = split(line, ',');
    if (tok.size() != 3) throw ParseError(ctx + ": expected 'i,j,score'");
    const std::size_t i = parse_index(tok[0], ctx);
    const std::size_t j = parse_index(tok[1], ctx);
    if (i >= j) throw CanonicalizationError(ctx + ": pair requires i < j");
    pairs.push_back({i, j, parse_double(tok[2], ctx)});
  }
  return pairs;
}

std::vector<LoopPair> read_loop_pairs(const std::filesystem::path& path) {
  return parse_loop_pairs(read_text_file(path));
}

// ---------------------------------------------------------------------------
// Helpers

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& field, const std::string& context) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError(context + ": '" + field + "' is not a finite number");
  }
  return v;
}

std::size_t parse_index(const std::string& field, const std::string& context) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(context + ": '" + field + "' is not a non-negative integer");
  }
  return v;
}

}  // namespace topoloop
