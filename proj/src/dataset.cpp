#include "nsgraph/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "nsgraph/error.hpp"

namespace nsg {

Dataset::Dataset(PointMatrix points, std::optional<std::vector<int>> labels,
                 std::optional<DisplayMatrix> display_xy)
    : points_(std::move(points)), labels_(std::move(labels)), display_xy_(std::move(display_xy)) {
  if (points_.rows() < 1 || points_.cols() < 1) throw Error("dataset must have N >= 1 and D >= 1");
  if (!points_.allFinite()) throw Error("dataset contains non-finite values");
  if (labels_ && labels_->size() != size()) {
    throw Error("label count " + std::to_string(labels_->size()) + " does not match point count " +
                std::to_string(size()));
  }
  if (display_xy_) {
    if (static_cast<std::size_t>(display_xy_->rows()) != size()) {
      throw Error("display coordinate count does not match point count");
    }
    if (!display_xy_->allFinite()) throw Error("display coordinates contain non-finite values");
  }
}

Dataset Dataset::with_labels(std::vector<int> labels) const {
  return Dataset(points_, std::move(labels), display_xy_);
}

Dataset Dataset::subset(const std::vector<std::size_t>& ids) const {
  PointMatrix pts(static_cast<Eigen::Index>(ids.size()), points_.cols());
  std::optional<std::vector<int>> lab;
  std::optional<DisplayMatrix> xy;
  if (labels_) lab.emplace(ids.size());
  if (display_xy_) xy.emplace(static_cast<Eigen::Index>(ids.size()), 2);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= size()) throw Error("subset id out of range");
    const auto src = static_cast<Eigen::Index>(ids[r]);
    const auto dst = static_cast<Eigen::Index>(r);
    pts.row(dst) = points_.row(src);
    if (lab) (*lab)[r] = (*labels_)[ids[r]];
    if (xy) xy->row(dst) = display_xy_->row(src);
  }
  return Dataset(std::move(pts), std::move(lab), std::move(xy));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_real(const std::string& cell, std::size_t row, std::size_t col) {
  const std::string t = trim(cell);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (t.empty() || used != t.size() || !std::isfinite(v)) {
    throw FormatError("csv parse error at row " + std::to_string(row) + ", column " +
                      std::to_string(col) + ": '" + t + "'");
  }
  return v;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (opts.has_header && lineno == 1) continue;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (width == 0) {
      width = cells.size();
    } else if (cells.size() != width) {
      throw FormatError("ragged csv: row " + std::to_string(lineno) + " has " +
                        std::to_string(cells.size()) + " columns, expected " + std::to_string(width));
    }
    if (opts.label_column && *opts.label_column >= width) {
      throw FormatError("label column " + std::to_string(*opts.label_column) + " out of range");
    }
    std::vector<double> values;
    values.reserve(width);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = parse_real(cells[c], lineno, c);
      if (opts.label_column && c == *opts.label_column) {
        if (v != std::floor(v)) {
          throw FormatError("non-integer label at row " + std::to_string(lineno));
        }
        labels.push_back(static_cast<int>(v));
      } else {
        values.push_back(v);
      }
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw FormatError("empty csv file " + path.string());
  const std::size_t d = rows.front().size();
  if (d == 0) throw FormatError("csv has no data columns");

  PointMatrix pts(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < d; ++c)
      pts(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];

  std::optional<std::vector<int>> lab;
  if (opts.label_column) lab = std::move(labels);
  std::optional<DisplayMatrix> xy;
  if (d == 2) xy = DisplayMatrix(pts);
  return Dataset(std::move(pts), std::move(lab), std::move(xy));
}

void save_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  const auto& p = data.points();
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      if (c) out << ',';
      out << p(r, c);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// idx

namespace {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& packed, const std::string& name) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK) throw Error("zlib init failed");
  zs.next_in = const_cast<Bytef*>(packed.data());
  zs.avail_in = static_cast<uInt>(packed.size());
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> chunk(1 << 16);
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw FormatError("corrupt gzip stream in " + name);
    }
    out.insert(out.end(), chunk.begin(), chunk.begin() + (chunk.size() - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw FormatError("truncated gzip stream in " + name);
    }
  }
  inflateEnd(&zs);
  return out;
}

std::vector<std::uint8_t> read_idx_bytes(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) return gunzip(bytes, path.string());
  return bytes;
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

void check_idx_header(const std::vector<std::uint8_t>& b, std::uint32_t magic, std::size_t header,
                      const std::string& name) {
  if (b.size() < 4) throw FormatError(name + ": file too short for idx magic");
  const std::uint32_t got = be32(b, 0);
  if (got != magic) {
    std::ostringstream msg;
    msg << name << ": bad idx magic 0x" << std::hex << std::setw(8) << std::setfill('0') << got
        << ", expected 0x" << std::setw(8) << magic;
    throw FormatError(msg.str());
  }
  if (b.size() < header) throw FormatError(name + ": truncated idx header");
}

}  // namespace

Dataset load_idx_images(const std::filesystem::path& path) {
  const auto b = read_idx_bytes(path);
  check_idx_header(b, kIdxImageMagic, 16, path.string());
  const std::size_t n = be32(b, 4), rows = be32(b, 8), cols = be32(b, 12);
  if (n == 0 || rows == 0 || cols == 0) throw FormatError(path.string() + ": empty idx image file");
  const std::size_t d = rows * cols;
  const std::size_t expected = n * d;
  if (b.size() - 16 < expected) {
    throw FormatError(path.string() + ": truncated idx payload, expected " + std::to_string(expected) +
                      " bytes, got " + std::to_string(b.size() - 16));
  }
  PointMatrix pts(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const std::uint8_t* px = b.data() + 16;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = px[i * d + j];
  return Dataset(std::move(pts));
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  const auto b = read_idx_bytes(path);
  check_idx_header(b, kIdxLabelMagic, 8, path.string());
  const std::size_t n = be32(b, 4);
  if (n == 0) throw FormatError(path.string() + ": empty idx label file");
  if (b.size() - 8 < n) {
    throw FormatError(path.string() + ": truncated idx payload, expected " + std::to_string(n) +
                      " bytes, got " + std::to_string(b.size() - 8));
  }
  return {b.begin() + 8, b.begin() + 8 + static_cast<std::ptrdiff_t>(n)};
}

void write_idx_images(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                      const std::vector<std::uint8_t>& pixels) {
  const std::size_t d = rows * cols;
  if (d == 0 || pixels.size() % d != 0) throw Error("pixel count is not a multiple of rows*cols");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  put_be32(out, kIdxImageMagic);
  put_be32(out, static_cast<std::uint32_t>(pixels.size() / d));
  put_be32(out, static_cast<std::uint32_t>(rows));
  put_be32(out, static_cast<std::uint32_t>(cols));
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  put_be32(out, kIdxLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

// ---------------------------------------------------------------------------
// synthetic

Dataset gen_two_spirals(const SpiralParams& params) {
  if (params.n_per_arm < 2) throw Error("two spirals need n_per_arm >= 2");
  if (!(params.noise_sigma >= 0.0)) throw Error("noise_sigma must be >= 0");
  if (!(params.turns > 0.0)) throw Error("turns must be > 0");

  const std::size_t n = params.n_per_arm;
  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double sweep = params.turns * 2.0 * std::numbers::pi;

  PointMatrix pts(static_cast<Eigen::Index>(2 * n), 2);
  std::vector<int> labels(2 * n);
  for (std::size_t arm = 0; arm < 2; ++arm) {
    const double offset = arm == 0 ? 0.0 : std::numbers::pi;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(n - 1);
      const double phi = t * sweep;
      const double r = params.r_min + (params.r_max - params.r_min) * t;
      const auto row = static_cast<Eigen::Index>(arm * n + i);
      pts(row, 0) = r * std::cos(phi + offset);
      pts(row, 1) = r * std::sin(phi + offset);
      labels[arm * n + i] = static_cast<int>(arm);
    }
  }
  if (params.noise_sigma > 0.0) {
    for (Eigen::Index r = 0; r < pts.rows(); ++r) {
      pts(r, 0) += params.noise_sigma * noise(rng);
      pts(r, 1) += params.noise_sigma * noise(rng);
    }
  }
  DisplayMatrix xy(pts);
  return Dataset(std::move(pts), std::move(labels), std::move(xy));
}

std::vector<std::size_t> subsample_ids(std::size_t n, std::size_t count, std::uint64_t seed) {
  if (count == 0 || count > n) throw Error("subsample size must be in 1..N");
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates; avoids std::shuffle's implementation-defined sequence.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(count);
  return ids;
}

}  // namespace nsg
