#include "mbridge/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

namespace mbridge {
namespace {

constexpr std::array<char, 4> kMagic = {'M', 'B', 'R', 'G'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 16;

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<char>((v >> shift) & 0xFFu));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_double(std::string_view cell, std::size_t line_no) {
  cell = trim(cell);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw LoadError("line " + std::to_string(line_no) + ": cannot parse '" + std::string(cell) +
                    "' as a number");
  }
  if (!std::isfinite(v)) {
    throw LoadError("line " + std::to_string(line_no) + ": non-finite value");
  }
  return v;
}

Matrix parse_csv(const std::string& text) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = view.find(',', start);
      values.push_back(parse_double(view.substr(start, comma - start), line_no));
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw LoadError("line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                      " values, found " + std::to_string(count));
    }
    ++rows;
  }
  if (rows == 0) throw LoadError("empty feature file");
  return Matrix(rows, cols, std::move(values));
}

Matrix parse_binary(const std::string& bytes) {
  if (bytes.empty()) throw LoadError("empty feature file");
  if (bytes.size() < kHeaderBytes) throw LoadError("truncated header");
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw LoadError("bad magic bytes, expected MBRG");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t version = read_u32_le(p + 4);
  const std::uint32_t n = read_u32_le(p + 8);
  const std::uint32_t d = read_u32_le(p + 12);
  if (version != kVersion) {
    throw LoadError("unsupported version " + std::to_string(version));
  }
  if (n == 0 || d == 0) throw LoadError("header declares an empty matrix");
  const std::size_t count = static_cast<std::size_t>(n) * d;
  if (bytes.size() != kHeaderBytes + 4 * count) {
    throw LoadError("row-length mismatch: header declares " + std::to_string(n) + "x" +
                    std::to_string(d) + " but payload has " +
                    std::to_string(bytes.size() - kHeaderBytes) + " bytes");
  }
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const float f = std::bit_cast<float>(read_u32_le(p + kHeaderBytes + 4 * i));
    if (!std::isfinite(f)) {
      throw LoadError("non-finite value at row " + std::to_string(i / d));
    }
    values[i] = f;
  }
  return Matrix(n, d, std::move(values));
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace

FileFormat parse_file_format(std::string_view name) {
  if (name == "csv") return FileFormat::csv;
  if (name == "binary" || name == "bin") return FileFormat::binary;
  throw Error("unknown file format '" + std::string(name) + "'");
}

Matrix load_matrix(const std::filesystem::path& path, FileFormat format) {
  const std::string bytes = read_file(path);
  try {
    return format == FileFormat::csv ? parse_csv(bytes) : parse_binary(bytes);
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

FeatureMatrix load_features(const std::filesystem::path& path, FileFormat format) {
  return FeatureMatrix(load_matrix(path, format), false);
}

void save_matrix(const Matrix& m, const std::filesystem::path& path, FileFormat format) {
  std::string out;
  if (format == FileFormat::csv) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const auto row = m.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) out.push_back(',');
        out += format_double(row[j]);
      }
      out.push_back('\n');
    }
  } else {
    out.append(kMagic.data(), kMagic.size());
    write_u32_le(out, kVersion);
    write_u32_le(out, static_cast<std::uint32_t>(m.rows()));
    write_u32_le(out, static_cast<std::uint32_t>(m.cols()));
    out.reserve(out.size() + 4 * m.rows() * m.cols());
    for (double v : m.values()) {
      write_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  write_file(path, out);
}

void save_features(const FeatureMatrix& m, const std::filesystem::path& path,
                   FileFormat format) {
  save_matrix(m.data(), path, format);
}

std::vector<int> load_labels(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<int> labels;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    int v = 0;
    const auto [ptr, ec] = std::from_chars(view.data(), view.data() + view.size(), v);
    if (ec != std::errc() || ptr != view.data() + view.size() || v < -1) {
      throw LoadError(path.string() + ": line " + std::to_string(line_no) +
                      ": invalid label '" + std::string(view) + "'");
    }
    labels.push_back(v);
  }
  return labels;
}

void save_labels(const std::vector<int>& labels, const std::filesystem::path& path) {
  std::string out;
  for (int l : labels) {
    out += std::to_string(l);
    out.push_back('\n');
  }
  write_file(path, out);
}

}  // namespace mbridge
