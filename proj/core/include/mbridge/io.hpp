#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "mbridge/types.hpp"

namespace mbridge {

enum class FileFormat { csv, binary };

FileFormat parse_file_format(std::string_view name);

// Binary layout: "MBRG", u32 version (1), u32 n, u32 d, then n*d float32,
// all little-endian, row-major. Values are stored as float32, so a binary
// round trip is exact for matrices whose entries are float-representable.
//
// CSV layout: one row per line, ',' separator, '.' decimal, no header.
FeatureMatrix load_features(const std::filesystem::path& path, FileFormat format);
void save_features(const FeatureMatrix& m, const std::filesystem::path& path,
                   FileFormat format);

// Raw matrix variants of the above (cost matrices, memory banks).
Matrix load_matrix(const std::filesystem::path& path, FileFormat format);
void save_matrix(const Matrix& m, const std::filesystem::path& path, FileFormat format);

// One integer per line; -1 marks an outlier.
std::vector<int> load_labels(const std::filesystem::path& path);
void save_labels(const std::vector<int>& labels, const std::filesystem::path& path);

}  // namespace mbridge
