#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "planehash/geometry.hpp"

namespace planehash {

enum class SyntheticKind { GaussianBlobs, UnitSphere, TwoClassSeparable };

std::string_view to_string(SyntheticKind k);
SyntheticKind parse_synthetic_kind(std::string_view s);

struct SyntheticConfig {
  SyntheticKind kind = SyntheticKind::GaussianBlobs;
  Eigen::Index n = 1000;
  Eigen::Index d = 16;
  int classes = 2;
  std::uint64_t seed = 0;
  bool normalize = false;
  /// gaussian_blobs: norm of each class mean.
  double separation = 4.0;
  /// two_class_separable: minimum |a'x| kept around the hidden hyperplane.
  double margin = 0.1;
};

/// Deterministic synthetic datasets (all labeled):
///   gaussian_blobs       - class c mean = separation * g_c/||g_c||, g_c ~ N(0, I);
///                          point i has label i mod classes and adds N(0, I) noise.
///   unit_sphere          - N(0, I) draws scaled to unit norm; label 0.
///   two_class_separable  - hidden unit direction a ~ N(0, I) normalized; x ~ N(0, I)
///                          redrawn until |a'x| >= margin; label 1 if a'x > 0 else 0.
/// With `normalize`, every row is scaled to unit l2 norm afterwards.
Dataset gen_synthetic(const SyntheticConfig& config);

enum class DataFormat { Csv, Binary };

/// .csv selects Csv; anything else is Binary.
DataFormat format_from_path(const std::string& path);

/// CSV layout: a header line "# planehash n=<n> d=<d> labels=<0|1>", then n
/// rows of "[label,]f_1,...,f_d" with features printed to 17 significant digits.
std::string dataset_to_csv(const Dataset& data);
Dataset parse_csv(std::string_view text);

/// Binary layout, little-endian: char[4] "PHDS", u32 version (1), u64 n, u64 d,
/// u32 flags (bit 0: labels present), then n rows of f64 in row-major order;
/// each row is [label,] f_1..f_d with the label stored as f64.
std::string dataset_to_binary(const Dataset& data);
Dataset parse_binary(std::string_view bytes);

/// Writes through a temporary file and a rename.
void write_dataset(const Dataset& data, const std::string& path, DataFormat format);
void write_dataset(const Dataset& data, const std::string& path);

/// Reads and validates a dataset. Errors are ParseError with a 1-based data
/// row (header excluded) and 1-based column where they apply.
Dataset ingest(const std::string& path, DataFormat format);
Dataset ingest(const std::string& path);

/// Atomic text/binary file write (temp + rename) and whole-file read.
void write_file_atomic(const std::string& path, std::string_view contents);
std::string read_file(const std::string& path);

}  // namespace planehash
