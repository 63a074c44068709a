#include "planehash/dataset_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "planehash/random.hpp"

namespace planehash {

static_assert(std::endian::native == std::endian::little, "dataset files are written in host order");

std::string_view to_string(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::GaussianBlobs: return "gaussian_blobs";
    case SyntheticKind::UnitSphere: return "unit_sphere";
    case SyntheticKind::TwoClassSeparable: return "two_class_separable";
  }
  return "?";
}

SyntheticKind parse_synthetic_kind(std::string_view s) {
  if (s == "gaussian_blobs") return SyntheticKind::GaussianBlobs;
  if (s == "unit_sphere") return SyntheticKind::UnitSphere;
  if (s == "two_class_separable") return SyntheticKind::TwoClassSeparable;
  throw InvalidInput("unknown synthetic kind '" + std::string(s) + "'");
}

Dataset gen_synthetic(const SyntheticConfig& c) {
  if (c.n < 1) throw InvalidInput("n must be at least 1");
  if (c.d < 2) throw InvalidInput("d must be at least 2");
  Rng rng(c.seed);
  Dataset out;
  out.points.resize(c.d, c.n);
  out.labels.resize(static_cast<std::size_t>(c.n));

  switch (c.kind) {
    case SyntheticKind::GaussianBlobs: {
      if (c.classes < 1) throw InvalidInput("classes must be at least 1");
      Matrix means = gaussian_matrix(rng, c.d, c.classes);
      for (int k = 0; k < c.classes; ++k) means.col(k) *= c.separation / means.col(k).norm();
      for (Eigen::Index i = 0; i < c.n; ++i) {
        const int label = static_cast<int>(i % c.classes);
        out.points.col(i) = means.col(label) + gaussian_vector(rng, c.d);
        out.labels[static_cast<std::size_t>(i)] = label;
      }
      break;
    }
    case SyntheticKind::UnitSphere:
      for (Eigen::Index i = 0; i < c.n; ++i) {
        Vector x = gaussian_vector(rng, c.d);
        out.points.col(i) = x / x.norm();
        out.labels[static_cast<std::size_t>(i)] = 0;
      }
      break;
    case SyntheticKind::TwoClassSeparable: {
      if (!(c.margin >= 0.0)) throw InvalidInput("margin must be nonnegative");
      Vector a = gaussian_vector(rng, c.d);
      a /= a.norm();
      for (Eigen::Index i = 0; i < c.n; ++i) {
        Vector x;
        double s = 0.0;
        do {
          x = gaussian_vector(rng, c.d);
          s = a.dot(x);
        } while (std::abs(s) < c.margin || s == 0.0);
        out.points.col(i) = x;
        out.labels[static_cast<std::size_t>(i)] = s > 0.0 ? 1 : 0;
      }
      break;
    }
  }
  if (c.normalize) normalize_columns(out.points);
  return out;
}

DataFormat format_from_path(const std::string& path) {
  return std::filesystem::path(path).extension() == ".csv" ? DataFormat::Csv : DataFormat::Binary;
}

namespace {

void print_double(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

void validate(const Dataset& data) {
  if (data.points.allFinite()) return;
  for (Eigen::Index i = 0; i < data.points.cols(); ++i)
    for (Eigen::Index j = 0; j < data.points.rows(); ++j)
      if (!std::isfinite(data.points(j, i)))
        throw ParseError(ParseError::Kind::NonFinite, std::size_t(i + 1), std::size_t(j + 1), "non-finite feature");
}

std::uint64_t parse_header_field(std::string_view header, std::string_view key) {
  const auto pos = header.find(key);
  if (pos == std::string_view::npos)
    throw ParseError(ParseError::Kind::BadHeader, 0, 0, "CSV header is missing '" + std::string(key) + "'");
  std::uint64_t v = 0;
  const char* begin = header.data() + pos + key.size();
  const auto res = std::from_chars(begin, header.data() + header.size(), v);
  if (res.ec != std::errc()) throw ParseError(ParseError::Kind::BadHeader, 0, 0, "bad CSV header value for " + std::string(key));
  return v;
}

std::string located(std::string_view what, std::size_t row, std::size_t col) {
  return std::string(what) + " at row " + std::to_string(row) + ", column " + std::to_string(col);
}

}  // namespace

std::string dataset_to_csv(const Dataset& data) {
  std::string out = "# planehash n=" + std::to_string(data.size()) + " d=" + std::to_string(data.dim()) +
                    " labels=" + (data.has_labels() ? "1" : "0") + "\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    if (data.has_labels()) out += std::to_string(data.labels[static_cast<std::size_t>(i)]) + ",";
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      if (j) out += ',';
      print_double(out, data.points(j, i));
    }
    out += '\n';
  }
  return out;
}

Dataset parse_csv(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
    throw ParseError(ParseError::Kind::EmptyDataset, 0, 0, "empty dataset file");
  auto next_line = [&text](std::string_view& line) {
    if (text.empty()) return false;
    const auto nl = text.find('\n');
    line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return true;
  };

  std::string_view header;
  next_line(header);
  if (!header.starts_with("# planehash")) throw ParseError(ParseError::Kind::BadHeader, 0, 0, "missing '# planehash' CSV header");
  const auto n = parse_header_field(header, "n=");
  const auto d = parse_header_field(header, "d=");
  const bool labels = parse_header_field(header, "labels=") != 0;
  if (n == 0) throw ParseError(ParseError::Kind::EmptyDataset, 0, 0, "dataset has no rows");
  if (d == 0) throw ParseError(ParseError::Kind::BadHeader, 0, 0, "dimension must be positive");

  Dataset data;
  data.points.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
  if (labels) data.labels.resize(n);
  const std::size_t fields = d + (labels ? 1 : 0);

  std::size_t row = 0;
  std::string_view line;
  while (next_line(line)) {
    if (line.empty() && text.empty()) break;
    ++row;
    if (row > n) throw ParseError(ParseError::Kind::DimensionMismatch, row, 0, "more rows than the header declares (row " + std::to_string(row) + ")");
    std::size_t col = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string_view cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      ++col;
      if (col > fields) throw ParseError(ParseError::Kind::DimensionMismatch, row, col, located("too many fields", row, col));
      const char* b = cell.data();
      const char* e = cell.data() + cell.size();
      while (b < e && *b == ' ') ++b;
      while (e > b && e[-1] == ' ') --e;
      if (labels && col == 1) {
        int v = 0;
        const auto res = std::from_chars(b, e, v);
        if (res.ec != std::errc() || res.ptr != e) throw ParseError(ParseError::Kind::MalformedRow, row, col, located("malformed label", row, col));
        data.labels[row - 1] = v;
      } else {
        double v = 0.0;
        const auto res = std::from_chars(b, e, v);
        if (res.ec != std::errc() || res.ptr != e || b == e)
          throw ParseError(ParseError::Kind::MalformedRow, row, col, located("malformed number", row, col));
        if (!std::isfinite(v)) throw ParseError(ParseError::Kind::NonFinite, row, col, located("non-finite value", row, col));
        data.points(static_cast<Eigen::Index>(col - 1 - (labels ? 1 : 0)), static_cast<Eigen::Index>(row - 1)) = v;
      }
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (col != fields) throw ParseError(ParseError::Kind::DimensionMismatch, row, col, located("too few fields", row, col));
  }
  if (row != n)
    throw ParseError(ParseError::Kind::DimensionMismatch, row, 0, "header declares " + std::to_string(n) + " rows, found " + std::to_string(row));
  return data;
}

namespace {

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(std::string_view& in) {
  if (in.size() < sizeof(T)) throw ParseError(ParseError::Kind::MalformedRow, 0, 0, "truncated binary dataset");
  T v;
  std::memcpy(&v, in.data(), sizeof(T));
  in.remove_prefix(sizeof(T));
  return v;
}

}  // namespace

std::string dataset_to_binary(const Dataset& data) {
  std::string out = "PHDS";
  put<std::uint32_t>(out, 1);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(data.size()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(data.dim()));
  put<std::uint32_t>(out, data.has_labels() ? 1u : 0u);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    if (data.has_labels()) put<double>(out, double(data.labels[static_cast<std::size_t>(i)]));
    for (Eigen::Index j = 0; j < data.dim(); ++j) put<double>(out, data.points(j, i));
  }
  return out;
}

Dataset parse_binary(std::string_view in) {
  if (in.empty()) throw ParseError(ParseError::Kind::EmptyDataset, 0, 0, "empty dataset file");
  if (in.size() < 4 || in.substr(0, 4) != "PHDS") throw ParseError(ParseError::Kind::BadHeader, 0, 0, "not a planehash binary dataset");
  in.remove_prefix(4);
  if (take<std::uint32_t>(in) != 1) throw ParseError(ParseError::Kind::BadHeader, 0, 0, "unsupported dataset version");
  const auto n = take<std::uint64_t>(in);
  const auto d = take<std::uint64_t>(in);
  const bool labels = (take<std::uint32_t>(in) & 1u) != 0;
  if (n == 0) throw ParseError(ParseError::Kind::EmptyDataset, 0, 0, "dataset has no rows");
  const std::size_t fields = d + (labels ? 1 : 0);
  if (in.size() != n * fields * sizeof(double))
    throw ParseError(ParseError::Kind::DimensionMismatch, 0, 0, "binary payload size does not match n x d");
  Dataset data;
  data.points.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
  if (labels) data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels) {
      const double l = take<double>(in);
      if (!std::isfinite(l) || l != std::floor(l)) throw ParseError(ParseError::Kind::MalformedRow, i + 1, 1, located("malformed label", i + 1, 1));
      data.labels[i] = static_cast<int>(l);
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double v = take<double>(in);
      if (!std::isfinite(v))
        throw ParseError(ParseError::Kind::NonFinite, i + 1, j + 1 + (labels ? 1 : 0), located("non-finite value", i + 1, j + 1 + (labels ? 1 : 0)));
      data.points(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return data;
}

void write_file_atomic(const std::string& path, std::string_view contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw InvalidInput("cannot open " + tmp + " for writing");
    os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!os) throw InvalidInput("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError(ParseError::Kind::Io, 0, 0, "cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_dataset(const Dataset& data, const std::string& path, DataFormat format) {
  validate(data);
  write_file_atomic(path, format == DataFormat::Csv ? dataset_to_csv(data) : dataset_to_binary(data));
}

void write_dataset(const Dataset& data, const std::string& path) { write_dataset(data, path, format_from_path(path)); }

Dataset ingest(const std::string& path, DataFormat format) {
  const std::string bytes = read_file(path);
  return format == DataFormat::Csv ? parse_csv(bytes) : parse_binary(bytes);
}

Dataset ingest(const std::string& path) { return ingest(path, format_from_path(path)); }

}  // namespace planehash
