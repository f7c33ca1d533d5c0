#include "dtml/datakit.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include "dtml/errors.hpp"
#include "dtml/rng.hpp"

namespace dtml {

namespace {

// Offset added to the first coefficient row of every synthetic class; gives
// each class a distinct centroid along its own leading basis direction.
constexpr double kClassMeanOffset = 5.0;

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view field, double& out) {
  field = trim(field);
  if (field.empty()) return false;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc{} && result.ptr == end;
}

bool parse_int(std::string_view field, long long& out) {
  field = trim(field);
  if (field.empty()) return false;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc{} && result.ptr == end;
}

std::vector<std::string_view> split_fields(const std::string& line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.emplace_back(line.data() + start, line.size() - start);
      break;
    }
    fields.emplace_back(line.data() + start, pos - start);
    start = pos + 1;
  }
  return fields;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  // Drop trailing blank lines; blank lines elsewhere are parse errors.
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

Matrix load_matrix_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw DataError(path + ": empty file");

  std::vector<std::vector<double>> rows;
  std::size_t start = 0;
  {
    // Header row: present iff any first-line field is not a number.
    double ignored;
    const auto fields = split_fields(lines[0]);
    const bool header = !std::all_of(
        fields.begin(), fields.end(),
        [&](std::string_view f) { return parse_double(f, ignored); });
    if (header) start = 1;
  }
  if (start == lines.size()) throw DataError(path + ": no data rows");

  std::size_t width = 0;
  for (std::size_t i = start; i < lines.size(); ++i) {
    const auto fields = split_fields(lines[i]);
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::string_view f : fields) {
      double v;
      if (!parse_double(f, v)) {
        throw DataError(path + ": parse error at line " +
                        std::to_string(i + 1));
      }
      if (!std::isfinite(v)) {
        throw DataError(path + ": non-finite value at line " +
                        std::to_string(i + 1));
      }
      row.push_back(v);
    }
    if (width == 0) {
      width = row.size();
    } else if (row.size() != width) {
      throw DataError(path + ": inconsistent column count at line " +
                      std::to_string(i + 1));
    }
    rows.push_back(std::move(row));
  }

  // File stores one sample per row; in memory samples are columns.
  Matrix x(static_cast<Eigen::Index>(width),
           static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
          rows[i][j];
    }
  }
  return x;
}

Dataset load_dataset(const std::string& matrix_path,
                     const std::string& labels_path) {
  Dataset data;
  data.x = load_matrix_csv(matrix_path);

  const std::vector<std::string> lines = read_lines(labels_path);
  std::size_t start = 0;
  if (!lines.empty()) {
    long long ignored;
    if (!parse_int(lines[0], ignored)) start = 1;  // header
  }
  for (std::size_t i = start; i < lines.size(); ++i) {
    long long v;
    if (!parse_int(lines[i], v)) {
      throw DataError(labels_path + ": parse error at line " +
                      std::to_string(i + 1));
    }
    data.labels.push_back(static_cast<int>(v));
  }
  if (static_cast<Eigen::Index>(data.labels.size()) != data.x.cols()) {
    throw DataError("label count (" + std::to_string(data.labels.size()) +
                    ") does not match sample count (" +
                    std::to_string(data.x.cols()) + ")");
  }
  return data;
}

void save_matrix_csv(const Matrix& x, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (i > 0) out << ',';
      out << format_double(x(i, j));
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

void save_labels_csv(const std::vector<int>& labels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  for (int label : labels) out << label << '\n';
  if (!out) throw DataError("write failed: " + path);
}

Matrix normalize_columns(const Matrix& x) {
  Matrix out = x;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double norm = out.col(j).norm();
    if (norm > 0.0) out.col(j) /= norm;
  }
  return out;
}

SplitIndices stratified_split(const std::vector<int>& labels,
                              const SplitSpec& spec) {
  if (labels.empty()) throw ValidationError("stratified_split: no labels");
  if (spec.train_per_class < 1) {
    throw ValidationError("stratified_split: train_per_class must be >= 1");
  }

  std::map<int, std::vector<int>> by_class;  // ascending class order
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[labels[i]].push_back(static_cast<int>(i));
  }

  Rng rng(spec.seed);
  SplitIndices split;
  for (auto& [label, members] : by_class) {
    if (static_cast<int>(members.size()) < spec.train_per_class + 1) {
      throw DataError("stratified_split: class " + std::to_string(label) +
                      " has " + std::to_string(members.size()) +
                      " samples, needs at least " +
                      std::to_string(spec.train_per_class + 1));
    }
    rng.shuffle(members);
    for (std::size_t k = 0; k < members.size(); ++k) {
      (k < static_cast<std::size_t>(spec.train_per_class) ? split.train_idx
                                                          : split.test_idx)
          .push_back(members[k]);
    }
  }
  std::sort(split.train_idx.begin(), split.train_idx.end());
  std::sort(split.test_idx.begin(), split.test_idx.end());
  return split;
}

Dataset synth_subspace_dataset(int classes, int subspace_dim, int ambient_dim,
                               int per_class, double noise_fraction,
                               double spike_magnitude, std::uint64_t seed) {
  if (classes < 1) throw ValidationError("synth: classes must be >= 1");
  if (subspace_dim < 1 || subspace_dim >= ambient_dim) {
    throw ValidationError("synth: need 1 <= subspace_dim < ambient_dim");
  }
  if (per_class < 1) throw ValidationError("synth: per_class must be >= 1");
  if (!(noise_fraction >= 0.0 && noise_fraction < 1.0)) {
    throw ValidationError("synth: noise_fraction must be in [0, 1)");
  }
  if (spike_magnitude < 0.0) {
    throw ValidationError("synth: spike_magnitude must be >= 0");
  }

  Rng rng(seed);
  Dataset data;
  data.x.resize(ambient_dim, static_cast<Eigen::Index>(classes) * per_class);

  // Stream order (fixed contract): per class, basis Gaussians column by
  // column, then coefficient Gaussians column by column; after all classes,
  // one Bernoulli per entry (column-major) plus one sign draw per spike.
  for (int k = 0; k < classes; ++k) {
    Matrix g(ambient_dim, subspace_dim);
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.gaussian();
    }
    const Matrix basis =
        Eigen::HouseholderQR<Matrix>(g).householderQ() *
        Matrix::Identity(ambient_dim, subspace_dim);

    Matrix coeff(subspace_dim, per_class);
    for (Eigen::Index j = 0; j < coeff.cols(); ++j) {
      for (Eigen::Index i = 0; i < coeff.rows(); ++i) {
        coeff(i, j) = rng.gaussian();
      }
    }
    coeff.row(0).array() += kClassMeanOffset;

    data.x.middleCols(static_cast<Eigen::Index>(k) * per_class, per_class) =
        basis * coeff;
    data.labels.insert(data.labels.end(), per_class, k);
  }

  for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
    for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
      if (rng.bernoulli(noise_fraction)) {
        data.x(i, j) += rng.bernoulli(0.5) ? -spike_magnitude
                                           : spike_magnitude;
      }
    }
  }
  return data;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) {
    throw ValidationError("accuracy: length mismatch");
  }
  if (pred.empty()) throw ValidationError("accuracy: empty input");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == truth[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

void write_image_pgm(const Vector& column, std::pair<int, int> shape,
                     const std::string& path) {
  const auto [h, w] = shape;
  if (h < 1 || w < 1 ||
      static_cast<Eigen::Index>(h) * w != column.size()) {
    throw ValidationError("write_image_pgm: shape does not match length");
  }

  const double lo = column.minCoeff();
  const double hi = column.maxCoeff();
  std::vector<unsigned char> bytes(static_cast<std::size_t>(column.size()));
  if (hi > lo) {
    const double scale = 255.0 / (hi - lo);
    for (Eigen::Index k = 0; k < column.size(); ++k) {
      const long v = std::lround((column(k) - lo) * scale);
      bytes[static_cast<std::size_t>(k)] =
          static_cast<unsigned char>(std::clamp(v, 0L, 255L));
    }
  } else {
    std::fill(bytes.begin(), bytes.end(), static_cast<unsigned char>(128));
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "P5\n" << w << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace dtml
