#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dtml/matrix.hpp"

namespace dtml {

// Samples are columns of x. image_shape, when present, gives the (height,
// width) of the raster-order pixel layout inside each column, for PGM export.
struct Dataset {
  Matrix x;
  std::vector<int> labels;
  std::optional<std::pair<int, int>> image_shape;
};

struct SplitSpec {
  int train_per_class = 1;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<int> train_idx;
  std::vector<int> test_idx;
};

// CSV layout on disk: one sample per row, features as columns, comma
// delimited, optional header row auto-detected. Labels: one integer per
// line. Numbers are written with shortest round-trip precision (<= 17
// significant digits) so save -> load is lossless.
Dataset load_dataset(const std::string& matrix_path,
                     const std::string& labels_path);
Matrix load_matrix_csv(const std::string& path);
void save_matrix_csv(const Matrix& x, const std::string& path);
void save_labels_csv(const std::vector<int>& labels, const std::string& path);

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double value);

// Scale every nonzero column to unit L2 norm; zero columns pass through.
Matrix normalize_columns(const Matrix& x);

// Exactly train_per_class indices per class in train, the rest in test; both
// sorted ascending. Deterministic given the seed (classes are processed in
// ascending label order, each shuffled by one shared generator).
SplitIndices stratified_split(const std::vector<int>& labels,
                              const SplitSpec& spec);

// Union-of-subspaces generator: per class, a random orthonormal basis (QR of
// a Gaussian matrix) times Gaussian coefficients, with a constant offset on
// the first coefficient row so classes have distinct centroids (zero-mean
// coefficients would make each class antipodally symmetric and therefore
// invisible to any linear map). Sparse spikes of +/- spike_magnitude are then
// planted on a Bernoulli(noise_fraction) support. Deterministic per seed.
Dataset synth_subspace_dataset(int classes, int subspace_dim, int ambient_dim,
                               int per_class, double noise_fraction,
                               double spike_magnitude, std::uint64_t seed);

// Fraction of positions where pred == truth.
double accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

// 8-bit binary PGM (P5), min-max scaled to 0..255; a constant image maps to
// all-128. The column stores pixels in raster (row-major) order.
void write_image_pgm(const Vector& column, std::pair<int, int> shape,
                     const std::string& path);

}  // namespace dtml
