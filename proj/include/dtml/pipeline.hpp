#pragma once

#include <string>
#include <vector>

#include "dtml/dtml.hpp"
#include "dtml/latlrr.hpp"
#include "dtml/matrix.hpp"
#include "dtml/projector.hpp"

namespace dtml {

// What test embeddings are matched against: the embedded training samples
// (default) or the one-hot label vertices.
enum class NnTarget { Gallery, Labels };

const char* nn_target_name(NnTarget target);
NnTarget nn_target_from_name(const std::string& name);

// Bijective map between external class ids and dense indices 0..c-1,
// ascending by external id.
struct LabelCodebook {
  std::vector<int> class_ids;

  int class_count() const { return static_cast<int>(class_ids.size()); }
  int to_index(int external_id) const;  // throws DataError on unknown id
  int to_id(int index) const;
};

struct TrainParams {
  double lambda1 = 1.0;
  double lambda2 = 0.1;
  double lambda3 = 0.1;
  double lambda4 = 0.1;
  SolverOptions latlrr;
  FitOptions dtml;
  bool normalize = true;  // column L2 normalization before decomposition
  Mode mode = Mode::Full;
  NnTarget nn_target = NnTarget::Gallery;
};

struct TrainedModel {
  LatLrrModel latlrr;
  DtmlModel dtml;
  ProjectionMatrix projection;
  LabelCodebook codebook;
  Matrix gallery;                   // c x n, w1*XZ + w2*LX per training sample
  std::vector<int> gallery_labels;  // internal indices
  bool normalize = true;
  NnTarget nn_target = NnTarget::Gallery;
};

// c x n one-hot encoding of internal label indices.
Matrix one_hot(const std::vector<int>& labels, int c);

// Decompose the (optionally normalized) training matrix, fit the projection
// and the transformation matrices, and store the embedded training gallery.
// labels holds external class ids, one per column of x; at least two classes.
TrainedModel train(const Matrix& x, const std::vector<int>& labels,
                   const TrainParams& params = {});

// w1*(P*samples) + w2*(L*samples), after the same normalization used at
// training time.
Matrix embed(const TrainedModel& model, const Matrix& samples);

// Internal class index of the Euclidean-nearest reference column for each
// sample; ties break to the lowest reference index.
std::vector<int> predict(const TrainedModel& model, const Matrix& samples);

}  // namespace dtml
