#include "dtml/pipeline.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <string>

#include "dtml/datakit.hpp"
#include "dtml/errors.hpp"

namespace dtml {

const char* nn_target_name(NnTarget target) {
  return target == NnTarget::Gallery ? "gallery" : "labels";
}

NnTarget nn_target_from_name(const std::string& name) {
  if (name == "gallery") return NnTarget::Gallery;
  if (name == "labels") return NnTarget::Labels;
  throw ValidationError("unknown nn target: " + name);
}

int LabelCodebook::to_index(int external_id) const {
  const auto it =
      std::lower_bound(class_ids.begin(), class_ids.end(), external_id);
  if (it == class_ids.end() || *it != external_id) {
    throw DataError("unknown class id " + std::to_string(external_id));
  }
  return static_cast<int>(it - class_ids.begin());
}

int LabelCodebook::to_id(int index) const {
  if (index < 0 || index >= class_count()) {
    throw ValidationError("class index out of range");
  }
  return class_ids[static_cast<std::size_t>(index)];
}

Matrix one_hot(const std::vector<int>& labels, int c) {
  if (c < 1) throw ValidationError("one_hot: class count must be >= 1");
  Matrix y = Matrix::Zero(c, static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= c) {
      throw ValidationError("one_hot: label " + std::to_string(labels[i]) +
                            " out of range [0, " + std::to_string(c) + ")");
    }
    y(labels[i], static_cast<Eigen::Index>(i)) = 1.0;
  }
  return y;
}

TrainedModel train(const Matrix& x, const std::vector<int>& labels,
                   const TrainParams& params) {
  if (static_cast<Eigen::Index>(labels.size()) != x.cols()) {
    throw ValidationError("train: one label per sample column required");
  }

  TrainedModel model;
  const std::set<int> unique_ids(labels.begin(), labels.end());
  model.codebook.class_ids.assign(unique_ids.begin(), unique_ids.end());
  const int c = model.codebook.class_count();
  if (c < 2) throw ValidationError("train: at least 2 classes required");

  model.gallery_labels.reserve(labels.size());
  for (int label : labels) {
    model.gallery_labels.push_back(model.codebook.to_index(label));
  }

  const Matrix xn = params.normalize ? normalize_columns(x) : x;
  model.latlrr =
      latlrr_fit(xn, params.lambda1, params.lambda2, params.latlrr);
  const Matrix a = principal_features(model.latlrr, xn);
  const Matrix b = salient_features(model.latlrr, xn);
  model.projection = fit_projection(xn, a);

  const Matrix y = one_hot(model.gallery_labels, c);
  if (params.mode == Mode::Full) {
    model.dtml =
        dtml_fit(a, b, y, params.lambda3, params.lambda4, params.dtml);
  } else {
    const double lambda =
        params.mode == Mode::SalientOnly ? params.lambda4 : params.lambda3;
    model.dtml = fit_ablation(params.mode, a, b, y, lambda);
  }

  model.gallery = model.dtml.w1 * a + model.dtml.w2 * b;
  model.normalize = params.normalize;
  model.nn_target = params.nn_target;
  return model;
}

Matrix embed(const TrainedModel& model, const Matrix& samples) {
  if (samples.rows() != model.latlrr.l.cols()) {
    throw ValidationError("embed: sample dimension mismatch");
  }
  const Matrix sn =
      model.normalize ? normalize_columns(samples) : samples;
  return model.dtml.w1 * (model.projection.p * sn) +
         model.dtml.w2 * (model.latlrr.l * sn);
}

std::vector<int> predict(const TrainedModel& model, const Matrix& samples) {
  const Matrix emb = embed(model, samples);
  const int c = model.codebook.class_count();

  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(emb.cols()));
  for (Eigen::Index j = 0; j < emb.cols(); ++j) {
    int best_class = 0;
    double best = std::numeric_limits<double>::infinity();
    if (model.nn_target == NnTarget::Gallery) {
      for (Eigen::Index g = 0; g < model.gallery.cols(); ++g) {
        const double d = (emb.col(j) - model.gallery.col(g)).squaredNorm();
        if (d < best) {
          best = d;
          best_class = model.gallery_labels[static_cast<std::size_t>(g)];
        }
      }
    } else {
      for (int k = 0; k < c; ++k) {
        Vector vertex = Vector::Zero(c);
        vertex(k) = 1.0;
        const double d = (emb.col(j) - vertex).squaredNorm();
        if (d < best) {
          best = d;
          best_class = k;
        }
      }
    }
    out.push_back(best_class);
  }
  return out;
}

}  // namespace dtml
