#include "dtml/model_io.hpp"

#include <fstream>

#include "dtml/errors.hpp"
#include "json.hpp"

namespace dtml {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data(static_cast<std::size_t>(m.size()));
  Eigen::Map<Matrix>(data.data(), m.rows(), m.cols()) = m;  // column-major
  j["data"] = std::move(data);
  return j;
}

Matrix matrix_from_json(const json& j, const std::string& name) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 ||
      static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw DataError("model file: bad dimensions for " + name);
  }
  Matrix m = Eigen::Map<const Matrix>(data.data(), rows, cols);
  if (!m.allFinite()) {
    throw DataError("model file: non-finite entries in " + name);
  }
  return m;
}

}  // namespace

void save_model(const TrainedModel& model, const std::string& path) {
  json j;
  j["format"] = "dtml-model";
  j["version"] = 1;
  j["mode"] = mode_name(model.dtml.mode);
  j["nn_target"] = nn_target_name(model.nn_target);
  j["normalize"] = model.normalize;
  j["lambda1"] = model.latlrr.lambda1;
  j["lambda2"] = model.latlrr.lambda2;
  j["lambda3"] = model.dtml.lambda3;
  j["lambda4"] = model.dtml.lambda4;
  j["class_ids"] = model.codebook.class_ids;
  j["gallery_labels"] = model.gallery_labels;
  j["latlrr_iterations"] = model.latlrr.iterations();
  j["latlrr_residual"] = model.latlrr.final_residual();
  j["latlrr_converged"] = model.latlrr.converged;
  j["objective_final"] = model.dtml.objective_final();
  j["w1"] = matrix_to_json(model.dtml.w1);
  j["w2"] = matrix_to_json(model.dtml.w2);
  j["l"] = matrix_to_json(model.latlrr.l);
  j["p"] = matrix_to_json(model.projection.p);
  j["gallery"] = matrix_to_json(model.gallery);

  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << j.dump(1, '\t') << '\n';
  if (!out) throw DataError("write failed: " + path);
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path + ": not a valid model file (" + e.what() + ")");
  }

  TrainedModel model;
  try {
    if (j.at("format").get<std::string>() != "dtml-model") {
      throw DataError(path + ": not a model file");
    }
    if (j.at("version").get<int>() != 1) {
      throw DataError(path + ": unsupported model version");
    }
    model.dtml.mode = mode_from_name(j.at("mode").get<std::string>());
    model.nn_target =
        nn_target_from_name(j.at("nn_target").get<std::string>());
    model.normalize = j.at("normalize").get<bool>();
    model.latlrr.lambda1 = j.at("lambda1").get<double>();
    model.latlrr.lambda2 = j.at("lambda2").get<double>();
    model.dtml.lambda3 = j.at("lambda3").get<double>();
    model.dtml.lambda4 = j.at("lambda4").get<double>();
    model.codebook.class_ids = j.at("class_ids").get<std::vector<int>>();
    model.gallery_labels = j.at("gallery_labels").get<std::vector<int>>();
    model.latlrr.converged = j.at("latlrr_converged").get<bool>();
    model.dtml.w1 = matrix_from_json(j.at("w1"), "w1");
    model.dtml.w2 = matrix_from_json(j.at("w2"), "w2");
    model.latlrr.l = matrix_from_json(j.at("l"), "l");
    model.projection.p = matrix_from_json(j.at("p"), "p");
    model.gallery = matrix_from_json(j.at("gallery"), "gallery");
    model.dtml.converged = true;
    model.dtml.objective_trace = {j.at("objective_final").get<double>()};
  } catch (const json::exception& e) {
    throw DataError(path + ": malformed model file (" + e.what() + ")");
  }

  if (model.gallery.cols() !=
      static_cast<Eigen::Index>(model.gallery_labels.size())) {
    throw DataError(path + ": gallery/label size mismatch");
  }
  if (model.codebook.class_count() < 2) {
    throw DataError(path + ": model must have at least 2 classes");
  }
  return model;
}

}  // namespace dtml
