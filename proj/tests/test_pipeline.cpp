#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>
#include <string>
#include <vector>

#include "dtml/datakit.hpp"
#include "dtml/errors.hpp"
#include "dtml/pipeline.hpp"
#include "dtml/rng.hpp"

#include "test_util.hpp"

using dtml::Matrix;

namespace {

// Noise-free axis-aligned classes: class k lives on coordinate axis k with
// varying positive scales, so any reasonable embedding keeps them apart.
dtml::Dataset axes_dataset(int classes, int per_class, int ambient) {
  dtml::Dataset ds;
  ds.x = Matrix::Zero(ambient, classes * per_class);
  for (int k = 0; k < classes; ++k) {
    for (int j = 0; j < per_class; ++j) {
      const int col = k * per_class + j;
      ds.x(k, col) = 1.0 + 0.1 * j;
      ds.labels.push_back(k);
    }
  }
  return ds;
}

dtml::TrainParams axes_params() {
  dtml::TrainParams p;
  p.lambda1 = 0.5;
  // high sparse penalty + tight solver keep the decomposition's sparse part
  // at zero, so the projection system stays comfortably consistent even
  // though the data matrix is wide
  p.lambda2 = 10.0;
  p.latlrr.tol = 1e-8;
  p.latlrr.max_iter = 500;
  return p;
}

struct SynthFixture {
  dtml::Dataset ds;
  std::vector<int> train_labels, test_labels;
  Matrix train_x, test_x;

  SynthFixture() {
    ds = dtml::synth_subspace_dataset(5, 10, 50, 20, 0.05, 1.0, 7);
    dtml::SplitSpec spec;
    spec.train_per_class = 10;
    spec.seed = 1000;
    const auto split = dtml::stratified_split(ds.labels, spec);
    train_x = Matrix(ds.x.rows(), split.train_idx.size());
    test_x = Matrix(ds.x.rows(), split.test_idx.size());
    for (size_t i = 0; i < split.train_idx.size(); ++i) {
      train_x.col(i) = ds.x.col(split.train_idx[i]);
      train_labels.push_back(ds.labels[split.train_idx[i]]);
    }
    for (size_t i = 0; i < split.test_idx.size(); ++i) {
      test_x.col(i) = ds.x.col(split.test_idx[i]);
      test_labels.push_back(ds.labels[split.test_idx[i]]);
    }
  }

  dtml::TrainParams params() const {
    dtml::TrainParams p;
    p.lambda1 = 0.5;
    p.lambda2 = 1.0;
    p.lambda3 = 0.1;
    p.lambda4 = 0.1;
    return p;
  }
};

std::vector<int> to_internal(const dtml::LabelCodebook& cb,
                             const std::vector<int>& external) {
  std::vector<int> out;
  out.reserve(external.size());
  for (int id : external) out.push_back(cb.to_index(id));
  return out;
}

}  // namespace

TEST_CASE("one_hot places a single unit per column") {
  const Matrix y = dtml::one_hot({0, 2, 1}, 3);
  REQUIRE(y.rows() == 3);
  REQUIRE(y.cols() == 3);
  CHECK(y(0, 0) == 1.0);
  CHECK(y(2, 1) == 1.0);
  CHECK(y(1, 2) == 1.0);
  CHECK(y.sum() == 3.0);
  for (int j = 0; j < 3; ++j) CHECK(y.col(j).sum() == 1.0);

  CHECK_THROWS_AS(dtml::one_hot({0, 3}, 3), dtml::ValidationError);
  CHECK_THROWS_AS(dtml::one_hot({-1}, 3), dtml::ValidationError);
  CHECK_THROWS_AS(dtml::one_hot({0}, 0), dtml::ValidationError);
}

TEST_CASE("codebook maps between external ids and dense indices") {
  const auto ds = axes_dataset(2, 4, 5);
  std::vector<int> ext = {10, 10, 10, 10, 3, 3, 3, 3};
  const auto model = dtml::train(ds.x, ext, axes_params());
  REQUIRE(model.codebook.class_count() == 2);
  CHECK(model.codebook.class_ids == std::vector<int>{3, 10});
  CHECK(model.codebook.to_index(3) == 0);
  CHECK(model.codebook.to_index(10) == 1);
  CHECK(model.codebook.to_id(0) == 3);
  CHECK(model.codebook.to_id(1) == 10);
  CHECK_THROWS_AS(model.codebook.to_index(99), dtml::DataError);
}

TEST_CASE("axis-aligned classes classify themselves perfectly") {
  const auto ds = axes_dataset(3, 8, 6);
  const auto model = dtml::train(ds.x, ds.labels, axes_params());
  CHECK(model.latlrr.converged);
  CHECK(model.dtml.converged);

  const auto pred = dtml::predict(model, ds.x);
  const auto truth = to_internal(model.codebook, ds.labels);
  CHECK(dtml::accuracy(pred, truth) == 1.0);
}

TEST_CASE("training objective never increases across sweeps") {
  const auto ds = axes_dataset(3, 8, 6);
  const auto model = dtml::train(ds.x, ds.labels, axes_params());
  REQUIRE(model.dtml.objective_trace.size() >= 2);
  for (size_t i = 1; i < model.dtml.objective_trace.size(); ++i) {
    CHECK(model.dtml.objective_trace[i] <= model.dtml.objective_trace[i - 1] + 1e-12);
  }
}

TEST_CASE("embedding matches the stored gallery on training samples") {
  const auto ds = axes_dataset(3, 8, 6);
  const auto model = dtml::train(ds.x, ds.labels, axes_params());
  const Matrix e = dtml::embed(model, ds.x);
  REQUIRE(e.rows() == model.gallery.rows());
  REQUIRE(e.cols() == model.gallery.cols());
  CHECK((e - model.gallery).norm() <=
        1e-8 * std::max(1.0, model.gallery.norm()));
}

TEST_CASE("embedding is linear when normalization is off") {
  const auto ds = axes_dataset(3, 8, 6);
  auto params = axes_params();
  params.normalize = false;
  const auto model = dtml::train(ds.x, ds.labels, params);

  dtml::Rng rng(21);
  const Matrix u = testutil::random_matrix(rng, 6, 1);
  const Matrix v = testutil::random_matrix(rng, 6, 1);
  const Matrix lhs = dtml::embed(model, 2.0 * u - 3.0 * v);
  const Matrix rhs = 2.0 * dtml::embed(model, u) - 3.0 * dtml::embed(model, v);
  CHECK((lhs - rhs).norm() <= 1e-10 * std::max(1.0, rhs.norm()));
  CHECK(dtml::embed(model, Matrix::Zero(6, 2)).norm() == 0.0);
}

TEST_CASE("nearest-neighbor ties break to the lowest gallery column") {
  const auto ds = axes_dataset(2, 4, 5);
  auto model = dtml::train(ds.x, ds.labels, axes_params());

  // two identical reference columns with different labels: the earlier
  // column must win
  dtml::Rng rng(22);
  const Matrix ref = testutil::random_matrix(rng, model.gallery.rows(), 1);
  model.gallery = Matrix(model.gallery.rows(), 2);
  model.gallery.col(0) = ref.col(0);
  model.gallery.col(1) = ref.col(0);
  model.gallery_labels = {1, 0};

  // query whose embedding is irrelevant: both references tie exactly
  const auto pred = dtml::predict(model, ds.x.col(0));
  REQUIRE(pred.size() == 1);
  CHECK(pred[0] == 1);
}

TEST_CASE("gallery permutation with labels leaves predictions unchanged") {
  SynthFixture fx;
  auto model = dtml::train(fx.train_x, fx.train_labels, fx.params());
  const auto before = dtml::predict(model, fx.test_x);

  const int n = static_cast<int>(model.gallery.cols());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  dtml::Rng rng(23);
  rng.shuffle(perm);
  Matrix g(model.gallery.rows(), n);
  std::vector<int> gl(n);
  for (int i = 0; i < n; ++i) {
    g.col(i) = model.gallery.col(perm[i]);
    gl[i] = model.gallery_labels[perm[i]];
  }
  model.gallery = g;
  model.gallery_labels = gl;

  CHECK(dtml::predict(model, fx.test_x) == before);
}

TEST_CASE("synthetic benchmark accuracy clears the bar") {
  SynthFixture fx;
  const auto model = dtml::train(fx.train_x, fx.train_labels, fx.params());
  const auto pred = dtml::predict(model, fx.test_x);
  const auto truth = to_internal(model.codebook, fx.test_labels);
  CHECK(dtml::accuracy(pred, truth) >= 0.9);
}

TEST_CASE("label-vertex matching works as an alternative target") {
  SynthFixture fx;
  auto params = fx.params();
  params.nn_target = dtml::NnTarget::Labels;
  const auto model = dtml::train(fx.train_x, fx.train_labels, params);
  CHECK(model.nn_target == dtml::NnTarget::Labels);
  const auto pred = dtml::predict(model, fx.test_x);
  const auto truth = to_internal(model.codebook, fx.test_labels);
  CHECK(dtml::accuracy(pred, truth) >= 0.9);
}

TEST_CASE("training is deterministic") {
  SynthFixture fx;
  const auto m1 = dtml::train(fx.train_x, fx.train_labels, fx.params());
  const auto m2 = dtml::train(fx.train_x, fx.train_labels, fx.params());
  CHECK((m1.dtml.w1 - m2.dtml.w1).norm() == 0.0);
  CHECK((m1.dtml.w2 - m2.dtml.w2).norm() == 0.0);
  CHECK((m1.gallery - m2.gallery).norm() == 0.0);
  CHECK((m1.latlrr.z - m2.latlrr.z).norm() == 0.0);
  CHECK(m1.gallery_labels == m2.gallery_labels);
}

TEST_CASE("degenerate training inputs are rejected") {
  const auto ds = axes_dataset(1, 6, 5);
  CHECK_THROWS_AS(dtml::train(ds.x, ds.labels, axes_params()),
                  dtml::ValidationError);

  const auto two = axes_dataset(2, 3, 5);
  std::vector<int> short_labels(two.labels.begin(), two.labels.end() - 1);
  CHECK_THROWS_AS(dtml::train(two.x, short_labels, axes_params()),
                  dtml::ValidationError);

  auto bad = axes_params();
  bad.lambda3 = 0.0;
  CHECK_THROWS_AS(dtml::train(two.x, two.labels, bad),
                  dtml::ValidationError);
}

TEST_CASE("nn target names round trip") {
  using dtml::NnTarget;
  CHECK(std::string(dtml::nn_target_name(NnTarget::Gallery)) == "gallery");
  CHECK(std::string(dtml::nn_target_name(NnTarget::Labels)) == "labels");
  CHECK(dtml::nn_target_from_name("gallery") == NnTarget::Gallery);
  CHECK(dtml::nn_target_from_name("labels") == NnTarget::Labels);
  CHECK_THROWS_AS(dtml::nn_target_from_name("nope"), dtml::ValidationError);
}
