#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "setti/data.hpp"
#include "setti/errors.hpp"
#include "setti/nn.hpp"
#include "setti/rng.hpp"

using namespace setti;

namespace {

double ce_at(const ModelParams& m, const Matrix& x, const std::vector<int>& y) {
  return cross_entropy_loss(forward(m, x), y);
}

// Central finite difference of the cross-entropy loss wrt one input entry.
double fd_input(const ModelParams& m, const Matrix& x, const std::vector<int>& y,
                Eigen::Index r, Eigen::Index c, double h) {
  Matrix xp = x, xm = x;
  xp(r, c) += h;
  xm(r, c) -= h;
  return (ce_at(m, xp, y) - ce_at(m, xm, y)) / (2 * h);
}

double fd_weight(ModelParams m, const Matrix& x, const std::vector<int>& y,
                 std::size_t layer, Eigen::Index r, Eigen::Index c, double h) {
  m.weights[layer](r, c) += h;
  const double up = ce_at(m, x, y);
  m.weights[layer](r, c) -= 2 * h;
  const double down = ce_at(m, x, y);
  return (up - down) / (2 * h);
}

double fd_bias(ModelParams m, const Matrix& x, const std::vector<int>& y,
               std::size_t layer, Eigen::Index k, double h) {
  m.biases[layer](k) += h;
  const double up = ce_at(m, x, y);
  m.biases[layer](k) -= 2 * h;
  const double down = ce_at(m, x, y);
  return (up - down) / (2 * h);
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)});
}

// Finite differences are only trustworthy away from relu/maxpool kinks.
bool near_kink(const ModelParams& m, const Matrix& x, double margin) {
  ForwardTrace t = forward_trace(m, x);
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const Matrix& in = t.acts[i];
    if (m.layers[i].kind == LayerKind::Relu) {
      if ((in.array().abs() < margin).any()) return true;
    }
    if (m.layers[i].kind == LayerKind::MaxPool1d) {
      const int P = m.layers[i].pool;
      const int W = m.shapes[i].width;
      const int Wout = m.shapes[i + 1].width;
      for (Eigen::Index b = 0; b < in.rows(); ++b) {
        for (int ch = 0; ch < m.shapes[i].channels; ++ch) {
          for (int ox = 0; ox < Wout; ++ox) {
            double best = -1e300, second = -1e300;
            for (int k = 0; k < P; ++k) {
              const double v = in(b, ch * W + ox * P + k);
              if (v > best) {
                second = best;
                best = v;
              } else if (v > second) {
                second = v;
              }
            }
            if (P > 1 && best - second < margin) return true;
          }
        }
      }
    }
  }
  return false;
}

void jitter_params(ModelParams& m, Rng& rng, double scale) {
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    if (!m.layers[i].has_params()) continue;
    for (Eigen::Index r = 0; r < m.weights[i].rows(); ++r)
      for (Eigen::Index c = 0; c < m.weights[i].cols(); ++c)
        m.weights[i](r, c) += scale * rng.normal();
    for (Eigen::Index k = 0; k < m.biases[i].size(); ++k)
      m.biases[i](k) += scale * rng.normal();
  }
}

void check_gradients_against_fd(const ModelParams& m, const Matrix& x,
                                const std::vector<int>& y) {
  const double h = 1e-4;
  GradientBundle g = backward(m, x, y);
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      CHECK(rel_err(g.input_grads(r, c), fd_input(m, x, y, r, c, h)) < 1e-3);
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    if (!m.layers[i].has_params()) continue;
    for (Eigen::Index r = 0; r < m.weights[i].rows(); ++r)
      for (Eigen::Index c = 0; c < m.weights[i].cols(); ++c)
        CHECK(rel_err(g.weight_grads[i](r, c), fd_weight(m, x, y, i, r, c, h)) < 1e-3);
    for (Eigen::Index k = 0; k < m.biases[i].size(); ++k)
      CHECK(rel_err(g.bias_grads[i](k), fd_bias(m, x, y, i, k, h)) < 1e-3);
  }
}

}  // namespace

TEST_CASE("build_classifier is deterministic") {
  const auto spec = mlp_spec(4, 2, 8);
  ModelParams a = build_classifier(spec, 4, 123);
  ModelParams b = build_classifier(spec, 4, 123);
  REQUIRE(a.weights.size() == b.weights.size());
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    CHECK(a.weights[i] == b.weights[i]);
    CHECK(a.biases[i] == b.biases[i]);
  }
}

TEST_CASE("init bound follows 1/sqrt(fan_in)") {
  ModelParams m = build_classifier({LayerSpec::dense(2, 2), LayerSpec::softmax()}, 2, 7);
  const double bound = 1.0 / std::sqrt(2.0);
  CHECK((m.weights[0].array().abs() <= bound).all());
}

TEST_CASE("Fig-4-style CNN composes on 115 features") {
  const auto spec = cnn_spec(115, 2);
  int convs = 0, pools = 0;
  for (const auto& l : spec) {
    if (l.kind == LayerKind::Conv1d) ++convs;
    if (l.kind == LayerKind::MaxPool1d) ++pools;
  }
  CHECK(convs == 3);
  CHECK(pools == 3);
  ModelParams m = build_classifier(spec, 115, 1);
  CHECK(m.output_width() == 2);
  // 115 -> 113 -> 56 -> 54 -> 27 -> 25 -> 12, flattened at 64 channels
  CHECK(m.shapes[m.shapes.size() - 3].features() == 64 * 12);
}

TEST_CASE("CNN spec skips pools that do not fit") {
  ModelParams m = build_classifier(cnn_spec(20, 2), 20, 3);
  CHECK(m.output_width() == 2);
  CHECK(forward(m, Matrix::Random(4, 20)).rows() == 4);
}

TEST_CASE("shape mismatch error names both layers") {
  std::vector<LayerSpec> bad = {LayerSpec::conv1d(1, 4, 3), LayerSpec::flatten(),
                                LayerSpec::dense(99, 2), LayerSpec::softmax()};
  try {
    build_classifier(bad, 10, 0);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("dense(99->2)") != std::string::npos);
    CHECK(msg.find("flatten") != std::string::npos);
  }
}

TEST_CASE("classifier must end in softmax") {
  CHECK_THROWS_AS(build_classifier({LayerSpec::dense(2, 2)}, 2, 0), ConfigError);
}

TEST_CASE("forward with zero weights gives uniform probabilities") {
  ModelParams m = build_classifier({LayerSpec::dense(3, 2), LayerSpec::softmax()}, 3, 0);
  m.weights[0].setZero();
  Matrix out = forward(m, Matrix::Random(5, 3));
  CHECK((out.array() - 0.5).abs().maxCoeff() < 1e-12);
}

TEST_CASE("softmax of logits (0, ln 3) is (0.25, 0.75)") {
  ModelParams m = build_classifier({LayerSpec::dense(1, 2), LayerSpec::softmax()}, 1, 0);
  m.weights[0].setZero();
  m.biases[0] << 0.0, std::log(3.0);
  Matrix x(1, 1);
  x << 0.42;
  Matrix out = forward(m, x);
  CHECK(out(0, 0) == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(out(0, 1) == doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("softmax rows sum to one and stay strictly positive") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    ModelParams m = build_classifier(mlp_spec(6, 3, 10), 6, trial);
    jitter_params(m, rng, 2.0);
    Matrix x(8, 6);
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = rng.uniform(-3, 3);
    Matrix out = forward(m, x);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      CHECK(std::abs(out.row(r).sum() - 1.0) < 1e-9);
      CHECK(out.row(r).minCoeff() > 0.0);
      CHECK(out.row(r).maxCoeff() < 1.0);
    }
  }
}

TEST_CASE("forward rejects width mismatch") {
  ModelParams m = build_classifier(mlp_spec(4, 2), 4, 0);
  CHECK_THROWS_AS(forward(m, Matrix::Random(2, 5)), ShapeError);
}

TEST_CASE("gradient at a perfect prediction is ~zero") {
  ModelParams m = build_classifier({LayerSpec::dense(2, 2), LayerSpec::softmax()}, 2, 0);
  m.weights[0] << 50.0, 0.0, -50.0, 0.0;
  Matrix x(1, 2);
  x << 1.0, 0.0;
  GradientBundle g = backward(m, x, {0});
  CHECK(g.input_grads.norm() < 1e-6);
}

TEST_CASE("backward rejects out-of-range labels") {
  ModelParams m = build_classifier(mlp_spec(3, 2), 3, 0);
  CHECK_THROWS_AS(backward(m, Matrix::Random(1, 3), {5}), DataError);
}

TEST_CASE("gradients match finite differences across layer kinds") {
  Rng rng(2024);
  int done = 0;
  int attempts = 0;
  while (done < 12 && attempts < 400) {
    ++attempts;
    const bool conv = (done % 2 == 0);
    std::vector<LayerSpec> spec;
    int m_in;
    if (conv) {
      m_in = 7;
      spec = {LayerSpec::conv1d(1, 2, 2), LayerSpec::relu(), LayerSpec::maxpool1d(2),
              LayerSpec::flatten(), LayerSpec::dense(6, 3), LayerSpec::softmax()};
    } else {
      m_in = 5;
      spec = mlp_spec(5, 2, 4);
    }
    ModelParams model = build_classifier(spec, m_in, static_cast<std::int64_t>(rng.bits()));
    jitter_params(model, rng, 0.3);
    Matrix x(3, m_in);
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = rng.uniform(-1, 1);
    if (near_kink(model, x, 1e-2)) continue;
    std::vector<int> y;
    for (int i = 0; i < 3; ++i)
      y.push_back(static_cast<int>(rng.index(static_cast<std::size_t>(model.output_width()))));
    check_gradients_against_fd(model, x, y);
    ++done;
  }
  CHECK(done == 12);
}

TEST_CASE("dense(1->2)+softmax matches the closed-form logistic gradient") {
  ModelParams m = build_classifier({LayerSpec::dense(1, 2), LayerSpec::softmax()}, 1, 0);
  m.weights[0] << -0.7, 1.3;  // w0, w1
  m.biases[0] << 0.2, -0.4;
  const double x0 = 0.9;
  Matrix x(1, 1);
  x << x0;

  const double u = (1.3 - (-0.7)) * x0 + (-0.4 - 0.2);
  const double p1 = 1.0 / (1.0 + std::exp(-u));

  for (int y = 0; y < 2; ++y) {
    GradientBundle g = backward(m, x, {y});
    const double expected_dx = (y == 1 ? (p1 - 1.0) : p1) * (1.3 - (-0.7));
    CHECK(g.input_grads(0, 0) == doctest::Approx(expected_dx).epsilon(1e-9));
    const double d = p1 - y;  // dL/dz1 = -dL/dz0
    CHECK(g.weight_grads[0](1, 0) == doctest::Approx(d * x0).epsilon(1e-9));
    CHECK(g.weight_grads[0](0, 0) == doctest::Approx(-d * x0).epsilon(1e-9));
    CHECK(g.bias_grads[0](1) == doctest::Approx(d).epsilon(1e-9));
    CHECK(g.bias_grads[0](0) == doctest::Approx(-d).epsilon(1e-9));
  }
}

TEST_CASE("train with zero epochs is the identity") {
  Dataset d = synth_generate({50, 3, 2, 3.0, 0.5, 11});
  ModelParams m = build_classifier(mlp_spec(3, 2), 3, 5);
  auto [out, history] = train(m, d, {0, 0.1, 16, 1});
  CHECK(history.empty());
  for (std::size_t i = 0; i < m.weights.size(); ++i) CHECK(out.weights[i] == m.weights[i]);
}

TEST_CASE("train separates 6-sigma blobs") {
  SynthConfig cfg;
  cfg.samples_per_class = 100;
  cfg.feature_count = 2;
  cfg.separation = 3.0;
  cfg.noise_scale = 0.5;  // 6x noise separation
  cfg.seed = 21;
  auto [d, scaler] = fit_normalize(synth_generate(cfg));
  ModelParams m = build_classifier(mlp_spec(2, 2, 16), 2, 77);
  auto [trained, history] = train(m, d, {60, 0.5, 32, 3});
  CHECK(history.size() == 60);
  CHECK(accuracy(trained, d) >= 0.99);
}

TEST_CASE("train is deterministic per seed") {
  Dataset d = synth_generate({40, 4, 2, 4.0, 1.0, 9});
  ModelParams m = build_classifier(mlp_spec(4, 2, 8), 4, 13);
  TrainConfig cfg{10, 0.2, 16, 42};
  auto [m1, h1] = train(m, d, cfg);
  auto [m2, h2] = train(m, d, cfg);
  CHECK(h1 == h2);
  for (std::size_t i = 0; i < m1.weights.size(); ++i) CHECK(m1.weights[i] == m2.weights[i]);
}

TEST_CASE("train reports divergence with the epoch index") {
  Dataset d = synth_generate({20, 2, 2, 4.0, 1.0, 1});
  ModelParams m = build_classifier(mlp_spec(2, 2, 4), 2, 0);
  try {
    train(m, d, {5, 1e308, 8, 0});
    FAIL("expected DivergedError");
  } catch (const DivergedError& e) {
    CHECK(e.epoch() >= 0);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("train validates batch size against the dataset") {
  Dataset d = synth_generate({5, 2, 2, 4.0, 1.0, 1});
  ModelParams m = build_classifier(mlp_spec(2, 2, 4), 2, 0);
  CHECK_THROWS_AS(train(m, d, {1, 0.1, 100, 0}), ConfigError);
}

TEST_CASE("model file round-trips bit-exactly") {
  Dataset d = synth_generate({30, 6, 2, 4.0, 1.0, 8});
  auto [dn, sc] = fit_normalize(d);
  ModelParams m = build_classifier(cnn_spec(6, 2), 6, 99);
  auto [trained, h] = train(m, dn, {3, 0.1, 10, 4});

  const std::string path = "nn_roundtrip.model";
  save_model(trained, path);
  ModelParams loaded = load_model(path);
  std::remove(path.c_str());

  REQUIRE(loaded.layers.size() == trained.layers.size());
  Matrix probe = dn.X.topRows(7);
  Matrix a = forward(trained, probe);
  Matrix b = forward(loaded, probe);
  CHECK(a == b);
  CHECK(loaded.seed == trained.seed);
}

TEST_CASE("loader rejects unknown versions and bad magic") {
  ModelParams m = build_classifier(mlp_spec(2, 2), 2, 0);
  const std::string path = "nn_version.model";
  save_model(m, path);
  // bump the version field (bytes 11..14, little endian)
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(11);
    const char v2 = 2;
    f.write(&v2, 1);
  }
  CHECK_THROWS_AS(load_model(path), DataError);
  {
    std::ofstream f(path, std::ios::binary);
    f << "not a model";
  }
  CHECK_THROWS_AS(load_model(path), DataError);
  std::remove(path.c_str());
}
