#include "setti/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "setti/errors.hpp"
#include "setti/rng.hpp"

namespace setti {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool1d: return "maxpool1d";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    case LayerKind::Softmax: return "softmax";
  }
  return "?";
}

LayerSpec LayerSpec::conv1d(int in_ch, int out_ch, int kernel) {
  LayerSpec s;
  s.kind = LayerKind::Conv1d;
  s.in_channels = in_ch;
  s.out_channels = out_ch;
  s.kernel = kernel;
  return s;
}
LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = LayerKind::Relu;
  return s;
}
LayerSpec LayerSpec::maxpool1d(int pool) {
  LayerSpec s;
  s.kind = LayerKind::MaxPool1d;
  s.pool = pool;
  return s;
}
LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::Flatten;
  return s;
}
LayerSpec LayerSpec::dense(int in, int out) {
  LayerSpec s;
  s.kind = LayerKind::Dense;
  s.in_features = in;
  s.out_features = out;
  return s;
}
LayerSpec LayerSpec::softmax() {
  LayerSpec s;
  s.kind = LayerKind::Softmax;
  return s;
}

std::string LayerSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case LayerKind::Conv1d:
      os << "conv1d(" << in_channels << "->" << out_channels << ",k=" << kernel << ")";
      break;
    case LayerKind::MaxPool1d:
      os << "maxpool1d(" << pool << ")";
      break;
    case LayerKind::Dense:
      os << "dense(" << in_features << "->" << out_features << ")";
      break;
    default:
      os << layer_kind_name(kind);
  }
  return os.str();
}

namespace {

std::string layer_label(const std::vector<LayerSpec>& spec, int i) {
  if (i < 0) return "the input";
  return "layer " + std::to_string(i) + " (" + spec[static_cast<std::size_t>(i)].describe() + ")";
}

// Walk the spec and record the signal shape entering every layer.
// Throws ShapeError naming the offending layer and its predecessor.
std::vector<SignalShape> compose_shapes(const std::vector<LayerSpec>& spec,
                                        int input_features) {
  if (input_features <= 0) throw ShapeError("input feature count must be positive");
  std::vector<SignalShape> shapes;
  SignalShape cur{1, input_features};
  if (!spec.empty() && spec.front().kind == LayerKind::Conv1d &&
      spec.front().in_channels > 1) {
    if (input_features % spec.front().in_channels != 0) {
      throw ShapeError(layer_label(spec, 0) + " needs a channel count dividing the " +
                       std::to_string(input_features) + " input features");
    }
    cur = {spec.front().in_channels, input_features / spec.front().in_channels};
  }
  shapes.push_back(cur);

  for (int i = 0; i < static_cast<int>(spec.size()); ++i) {
    const LayerSpec& l = spec[static_cast<std::size_t>(i)];
    switch (l.kind) {
      case LayerKind::Conv1d:
        if (l.in_channels <= 0 || l.out_channels <= 0 || l.kernel <= 0) {
          throw ShapeError(layer_label(spec, i) + " has non-positive sizes");
        }
        if (cur.channels != l.in_channels) {
          throw ShapeError(layer_label(spec, i) + " expects " +
                           std::to_string(l.in_channels) + " channels but " +
                           layer_label(spec, i - 1) + " produces " +
                           std::to_string(cur.channels));
        }
        if (cur.width < l.kernel) {
          throw ShapeError(layer_label(spec, i) + " kernel does not fit the width " +
                           std::to_string(cur.width) + " produced by " +
                           layer_label(spec, i - 1));
        }
        cur = {l.out_channels, cur.width - l.kernel + 1};
        break;
      case LayerKind::Relu:
        break;
      case LayerKind::MaxPool1d:
        if (l.pool <= 0) throw ShapeError(layer_label(spec, i) + " has non-positive pool");
        if (cur.width < l.pool) {
          throw ShapeError(layer_label(spec, i) + " pool does not fit the width " +
                           std::to_string(cur.width) + " produced by " +
                           layer_label(spec, i - 1));
        }
        cur = {cur.channels, cur.width / l.pool};
        break;
      case LayerKind::Flatten:
        cur = {1, cur.features()};
        break;
      case LayerKind::Dense:
        if (l.in_features <= 0 || l.out_features <= 0) {
          throw ShapeError(layer_label(spec, i) + " has non-positive sizes");
        }
        if (cur.features() != l.in_features) {
          throw ShapeError(layer_label(spec, i) + " expects " +
                           std::to_string(l.in_features) + " input features but " +
                           layer_label(spec, i - 1) + " produces " +
                           std::to_string(cur.features()));
        }
        cur = {1, l.out_features};
        break;
      case LayerKind::Softmax:
        if (cur.channels != 1) {
          throw ShapeError(layer_label(spec, i) + " needs a flat input but " +
                           layer_label(spec, i - 1) + " produces " +
                           std::to_string(cur.channels) + " channels");
        }
        break;
    }
    shapes.push_back(cur);
  }
  return shapes;
}

ModelParams init_model(const std::vector<LayerSpec>& spec, int input_features,
                       std::int64_t seed) {
  ModelParams m;
  m.layers = spec;
  m.shapes = compose_shapes(spec, input_features);
  m.seed = seed;
  m.weights.resize(spec.size());
  m.biases.resize(spec.size());

  Rng rng(static_cast<std::uint64_t>(seed));
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const LayerSpec& l = spec[i];
    if (l.kind == LayerKind::Conv1d) {
      const int fan_in = l.in_channels * l.kernel;
      const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
      Matrix w(l.out_channels, fan_in);
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-s, s);
      m.weights[i] = std::move(w);
      m.biases[i] = Vector::Zero(l.out_channels);
    } else if (l.kind == LayerKind::Dense) {
      const double s = 1.0 / std::sqrt(static_cast<double>(l.in_features));
      Matrix w(l.out_features, l.in_features);
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-s, s);
      m.weights[i] = std::move(w);
      m.biases[i] = Vector::Zero(l.out_features);
    }
  }
  return m;
}

// Softmax row with a floor keeping probabilities strictly inside (0, 1).
void softmax_rows(Matrix& z) {
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double zmax = z.row(r).maxCoeff();
    Eigen::ArrayXd e = (z.row(r).array() - zmax).exp();
    Eigen::ArrayXd p = (e / e.sum()).max(kProbFloor);
    z.row(r) = p / p.sum();
  }
}

}  // namespace

ModelParams build_classifier(const std::vector<LayerSpec>& spec, int input_features,
                             std::int64_t seed) {
  if (spec.empty()) throw ConfigError("classifier spec is empty");
  if (spec.back().kind != LayerKind::Softmax) {
    throw ConfigError("classifier must end in softmax, got " + spec.back().describe());
  }
  ModelParams m = init_model(spec, input_features, seed);
  if (m.output_width() < 2) {
    throw ConfigError("classifier needs at least 2 output classes, got " +
                      std::to_string(m.output_width()));
  }
  return m;
}

ModelParams build_network(const std::vector<LayerSpec>& spec, int input_features,
                          std::int64_t seed) {
  if (spec.empty()) throw ConfigError("network spec is empty");
  return init_model(spec, input_features, seed);
}

std::vector<LayerSpec> cnn_spec(int input_features, int class_count) {
  const int channels[3] = {16, 32, 64};
  std::vector<LayerSpec> spec;
  SignalShape cur{1, input_features};
  for (int b = 0; b < 3; ++b) {
    if (cur.width < 3) break;
    spec.push_back(LayerSpec::conv1d(cur.channels, channels[b], 3));
    spec.push_back(LayerSpec::relu());
    cur = {channels[b], cur.width - 2};
    if (cur.width >= 2) {
      spec.push_back(LayerSpec::maxpool1d(2));
      cur.width /= 2;
    }
  }
  spec.push_back(LayerSpec::flatten());
  spec.push_back(LayerSpec::dense(cur.features(), class_count));
  spec.push_back(LayerSpec::softmax());
  return spec;
}

std::vector<LayerSpec> mlp_spec(int input_features, int class_count, int hidden) {
  return {LayerSpec::dense(input_features, hidden), LayerSpec::relu(),
          LayerSpec::dense(hidden, class_count), LayerSpec::softmax()};
}

ForwardTrace forward_trace(const ModelParams& model, const Matrix& batch) {
  if (model.empty()) throw ConfigError("model has no layers");
  if (batch.cols() != model.input_features()) {
    throw ShapeError("batch has " + std::to_string(batch.cols()) +
                     " features, model expects " +
                     std::to_string(model.input_features()));
  }
  if (!batch.allFinite()) throw DataError("batch contains non-finite values");

  ForwardTrace t;
  t.acts.reserve(model.layers.size() + 1);
  t.acts.push_back(batch);
  t.pool_argmax.resize(model.layers.size());

  const Eigen::Index B = batch.rows();
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    const Matrix& in = t.acts.back();
    const SignalShape si = model.shapes[i];
    const SignalShape so = model.shapes[i + 1];
    switch (l.kind) {
      case LayerKind::Conv1d: {
        const int W = si.width, K = l.kernel, Wout = so.width;
        const Matrix& wt = model.weights[i];
        Matrix out(B, so.features());
        Matrix patches(Wout, l.in_channels * K);
        for (Eigen::Index b = 0; b < B; ++b) {
          for (int x = 0; x < Wout; ++x)
            for (int ic = 0; ic < l.in_channels; ++ic)
              for (int k = 0; k < K; ++k)
                patches(x, ic * K + k) = in(b, ic * W + x + k);
          Matrix om = patches * wt.transpose();  // Wout x out_ch
          for (int oc = 0; oc < l.out_channels; ++oc)
            for (int x = 0; x < Wout; ++x)
              out(b, oc * Wout + x) = om(x, oc) + model.biases[i](oc);
        }
        t.acts.push_back(std::move(out));
        break;
      }
      case LayerKind::Relu:
        t.acts.push_back(in.cwiseMax(0.0));
        break;
      case LayerKind::MaxPool1d: {
        const int W = si.width, P = l.pool, Wout = so.width;
        Matrix out(B, so.features());
        auto& argmax = t.pool_argmax[i];
        argmax.assign(static_cast<std::size_t>(B),
                      std::vector<int>(static_cast<std::size_t>(so.features())));
        for (Eigen::Index b = 0; b < B; ++b) {
          for (int c = 0; c < si.channels; ++c) {
            for (int ox = 0; ox < Wout; ++ox) {
              int best = c * W + ox * P;
              double bv = in(b, best);
              for (int k = 1; k < P; ++k) {
                const int idx = c * W + ox * P + k;
                if (in(b, idx) > bv) {
                  bv = in(b, idx);
                  best = idx;
                }
              }
              out(b, c * Wout + ox) = bv;
              argmax[static_cast<std::size_t>(b)][static_cast<std::size_t>(c * Wout + ox)] = best;
            }
          }
        }
        t.acts.push_back(std::move(out));
        break;
      }
      case LayerKind::Flatten:
        t.acts.push_back(in);  // channel-major layout is already flat
        break;
      case LayerKind::Dense: {
        Matrix out = in * model.weights[i].transpose();
        out.rowwise() += model.biases[i].transpose();
        t.acts.push_back(std::move(out));
        break;
      }
      case LayerKind::Softmax: {
        Matrix out = in;
        softmax_rows(out);
        t.acts.push_back(std::move(out));
        break;
      }
    }
  }
  return t;
}

Matrix forward(const ModelParams& model, const Matrix& batch) {
  return forward_trace(model, batch).acts.back();
}

Matrix representation(const ModelParams& model, const Matrix& batch) {
  ForwardTrace t = forward_trace(model, batch);
  const std::size_t idx = t.acts.size() - (model.softmax_head() ? 2 : 1);
  return t.acts[idx];
}

std::vector<int> predict(const ModelParams& model, const Matrix& batch) {
  Matrix out = forward(model, batch);
  std::vector<int> labels(static_cast<std::size_t>(out.rows()));
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    Eigen::Index best;
    out.row(r).maxCoeff(&best);
    labels[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return labels;
}

double accuracy(const ModelParams& model, const Dataset& d) {
  if (d.empty()) throw DataError("accuracy: empty dataset");
  const auto pred = predict(model, d.X);
  int hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == d.labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double cross_entropy_loss(const Matrix& probs, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) {
    throw DataError("cross_entropy_loss: " + std::to_string(probs.rows()) +
                    " rows vs " + std::to_string(labels.size()) + " labels");
  }
  double loss = 0.0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= probs.cols()) {
      throw DataError("label " + std::to_string(y) + " out of range [0, " +
                      std::to_string(probs.cols()) + ")");
    }
    loss -= std::log(std::max(probs(r, y), kProbFloor));
  }
  return loss / static_cast<double>(probs.rows());
}

GradientBundle backprop(const ModelParams& model, const ForwardTrace& trace,
                        const Matrix& d_output, bool at_representation) {
  GradientBundle g;
  g.weight_grads.resize(model.layers.size());
  g.bias_grads.resize(model.layers.size());

  int top = static_cast<int>(model.layers.size()) - 1;
  if (at_representation && model.softmax_head()) top -= 1;

  Matrix d = d_output;
  for (int i = top; i >= 0; --i) {
    const LayerSpec& l = model.layers[static_cast<std::size_t>(i)];
    const Matrix& in = trace.acts[static_cast<std::size_t>(i)];
    const SignalShape si = model.shapes[static_cast<std::size_t>(i)];
    const SignalShape so = model.shapes[static_cast<std::size_t>(i) + 1];
    switch (l.kind) {
      case LayerKind::Conv1d: {
        const int W = si.width, K = l.kernel, Wout = so.width;
        const Matrix& wt = model.weights[static_cast<std::size_t>(i)];
        Matrix dw = Matrix::Zero(wt.rows(), wt.cols());
        Vector db = Vector::Zero(l.out_channels);
        Matrix din = Matrix::Zero(in.rows(), in.cols());
        Matrix patches(Wout, l.in_channels * K);
        Matrix dom(Wout, l.out_channels);
        for (Eigen::Index b = 0; b < in.rows(); ++b) {
          for (int x = 0; x < Wout; ++x)
            for (int ic = 0; ic < l.in_channels; ++ic)
              for (int k = 0; k < K; ++k)
                patches(x, ic * K + k) = in(b, ic * W + x + k);
          for (int oc = 0; oc < l.out_channels; ++oc)
            for (int x = 0; x < Wout; ++x) dom(x, oc) = d(b, oc * Wout + x);
          dw.noalias() += dom.transpose() * patches;
          db += dom.colwise().sum().transpose();
          Matrix dp = dom * wt;  // Wout x (in_ch*K)
          for (int x = 0; x < Wout; ++x)
            for (int ic = 0; ic < l.in_channels; ++ic)
              for (int k = 0; k < K; ++k)
                din(b, ic * W + x + k) += dp(x, ic * K + k);
        }
        g.weight_grads[static_cast<std::size_t>(i)] = std::move(dw);
        g.bias_grads[static_cast<std::size_t>(i)] = std::move(db);
        d = std::move(din);
        break;
      }
      case LayerKind::Relu:
        d = d.cwiseProduct((in.array() > 0.0).cast<double>().matrix());
        break;
      case LayerKind::MaxPool1d: {
        Matrix din = Matrix::Zero(in.rows(), in.cols());
        const auto& argmax = trace.pool_argmax[static_cast<std::size_t>(i)];
        for (Eigen::Index b = 0; b < in.rows(); ++b)
          for (int o = 0; o < so.features(); ++o)
            din(b, argmax[static_cast<std::size_t>(b)][static_cast<std::size_t>(o)]) +=
                d(b, o);
        d = std::move(din);
        break;
      }
      case LayerKind::Flatten:
        break;
      case LayerKind::Dense: {
        const Matrix& wt = model.weights[static_cast<std::size_t>(i)];
        g.weight_grads[static_cast<std::size_t>(i)] = d.transpose() * in;
        g.bias_grads[static_cast<std::size_t>(i)] = d.colwise().sum().transpose();
        d = d * wt;
        break;
      }
      case LayerKind::Softmax: {
        // dz_j = p_j * (dp_j - sum_k p_k dp_k)
        const Matrix& p = trace.acts[static_cast<std::size_t>(i) + 1];
        Matrix dz(d.rows(), d.cols());
        for (Eigen::Index r = 0; r < d.rows(); ++r) {
          const double dot = p.row(r).dot(d.row(r));
          dz.row(r) = p.row(r).cwiseProduct(d.row(r).array().matrix() -
                                            Matrix::Constant(1, d.cols(), dot));
        }
        d = std::move(dz);
        break;
      }
    }
  }
  g.input_grads = std::move(d);
  return g;
}

GradientBundle backward(const ModelParams& model, const Matrix& batch,
                        const std::vector<int>& labels) {
  if (!model.softmax_head()) {
    throw ConfigError("backward: cross-entropy needs a softmax head");
  }
  ForwardTrace t = forward_trace(model, batch);
  const Matrix& probs = t.acts.back();
  const double loss = cross_entropy_loss(probs, labels);

  const double B = static_cast<double>(batch.rows());
  Matrix dp = Matrix::Zero(probs.rows(), probs.cols());
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    const double p = probs(r, y);
    if (p > kProbFloor) dp(r, y) = -1.0 / (B * p);
  }
  GradientBundle g = backprop(model, t, dp);
  g.loss = loss;
  return g;
}

void apply_gradients(ModelParams& model, const GradientBundle& grads, double lr) {
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (!model.layers[i].has_params()) continue;
    model.weights[i] -= lr * grads.weight_grads[i];
    model.biases[i] -= lr * grads.bias_grads[i];
  }
}

std::pair<ModelParams, std::vector<double>> train(const ModelParams& model,
                                                  const Dataset& train_set,
                                                  const TrainConfig& config) {
  if (train_set.empty()) throw DataError("train: empty dataset");
  if (config.learning_rate <= 0.0) throw ConfigError("train: learning_rate must be positive");
  if (config.epochs < 0) throw ConfigError("train: negative epoch count");
  if (config.batch_size < 1 || config.batch_size > train_set.size()) {
    throw ConfigError("train: batch_size " + std::to_string(config.batch_size) +
                      " out of range [1, " + std::to_string(train_set.size()) + "]");
  }
  for (int y : train_set.labels) {
    if (y < 0 || y >= model.output_width()) {
      throw DataError("train: label " + std::to_string(y) + " out of range [0, " +
                      std::to_string(model.output_width()) + ")");
    }
  }

  ModelParams m = model;
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(config.epochs));
  Rng rng(static_cast<std::uint64_t>(config.seed));
  const int n = train_set.size();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += config.batch_size) {
      const int bn = std::min(config.batch_size, n - start);
      Matrix xb(bn, train_set.feature_count());
      std::vector<int> yb(static_cast<std::size_t>(bn));
      for (int k = 0; k < bn; ++k) {
        xb.row(k) = train_set.X.row(order[static_cast<std::size_t>(start + k)]);
        yb[static_cast<std::size_t>(k)] =
            train_set.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(start + k)])];
      }
      GradientBundle g = backward(m, xb, yb);
      if (!std::isfinite(g.loss)) {
        throw DivergedError("train: non-finite loss", epoch);
      }
      apply_gradients(m, g, config.learning_rate);
      epoch_loss += g.loss * bn;
    }
    history.push_back(epoch_loss / n);
  }
  return {std::move(m), std::move(history)};
}

// ---------------------------------------------------------------------------
// Model file: magic "SETTI-MODEL", u32 version, i64 seed, u32 input features,
// u32 layer count, per-layer spec fields, then per parameterized layer the
// weight matrix (row-major) and bias vector as little-endian float64.
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[] = "SETTI-MODEL";
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_i64(std::ostream& out, std::int64_t v) {
  const auto u = static_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  put_i64(out, static_cast<std::int64_t>(u));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::int64_t get_i64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return static_cast<std::int64_t>(v);
}

double get_f64(std::istream& in) {
  const auto u = static_cast<std::uint64_t>(get_i64(in));
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

void save_model(const ModelParams& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(kMagic, sizeof(kMagic) - 1);
  put_u32(out, kVersion);
  put_i64(out, model.seed);
  put_u32(out, static_cast<std::uint32_t>(model.input_features()));
  put_u32(out, static_cast<std::uint32_t>(model.layers.size()));
  for (const LayerSpec& l : model.layers) {
    put_u32(out, static_cast<std::uint32_t>(l.kind));
    put_u32(out, static_cast<std::uint32_t>(l.in_channels));
    put_u32(out, static_cast<std::uint32_t>(l.out_channels));
    put_u32(out, static_cast<std::uint32_t>(l.kernel));
    put_u32(out, static_cast<std::uint32_t>(l.pool));
    put_u32(out, static_cast<std::uint32_t>(l.in_features));
    put_u32(out, static_cast<std::uint32_t>(l.out_features));
  }
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (!model.layers[i].has_params()) continue;
    const Matrix& w = model.weights[i];
    put_u32(out, static_cast<std::uint32_t>(w.rows()));
    put_u32(out, static_cast<std::uint32_t>(w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) put_f64(out, w(r, c));
    const Vector& b = model.biases[i];
    put_u32(out, static_cast<std::uint32_t>(b.size()));
    for (Eigen::Index k = 0; k < b.size(); ++k) put_f64(out, b(k));
  }
  if (!out) throw DataError("write failed for " + path);
}

ModelParams load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  char magic[sizeof(kMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw DataError(path + ": not a model file");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kVersion) {
    throw DataError(path + ": unsupported model format version " +
                    std::to_string(version));
  }
  const std::int64_t seed = get_i64(in);
  const int input_features = static_cast<int>(get_u32(in));
  const std::uint32_t layer_count = get_u32(in);
  std::vector<LayerSpec> spec(layer_count);
  for (auto& l : spec) {
    l.kind = static_cast<LayerKind>(get_u32(in));
    l.in_channels = static_cast<int>(get_u32(in));
    l.out_channels = static_cast<int>(get_u32(in));
    l.kernel = static_cast<int>(get_u32(in));
    l.pool = static_cast<int>(get_u32(in));
    l.in_features = static_cast<int>(get_u32(in));
    l.out_features = static_cast<int>(get_u32(in));
  }

  ModelParams m;
  m.layers = spec;
  m.shapes = compose_shapes(spec, input_features);
  m.seed = seed;
  m.weights.resize(spec.size());
  m.biases.resize(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (!spec[i].has_params()) continue;
    const auto rows = get_u32(in);
    const auto cols = get_u32(in);
    Matrix w(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) w(r, c) = get_f64(in);
    m.weights[i] = std::move(w);
    const auto blen = get_u32(in);
    Vector b(blen);
    for (std::uint32_t k = 0; k < blen; ++k) b(k) = get_f64(in);
    m.biases[i] = std::move(b);
  }
  if (!in) throw DataError(path + ": truncated model file");
  return m;
}

}  // namespace setti
