#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "setti/data.hpp"
#include "setti/types.hpp"

namespace setti {

enum class LayerKind { Conv1d, Relu, MaxPool1d, Flatten, Dense, Softmax };

const char* layer_kind_name(LayerKind k);

/// One layer of the fixed layer set. Only the fields relevant to `kind`
/// are meaningful.
struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;       // conv1d window
  int pool = 0;         // maxpool1d window == stride
  int in_features = 0;  // dense fan-in
  int out_features = 0; // dense fan-out

  static LayerSpec conv1d(int in_ch, int out_ch, int kernel);
  static LayerSpec relu();
  static LayerSpec maxpool1d(int pool);
  static LayerSpec flatten();
  static LayerSpec dense(int in, int out);
  static LayerSpec softmax();

  bool has_params() const {
    return kind == LayerKind::Conv1d || kind == LayerKind::Dense;
  }
  std::string describe() const;
};

/// channels x width of the signal between layers; flattened layout is
/// channel-major (index = channel * width + position).
struct SignalShape {
  int channels = 1;
  int width = 0;
  int features() const { return channels * width; }
};

/// A sequential network: layer specs plus one weight matrix / bias vector per
/// parameterized layer (empty for the rest). Built deterministically from a
/// seed; see build_classifier / build_network.
struct ModelParams {
  std::vector<LayerSpec> layers;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  std::vector<SignalShape> shapes;  // shapes[i] = input of layer i; back() = output
  std::int64_t seed = 0;

  bool empty() const { return layers.empty(); }
  int input_features() const { return shapes.empty() ? 0 : shapes.front().features(); }
  int output_width() const { return shapes.empty() ? 0 : shapes.back().features(); }
  bool softmax_head() const {
    return !layers.empty() && layers.back().kind == LayerKind::Softmax;
  }
};

/// Per-layer loss gradients plus the gradient with respect to the input batch.
struct GradientBundle {
  std::vector<Matrix> weight_grads;
  std::vector<Vector> bias_grads;
  Matrix input_grads;
  double loss = 0.0;
};

struct TrainConfig {
  int epochs = 50;
  double learning_rate = 0.1;
  int batch_size = 32;
  std::int64_t seed = 0;
};

/// Activations recorded during a forward pass; acts[0] is the input batch,
/// acts[i+1] the output of layer i.
struct ForwardTrace {
  std::vector<Matrix> acts;
  // For each maxpool layer (keyed by layer index): per sample, per output
  // element, the flat input index that won.
  std::vector<std::vector<std::vector<int>>> pool_argmax;

  const Matrix& output() const { return acts.back(); }
};

/// Validate shape composition and initialize weights from `seed`
/// (uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero).
/// Requires the final layer to be softmax over >= 2 classes.
ModelParams build_classifier(const std::vector<LayerSpec>& spec, int input_features,
                             std::int64_t seed);

/// Same initialization without the softmax-head requirement; used for
/// generator/discriminator bodies that end in a dense layer.
ModelParams build_network(const std::vector<LayerSpec>& spec, int input_features,
                          std::int64_t seed);

/// The Fig-4-style stack: three conv/relu/maxpool blocks (16/32/64 channels,
/// kernel 3, pool 2, blocks skipped where the signal is too narrow), then
/// flatten, dense, softmax.
std::vector<LayerSpec> cnn_spec(int input_features, int class_count);

/// dense-relu-dense-softmax baseline.
std::vector<LayerSpec> mlp_spec(int input_features, int class_count, int hidden = 64);

ForwardTrace forward_trace(const ModelParams& model, const Matrix& batch);

/// Class probabilities (softmax models) or raw outputs (dense-ended models).
Matrix forward(const ModelParams& model, const Matrix& batch);

/// Pre-softmax output: logits for softmax models, final output otherwise.
Matrix representation(const ModelParams& model, const Matrix& batch);

std::vector<int> predict(const ModelParams& model, const Matrix& batch);

double accuracy(const ModelParams& model, const Dataset& d);

/// Mean cross-entropy with probabilities clamped at 1e-12 before the log.
double cross_entropy_loss(const Matrix& probs, const std::vector<int>& labels);

/// Backpropagate an arbitrary gradient seeded at the model output
/// (post-softmax for softmax models). Set `at_representation` to seed at the
/// pre-softmax layer instead.
GradientBundle backprop(const ModelParams& model, const ForwardTrace& trace,
                        const Matrix& d_output, bool at_representation = false);

/// Exact gradients of the mean cross-entropy loss at `batch`.
GradientBundle backward(const ModelParams& model, const Matrix& batch,
                        const std::vector<int>& labels);

/// One SGD step: params -= lr * grads.
void apply_gradients(ModelParams& model, const GradientBundle& grads, double lr);

/// Plain seeded SGD on mean cross-entropy. Returns the trained model and one
/// mean-loss entry per epoch.
std::pair<ModelParams, std::vector<double>> train(const ModelParams& model,
                                                  const Dataset& train_set,
                                                  const TrainConfig& config);

/// Versioned binary container ("SETTI-MODEL"): layer specs then per-layer
/// little-endian float64 weight and bias arrays.
void save_model(const ModelParams& model, const std::string& path);
ModelParams load_model(const std::string& path);

}  // namespace setti
