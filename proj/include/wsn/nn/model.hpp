#ifndef WSN_NN_MODEL_HPP
#define WSN_NN_MODEL_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wsn/encode.hpp"
#include "wsn/error.hpp"
#include "wsn/ingest.hpp"
#include "wsn/nn/layers.hpp"
#include "wsn/random.hpp"

namespace wsn::nn {

enum class Preset { M1, M2, M3 };

/// C1 conv -> S1 pool -> C2 conv -> S2 pool -> F1 dense -> 2-way output.
struct ModelConfig {
  Preset preset = Preset::M2;
  int c1_kernels = 8;
  int c1_size = 3;
  int c2_kernels = 16;
  int c2_size = 5;
  int f1_width = 64;

  static ModelConfig from_preset(Preset p) {
    ModelConfig c;
    c.preset = p;
    c.c2_size = p == Preset::M1 ? 3 : 5;
    c.f1_width = p == Preset::M3 ? 128 : 64;
    return c;
  }

  static ModelConfig parse(std::string_view name) {
    if (name == "M1") return from_preset(Preset::M1);
    if (name == "M2") return from_preset(Preset::M2);
    if (name == "M3") return from_preset(Preset::M3);
    throw std::invalid_argument("unknown model preset: " + std::string(name));
  }

  std::string name() const {
    switch (preset) {
      case Preset::M1: return "M1";
      case Preset::M2: return "M2";
      case Preset::M3: return "M3";
    }
    return "?";
  }

  /// Length of the flattened S2 map (4 x 4 x c2_kernels for 16x16 input).
  int flat_size() const { return (kImageSide / 4) * (kImageSide / 4) * c2_kernels; }
};

template <typename Scalar>
struct ModelParams {
  ConvKernels<Scalar> conv1;
  ConvKernels<Scalar> conv2;
  DenseLayer<Scalar> fc1;
  DenseLayer<Scalar> out;
  std::uint64_t seed = 0;

  /// All parameters zero; also the shape of a gradient.
  static ModelParams zeros(const ModelConfig& c) {
    ModelParams p;
    p.conv1 = ConvKernels<Scalar>(c.c1_size, 1, c.c1_kernels);
    p.conv2 = ConvKernels<Scalar>(c.c2_size, c.c1_kernels, c.c2_kernels);
    p.fc1 = DenseLayer<Scalar>(c.flat_size(), c.f1_width);
    p.out = DenseLayer<Scalar>(c.f1_width, 2);
    return p;
  }

  /// Zero biases; weights uniform in +-sqrt(6 / fan_in).
  static ModelParams init(const ModelConfig& c, std::uint64_t seed) {
    ModelParams p = zeros(c);
    p.seed = seed;
    Rng rng(seed);
    auto fill = [&](Matrix<Scalar>& w, int fan_in) {
      const double bound = std::sqrt(6.0 / fan_in);
      std::uniform_real_distribution<double> u(-bound, bound);
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = static_cast<Scalar>(u(rng));
    };
    fill(p.conv1.weights, c.c1_size * c.c1_size);
    fill(p.conv2.weights, c.c2_size * c.c2_size * c.c1_kernels);
    fill(p.fc1.weights, c.flat_size());
    fill(p.out.weights, c.f1_width);
    return p;
  }

  std::vector<std::span<Scalar>> tensors() {
    return {as_span(conv1.weights), as_span(conv1.bias), as_span(conv2.weights), as_span(conv2.bias),
            as_span(fc1.weights),   as_span(fc1.bias),   as_span(out.weights),   as_span(out.bias)};
  }
  std::vector<std::span<const Scalar>> tensors() const {
    auto self = const_cast<ModelParams*>(this)->tensors();
    return {self.begin(), self.end()};
  }

  static constexpr std::string_view tensor_names[8] = {"conv1.weights", "conv1.bias", "conv2.weights",
                                                       "conv2.bias",    "fc1.weights", "fc1.bias",
                                                       "out.weights",   "out.bias"};

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (auto t : tensors()) n += t.size();
    return n;
  }

  bool all_finite() const {
    for (auto t : tensors())
      for (Scalar v : t)
        if (!std::isfinite(v)) return false;
    return true;
  }

  /// True when every tensor has the shape `zeros(c)` would give.
  bool matches(const ModelConfig& c) const {
    const auto ref = zeros(c);
    auto same = [](const auto& a, const auto& b) { return a.rows() == b.rows() && a.cols() == b.cols(); };
    return conv1.size == ref.conv1.size && conv2.size == ref.conv2.size &&
           conv1.in_channels == ref.conv1.in_channels && conv2.in_channels == ref.conv2.in_channels &&
           same(conv1.weights, ref.conv1.weights) && same(conv1.bias, ref.conv1.bias) &&
           same(conv2.weights, ref.conv2.weights) && same(conv2.bias, ref.conv2.bias) &&
           same(fc1.weights, ref.fc1.weights) && same(fc1.bias, ref.fc1.bias) &&
           same(out.weights, ref.out.weights) && same(out.bias, ref.out.bias);
  }

 private:
  template <typename M>
  static std::span<Scalar> as_span(M& m) {
    return {m.data(), static_cast<std::size_t>(m.size())};
  }
};

/// Gray image scaled to [0, 1] as a 16x16x1 tensor.
template <typename Scalar>
Tensor3<Scalar> to_input(const GrayImage& image) {
  Tensor3<Scalar> t(kImageSide, kImageSide, 1);
  for (int y = 0; y < kImageSide; ++y)
    for (int x = 0; x < kImageSide; ++x) t(y, x, 0) = static_cast<Scalar>(image.pixels(y, x)) / Scalar(255);
  return t;
}

/// Every intermediate of one forward pass, kept for backpropagation.
template <typename Scalar>
struct ForwardTrace {
  Tensor3<Scalar> input;
  Matrix<Scalar> patches1;
  Tensor3<Scalar> c1;  // after ReLU
  PoolResult<Scalar> s1;
  Matrix<Scalar> patches2;
  Tensor3<Scalar> c2;  // after ReLU
  PoolResult<Scalar> s2;
  Vector<Scalar> flat;
  Vector<Scalar> f1;  // after ReLU
  Vector<Scalar> logits;
  Vector<Scalar> probs;
};

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* layer) {
  if (!m.allFinite()) throw NumericError("nn", std::string("non-finite values after layer ") + layer);
}

}  // namespace detail

template <typename Scalar>
ForwardTrace<Scalar> forward_trace(const ModelConfig& config, const ModelParams<Scalar>& params,
                                   const Tensor3<Scalar>& input) {
  if (!params.matches(config)) throw ShapeError("nn", "parameters do not match model " + config.name());
  if (input.height != kImageSide || input.width != kImageSide || input.channels() != 1)
    throw ShapeError("nn", "model input must be 16x16x1");

  ForwardTrace<Scalar> t;
  t.input = input;

  t.patches1 = im2col_same(input, params.conv1.size);
  t.c1.height = input.height;
  t.c1.width = input.width;
  t.c1.data = t.patches1 * params.conv1.weights;
  t.c1.data.rowwise() += params.conv1.bias.transpose();
  relu_inplace(t.c1.data);
  detail::require_finite(t.c1.data, "C1");

  t.s1 = maxpool2(t.c1);

  t.patches2 = im2col_same(t.s1.output, params.conv2.size);
  t.c2.height = t.s1.output.height;
  t.c2.width = t.s1.output.width;
  t.c2.data = t.patches2 * params.conv2.weights;
  t.c2.data.rowwise() += params.conv2.bias.transpose();
  relu_inplace(t.c2.data);
  detail::require_finite(t.c2.data, "C2");

  t.s2 = maxpool2(t.c2);
  t.flat = Eigen::Map<const Vector<Scalar>>(t.s2.output.data.data(), t.s2.output.data.size());

  t.f1 = dense(t.flat, params.fc1);
  relu_inplace(t.f1);
  detail::require_finite(t.f1, "F1");

  t.logits = dense(t.f1, params.out);
  detail::require_finite(t.logits, "output");
  t.probs = softmax(t.logits);
  return t;
}

/// Class probabilities (index 0 normal, 1 abnormal).
template <typename Scalar>
Vector<Scalar> forward(const ModelConfig& config, const ModelParams<Scalar>& params, const GrayImage& image) {
  return forward_trace(config, params, to_input<Scalar>(image)).probs;
}

/// Argmax of the probabilities; an exact tie is abnormal.
template <typename Scalar>
Label decide(const Vector<Scalar>& probs) {
  return probs(0) > probs(1) ? Label::normal : Label::abnormal;
}

template <typename Scalar>
Label predict(const ModelConfig& config, const ModelParams<Scalar>& params, const GrayImage& image) {
  return decide<Scalar>(forward(config, params, image));
}

template <typename Scalar>
struct Example {
  Tensor3<Scalar> input;
  Label label = Label::normal;
};

template <typename Scalar>
struct LossAndGradient {
  Scalar loss = 0;
  ModelParams<Scalar> gradient;
};

/// Mean cross-entropy over the batch and its gradient with respect to every
/// parameter.
template <typename Scalar>
LossAndGradient<Scalar> loss_and_backward(const ModelConfig& config, const ModelParams<Scalar>& params,
                                          std::span<const Example<Scalar>> batch) {
  if (batch.empty()) throw std::invalid_argument("loss_and_backward needs a non-empty batch");
  LossAndGradient<Scalar> result;
  auto& g = result.gradient;
  g = ModelParams<Scalar>::zeros(config);
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(batch.size());

  for (const auto& ex : batch) {
    const auto t = forward_trace(config, params, ex.input);
    const int y = static_cast<int>(ex.label);
    result.loss += (log_sum_exp(t.logits) - t.logits(y)) * inv_n;

    Vector<Scalar> d_logits = t.probs * inv_n;
    d_logits(y) -= inv_n;

    g.out.weights.noalias() += d_logits * t.f1.transpose();
    g.out.bias += d_logits;
    Vector<Scalar> d_f1 = params.out.weights.transpose() * d_logits;
    d_f1 = (t.f1.array() > Scalar(0)).select(d_f1, Scalar(0));

    g.fc1.weights.noalias() += d_f1 * t.flat.transpose();
    g.fc1.bias += d_f1;
    const Vector<Scalar> d_flat = params.fc1.weights.transpose() * d_f1;

    Tensor3<Scalar> d_s2(t.s2.output.height, t.s2.output.width, t.s2.output.channels());
    d_s2.data = Eigen::Map<const Matrix<Scalar>>(d_flat.data(), d_s2.data.rows(), d_s2.data.cols());
    Tensor3<Scalar> d_c2 = maxpool2_backward(d_s2, t.s2.argmax, t.c2.height, t.c2.width);
    d_c2.data = (t.c2.data.array() > Scalar(0)).select(d_c2.data, Scalar(0));

    g.conv2.weights.noalias() += t.patches2.transpose() * d_c2.data;
    g.conv2.bias += d_c2.data.colwise().sum().transpose();
    const Matrix<Scalar> d_patches2 = d_c2.data * params.conv2.weights.transpose();
    const Tensor3<Scalar> d_s1 =
        col2im_same(d_patches2, t.s1.output.height, t.s1.output.width, t.s1.output.channels(), params.conv2.size);

    Tensor3<Scalar> d_c1 = maxpool2_backward(d_s1, t.s1.argmax, t.c1.height, t.c1.width);
    d_c1.data = (t.c1.data.array() > Scalar(0)).select(d_c1.data, Scalar(0));

    g.conv1.weights.noalias() += t.patches1.transpose() * d_c1.data;
    g.conv1.bias += d_c1.data.colwise().sum().transpose();
  }
  if (!std::isfinite(result.loss)) throw NumericError("nn", "non-finite loss");
  return result;
}

}  // namespace wsn::nn

#endif  // WSN_NN_MODEL_HPP
