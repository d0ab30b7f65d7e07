#ifndef WSN_NN_LAYERS_HPP
#define WSN_NN_LAYERS_HPP

#include <Eigen/Core>
#include <cmath>
#include <string>

#include "wsn/error.hpp"

namespace wsn::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using IndexMatrix = Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic>;

/// Feature map stored as one column per channel; within a column pixels are
/// row-major (index y * width + x).
template <typename Scalar>
struct Tensor3 {
  int height = 0;
  int width = 0;
  Matrix<Scalar> data;

  Tensor3() = default;
  Tensor3(int h, int w, int c) : height(h), width(w), data(Matrix<Scalar>::Zero(h * w, c)) {}

  int channels() const { return static_cast<int>(data.cols()); }
  Eigen::Index size() const { return data.size(); }

  Scalar& operator()(int y, int x, int c) { return data(y * width + x, c); }
  Scalar operator()(int y, int x, int c) const { return data(y * width + x, c); }
};

/// Bank of square kernels. Row (ky * size + kx) * in_channels + c of
/// `weights` multiplies input channel c at kernel offset (ky, kx); column o
/// produces output channel o.
template <typename Scalar>
struct ConvKernels {
  int size = 3;
  int in_channels = 1;
  Matrix<Scalar> weights;
  Vector<Scalar> bias;

  ConvKernels() = default;
  ConvKernels(int size_, int in_channels_, int out_channels)
      : size(size_),
        in_channels(in_channels_),
        weights(Matrix<Scalar>::Zero(size_ * size_ * in_channels_, out_channels)),
        bias(Vector<Scalar>::Zero(out_channels)) {}

  int out_channels() const { return static_cast<int>(weights.cols()); }
};

/// y = weights * x + bias.
template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weights;
  Vector<Scalar> bias;

  DenseLayer() = default;
  DenseLayer(int in, int out) : weights(Matrix<Scalar>::Zero(out, in)), bias(Vector<Scalar>::Zero(out)) {}

  int inputs() const { return static_cast<int>(weights.cols()); }
  int outputs() const { return static_cast<int>(weights.rows()); }
};

/// Patch matrix for a stride-1 zero-padded convolution: one row per output
/// pixel, columns laid out like ConvKernels::weights rows.
template <typename Scalar>
Matrix<Scalar> im2col_same(const Tensor3<Scalar>& in, int size) {
  const int pad = size / 2;
  const int c_in = in.channels();
  Matrix<Scalar> cols = Matrix<Scalar>::Zero(in.height * in.width, size * size * c_in);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      const int row = y * in.width + x;
      for (int ky = 0; ky < size; ++ky) {
        const int sy = y + ky - pad;
        if (sy < 0 || sy >= in.height) continue;
        for (int kx = 0; kx < size; ++kx) {
          const int sx = x + kx - pad;
          if (sx < 0 || sx >= in.width) continue;
          const int base = (ky * size + kx) * c_in;
          for (int c = 0; c < c_in; ++c) cols(row, base + c) = in(sy, sx, c);
        }
      }
    }
  return cols;
}

/// Adjoint of im2col_same: scatters patch gradients back onto the input,
/// dropping padded positions.
template <typename Scalar>
Tensor3<Scalar> col2im_same(const Matrix<Scalar>& cols, int height, int width, int channels, int size) {
  const int pad = size / 2;
  Tensor3<Scalar> out(height, width, channels);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const int row = y * width + x;
      for (int ky = 0; ky < size; ++ky) {
        const int sy = y + ky - pad;
        if (sy < 0 || sy >= height) continue;
        for (int kx = 0; kx < size; ++kx) {
          const int sx = x + kx - pad;
          if (sx < 0 || sx >= width) continue;
          const int base = (ky * size + kx) * channels;
          for (int c = 0; c < channels; ++c) out(sy, sx, c) += cols(row, base + c);
        }
      }
    }
  return out;
}

template <typename Scalar>
void check_conv_shapes(const Tensor3<Scalar>& in, const ConvKernels<Scalar>& k) {
  if (k.size <= 0 || k.size % 2 == 0) throw ShapeError("nn", "convolution kernel size must be odd");
  if (in.channels() != k.in_channels)
    throw ShapeError("nn", "convolution expects " + std::to_string(k.in_channels) + " input channels, got " +
                               std::to_string(in.channels()));
  if (k.weights.rows() != k.size * k.size * k.in_channels || k.bias.size() != k.weights.cols())
    throw ShapeError("nn", "inconsistent convolution kernel bank");
}

/// Stride-1 cross-correlation with zero padding; output keeps the input's
/// spatial size.
template <typename Scalar>
Tensor3<Scalar> conv2d_same(const Tensor3<Scalar>& in, const ConvKernels<Scalar>& k) {
  check_conv_shapes(in, k);
  Tensor3<Scalar> out;
  out.height = in.height;
  out.width = in.width;
  out.data = im2col_same(in, k.size) * k.weights;
  out.data.rowwise() += k.bias.transpose();
  return out;
}

template <typename Scalar>
struct PoolResult {
  Tensor3<Scalar> output;
  IndexMatrix argmax;  // input row (pixel index) chosen for each output element
};

/// 2x2 max pooling with stride 2. Ties go to the first element in row-major
/// block order.
template <typename Scalar>
PoolResult<Scalar> maxpool2(const Tensor3<Scalar>& in) {
  if (in.height % 2 != 0 || in.width % 2 != 0)
    throw ShapeError("nn", "max pooling needs even height and width, got " + std::to_string(in.height) + "x" +
                               std::to_string(in.width));
  PoolResult<Scalar> r;
  r.output = Tensor3<Scalar>(in.height / 2, in.width / 2, in.channels());
  r.argmax.resize(r.output.data.rows(), r.output.data.cols());
  for (int c = 0; c < in.channels(); ++c)
    for (int y = 0; y < r.output.height; ++y)
      for (int x = 0; x < r.output.width; ++x) {
        Eigen::Index best = (2 * y) * in.width + 2 * x;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const Eigen::Index idx = (2 * y + dy) * in.width + 2 * x + dx;
            if (in.data(idx, c) > in.data(best, c)) best = idx;
          }
        const int o = y * r.output.width + x;
        r.output.data(o, c) = in.data(best, c);
        r.argmax(o, c) = best;
      }
  return r;
}

template <typename Scalar>
Tensor3<Scalar> maxpool2_backward(const Tensor3<Scalar>& grad_out, const IndexMatrix& argmax, int in_height,
                                  int in_width) {
  Tensor3<Scalar> grad_in(in_height, in_width, grad_out.channels());
  for (Eigen::Index c = 0; c < grad_out.data.cols(); ++c)
    for (Eigen::Index o = 0; o < grad_out.data.rows(); ++o) grad_in.data(argmax(o, c), c) += grad_out.data(o, c);
  return grad_in;
}

template <typename Scalar>
Vector<Scalar> dense(const Vector<Scalar>& x, const DenseLayer<Scalar>& layer) {
  if (x.size() != layer.inputs() || layer.bias.size() != layer.outputs())
    throw ShapeError("nn", "dense layer expects " + std::to_string(layer.inputs()) + " inputs, got " +
                               std::to_string(x.size()));
  return layer.weights * x + layer.bias;
}

template <typename Derived>
void relu_inplace(Eigen::MatrixBase<Derived>& m) {
  m = m.cwiseMax(typename Derived::Scalar(0));
}

/// Numerically stable softmax.
template <typename Scalar>
Vector<Scalar> softmax(const Vector<Scalar>& logits) {
  const Vector<Scalar> shifted = logits.array() - logits.maxCoeff();
  const Vector<Scalar> e = shifted.array().exp();
  return e / e.sum();
}

template <typename Scalar>
Scalar log_sum_exp(const Vector<Scalar>& logits) {
  const Scalar m = logits.maxCoeff();
  return m + std::log((logits.array() - m).exp().sum());
}

}  // namespace wsn::nn

#endif  // WSN_NN_LAYERS_HPP
