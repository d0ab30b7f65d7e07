#include "wsn/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include "wsn/error.hpp"
#include "wsn/random.hpp"

namespace wsn::nn {

double accuracy(const ModelConfig& config, const ModelParams<double>& params,
                std::span<const Example<double>> examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : examples)
    if (decide<double>(forward_trace(config, params, ex.input).probs) == ex.label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

double mean_loss(const ModelConfig& config, const ModelParams<double>& params,
                 std::span<const Example<double>> examples) {
  if (examples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& ex : examples) {
    const auto t = forward_trace(config, params, ex.input);
    sum += log_sum_exp(t.logits) - t.logits(static_cast<int>(ex.label));
  }
  return sum / static_cast<double>(examples.size());
}

std::vector<Example<double>> to_examples(std::span<const GrayImage> images, std::span<const Label> labels) {
  if (images.size() != labels.size()) throw std::invalid_argument("to_examples: size mismatch");
  std::vector<Example<double>> out;
  out.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) out.push_back({to_input<double>(images[i]), labels[i]});
  return out;
}

TrainResult train(const ModelConfig& config, std::span<const Example<double>> train_set,
                  std::span<const Example<double>> valid_set, const TrainConfig& tcfg) {
  if (train_set.empty() || valid_set.empty()) throw std::invalid_argument("train: both sets must be non-empty");
  if (!(tcfg.learning_rate >= 0.0)) throw std::invalid_argument("train: learning rate must be non-negative");
  if (tcfg.batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");

  TrainResult result;
  auto params = ModelParams<double>::init(config, derive_seed(tcfg.seed, 0));
  auto velocity = ModelParams<double>::zeros(config);
  result.params = params;

  Rng shuffle_rng(derive_seed(tcfg.seed, 1));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Example<double>> batch;
  batch.reserve(static_cast<std::size_t>(tcfg.batch_size));

  double best_accuracy = -1.0;
  double best_loss = 0.0;
  int stale = 0;
  for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(tcfg.batch_size)) {
      const auto end = std::min(order.size(), begin + static_cast<std::size_t>(tcfg.batch_size));
      batch.clear();
      for (std::size_t k = begin; k < end; ++k) batch.push_back(train_set[order[k]]);

      LossAndGradient<double> lg;
      try {
        lg = loss_and_backward<double>(config, params, batch);
      } catch (const NumericError& e) {
        throw TrainingError(std::string("training diverged: ") + e.what(), epoch);
      }
      loss_sum += lg.loss;
      ++batches;

      auto p = params.tensors();
      auto v = velocity.tensors();
      auto gr = std::as_const(lg.gradient).tensors();
      for (std::size_t t = 0; t < p.size(); ++t)
        for (std::size_t i = 0; i < p[t].size(); ++i) {
          v[t][i] = tcfg.momentum * v[t][i] - tcfg.learning_rate * gr[t][i];
          p[t][i] += v[t][i];
        }
    }
    const double epoch_loss = loss_sum / batches;
    if (!std::isfinite(epoch_loss) || !params.all_finite())
      throw TrainingError("training diverged (non-finite loss or parameters)", epoch);

    double valid_acc = 0.0, valid_loss = 0.0;
    try {
      valid_acc = accuracy(config, params, valid_set);
      valid_loss = nn::mean_loss(config, params, valid_set);
    } catch (const NumericError& e) {
      throw TrainingError(std::string("training diverged: ") + e.what(), epoch);
    }
    result.history.push_back({epoch, epoch_loss, valid_acc, valid_loss});
    if (valid_acc > best_accuracy || (valid_acc == best_accuracy && valid_loss < best_loss)) {
      result.params = params;
      result.best_epoch = epoch;
      best_loss = valid_loss;
    }
    if (valid_acc > best_accuracy) {
      best_accuracy = valid_acc;
      stale = 0;
    } else if (++stale >= tcfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace wsn::nn
