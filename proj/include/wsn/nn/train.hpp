#ifndef WSN_NN_TRAIN_HPP
#define WSN_NN_TRAIN_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "wsn/nn/model.hpp"

namespace wsn::nn {

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  int batch_size = 32;
  int max_epochs = 50;
  int patience = 5;  // epochs without validation improvement before stopping
  std::uint64_t seed = 1;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean over the epoch's batches
  double valid_accuracy = 0.0;
  double valid_loss = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  ModelParams<double> params;  // best validation accuracy, lower validation loss on ties
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

/// Mini-batch SGD with momentum on mean cross-entropy. Batches are reshuffled
/// every epoch; training stops early once validation accuracy has not
/// improved for `patience` epochs. The returned parameters are those of the
/// epoch with the highest validation accuracy, ties going to the lower
/// validation loss. Deterministic for a given seed.
/// Throws TrainingError if the loss becomes non-finite.
TrainResult train(const ModelConfig& config, std::span<const Example<double>> train_set,
                  std::span<const Example<double>> valid_set, const TrainConfig& tcfg);

/// Fraction of examples whose predicted label matches.
double accuracy(const ModelConfig& config, const ModelParams<double>& params,
                std::span<const Example<double>> examples);

/// Mean cross-entropy over the examples.
double mean_loss(const ModelConfig& config, const ModelParams<double>& params,
                 std::span<const Example<double>> examples);

std::vector<Example<double>> to_examples(std::span<const GrayImage> images, std::span<const Label> labels);

// Text model format: a header naming the preset, then every tensor as
// hexadecimal floating point so a save/load round trip is bit-exact.

void save_model(std::ostream& out, const ModelConfig& config, const ModelParams<double>& params);
void save_model(const std::filesystem::path& path, const ModelConfig& config, const ModelParams<double>& params);

struct LoadedModel {
  ModelConfig config;
  ModelParams<double> params;
};

/// Throws VersionError on an unknown format version or when `expected` is
/// given and names a different preset.
LoadedModel load_model(std::istream& in, const ModelConfig* expected = nullptr);
LoadedModel load_model(const std::filesystem::path& path, const ModelConfig* expected = nullptr);

}  // namespace wsn::nn

#endif  // WSN_NN_TRAIN_HPP
