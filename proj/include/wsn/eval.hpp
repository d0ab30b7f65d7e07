#ifndef WSN_EVAL_HPP
#define WSN_EVAL_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "wsn/cart.hpp"
#include "wsn/encode.hpp"
#include "wsn/fault_spec.hpp"
#include "wsn/faults.hpp"
#include "wsn/ingest.hpp"
#include "wsn/nn/train.hpp"

namespace wsn {

/// Counts with abnormal as the positive class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }

  Confusion& operator+=(const Confusion& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// Throws std::invalid_argument on length mismatch or empty input.
Confusion confusion(std::span<const Label> predictions, std::span<const Label> labels);

/// Detection accuracy (tp + tn) / total. Throws UndefinedMetricError if empty.
double da(const Confusion& c);
/// True positive rate tp / (tp + fn). Throws UndefinedMetricError if tp + fn == 0.
double tpr(const Confusion& c);
/// Precision tp / (tp + fp). Throws UndefinedMetricError if tp + fp == 0.
double pre(const Confusion& c);

enum class ModelKind { M1, M2, M3, CART };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);
nn::ModelConfig cnn_config(ModelKind kind);

struct GridConfig {
  int seeds = 5;
  std::uint64_t master_seed = 1;
  double abnormal_fraction = 0.5;
  double split = 0.7;
  double valid_fraction = 0.15;  // of the training split, used for early stopping
  nn::TrainConfig train;         // seed is replaced per cell
  CartConfig cart;
  int w = 20;
  /// Single-fault grids only: train one model per seed at this intensity and
  /// test it at every grid intensity.
  std::optional<double> train_once_at;
  int jobs = 1;
};

/// A labeled corpus encoded with statistics fitted on its training split.
struct EncodedCorpus {
  NormStats stats;
  std::vector<GrayImage> fit_images;  // training split minus validation
  std::vector<Label> fit_labels;
  std::vector<GrayImage> valid_images;
  std::vector<Label> valid_labels;
  std::vector<GrayImage> test_images;
  std::vector<Label> test_labels;
};

EncodedCorpus encode_corpus(const LabeledCorpus& corpus, double valid_fraction, std::uint64_t seed);

/// Encodes `windows` with precomputed stats.
std::pair<std::vector<GrayImage>, std::vector<Label>> encode_all(std::span<const Window> windows,
                                                                 const NormStats& stats);

/// A trained model of either family.
struct TrainedModel {
  ModelKind kind = ModelKind::M2;
  nn::TrainResult cnn;
  DecisionTree tree;

  Label predict(const GrayImage& image) const;
  std::vector<Label> predict(std::span<const GrayImage> images) const;
};

/// Trains `kind` on the fit/valid images of `data`. CART trains on fit and
/// valid images together (it has no early stopping).
TrainedModel train_model(ModelKind kind, const EncodedCorpus& data, const GridConfig& cfg, std::uint64_t seed);

struct ReportRow {
  std::string model;
  std::string fault_kind;
  std::string intensity;
  std::vector<Confusion> per_seed;
  Confusion pooled;  // sum over seeds; metrics below derive from it

  std::optional<double> da() const;
  std::optional<double> tpr() const;
  std::optional<double> pre() const;
  /// Population std across seeds of the per-seed metric; nullopt when any
  /// seed leaves it undefined.
  std::optional<double> spread(double (*metric)(const Confusion&)) const;
};

struct EvalReport {
  std::vector<ReportRow> rows;

  const ReportRow* find(std::string_view model, std::string_view fault_kind, std::string_view intensity) const;
};

using RowCallback = std::function<void(const ReportRow&)>;

/// Fresh corpus and fresh models per (intensity, seed); every model of a cell
/// sees the same corpus. Rows come out intensity-major in `models` order and
/// are handed to `on_row` as soon as they are complete.
EvalReport run_single_fault_grid(std::span<const Window> data, std::span<const ModelKind> models, FaultKind kind,
                                 std::span<const double> intensities, const GridConfig& cfg,
                                 const RowCallback& on_row = {});

/// Noise+fixed, noise+short and short+fixed at the given intensities.
EvalReport run_mixed_fault_suite(std::span<const Window> data, std::span<const ModelKind> models,
                                 const GridConfig& cfg, double r = 1.5, double f = 1.5, double g = 300.0,
                                 const RowCallback& on_row = {});

/// Intensity label used in reports ("0.5", "300", "1.5+300").
std::string intensity_label(const FaultSpec& spec);

/// CSV header and rows: model,fault_kind,intensity,seed_count,tp,fp,tn,fn,DA,TPR,PRE
/// with metrics as percentages to two decimals ("NA" when undefined).
void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const ReportRow& row);
void write_csv(std::ostream& out, const EvalReport& report);

}  // namespace wsn

#endif  // WSN_EVAL_HPP
