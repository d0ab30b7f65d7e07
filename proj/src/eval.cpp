#include "wsn/eval.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "wsn/error.hpp"
#include "wsn/random.hpp"

namespace wsn {

Confusion confusion(std::span<const Label> predictions, std::span<const Label> labels) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                                std::to_string(labels.size()) + " labels");
  if (labels.empty()) throw std::invalid_argument("confusion: empty input");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = predictions[i] == Label::abnormal;
    const bool actual = labels[i] == Label::abnormal;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double da(const Confusion& c) {
  if (c.total() == 0) throw UndefinedMetricError("eval", "DA of an empty confusion matrix");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double tpr(const Confusion& c) {
  if (c.tp + c.fn == 0) throw UndefinedMetricError("eval", "TPR undefined: no abnormal samples");
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double pre(const Confusion& c) {
  if (c.tp + c.fp == 0) throw UndefinedMetricError("eval", "PRE undefined: nothing predicted abnormal");
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::M1: return "M1";
    case ModelKind::M2: return "M2";
    case ModelKind::M3: return "M3";
    case ModelKind::CART: return "CART";
  }
  return "?";
}

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "M1") return ModelKind::M1;
  if (name == "M2") return ModelKind::M2;
  if (name == "M3") return ModelKind::M3;
  if (name == "CART" || name == "cart") return ModelKind::CART;
  throw std::invalid_argument("unknown model: " + std::string(name));
}

nn::ModelConfig cnn_config(ModelKind kind) {
  switch (kind) {
    case ModelKind::M1: return nn::ModelConfig::from_preset(nn::Preset::M1);
    case ModelKind::M2: return nn::ModelConfig::from_preset(nn::Preset::M2);
    case ModelKind::M3: return nn::ModelConfig::from_preset(nn::Preset::M3);
    case ModelKind::CART: break;
  }
  throw std::invalid_argument("CART has no CNN configuration");
}

std::pair<std::vector<GrayImage>, std::vector<Label>> encode_all(std::span<const Window> windows,
                                                                 const NormStats& stats) {
  std::pair<std::vector<GrayImage>, std::vector<Label>> out;
  out.first.reserve(windows.size());
  out.second.reserve(windows.size());
  for (const auto& w : windows) {
    out.first.push_back(encode_window(w, stats));
    out.second.push_back(w.label());
  }
  return out;
}

EncodedCorpus encode_corpus(const LabeledCorpus& corpus, double valid_fraction, std::uint64_t seed) {
  EncodedCorpus e;
  e.stats = fit_stats(corpus.train);
  auto [valid, fit] = stratified_split(corpus.train, valid_fraction, seed);
  std::tie(e.fit_images, e.fit_labels) = encode_all(fit, e.stats);
  std::tie(e.valid_images, e.valid_labels) = encode_all(valid, e.stats);
  std::tie(e.test_images, e.test_labels) = encode_all(corpus.test, e.stats);
  return e;
}

Label TrainedModel::predict(const GrayImage& image) const {
  if (kind == ModelKind::CART) return tree.predict(image_features(image));
  return nn::predict(cnn_config(kind), cnn.params, image);
}

std::vector<Label> TrainedModel::predict(std::span<const GrayImage> images) const {
  std::vector<Label> out;
  out.reserve(images.size());
  for (const auto& im : images) out.push_back(predict(im));
  return out;
}

TrainedModel train_model(ModelKind kind, const EncodedCorpus& data, const GridConfig& cfg, std::uint64_t seed) {
  TrainedModel m;
  m.kind = kind;
  if (kind == ModelKind::CART) {
    const auto n = data.fit_images.size() + data.valid_images.size();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), kImageSide * kImageSide);
    std::vector<Label> y;
    y.reserve(n);
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < data.fit_images.size(); ++i, ++row) {
      x.row(row) = image_features(data.fit_images[i]).transpose();
      y.push_back(data.fit_labels[i]);
    }
    for (std::size_t i = 0; i < data.valid_images.size(); ++i, ++row) {
      x.row(row) = image_features(data.valid_images[i]).transpose();
      y.push_back(data.valid_labels[i]);
    }
    m.tree = train_cart(x, y, cfg.cart);
    return m;
  }
  auto tcfg = cfg.train;
  tcfg.seed = seed;
  const auto fit = nn::to_examples(data.fit_images, data.fit_labels);
  const auto valid = nn::to_examples(data.valid_images, data.valid_labels);
  m.cnn = nn::train(cnn_config(kind), fit, valid, tcfg);
  return m;
}

std::optional<double> ReportRow::da() const {
  if (pooled.total() == 0) return std::nullopt;
  return wsn::da(pooled);
}
std::optional<double> ReportRow::tpr() const {
  if (pooled.tp + pooled.fn == 0) return std::nullopt;
  return wsn::tpr(pooled);
}
std::optional<double> ReportRow::pre() const {
  if (pooled.tp + pooled.fp == 0) return std::nullopt;
  return wsn::pre(pooled);
}

std::optional<double> ReportRow::spread(double (*metric)(const Confusion&)) const {
  if (per_seed.empty()) return std::nullopt;
  std::vector<double> values;
  try {
    for (const auto& c : per_seed) values.push_back(metric(c));
  } catch (const UndefinedMetricError&) {
    return std::nullopt;
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

const ReportRow* EvalReport::find(std::string_view model, std::string_view fault_kind,
                                  std::string_view intensity) const {
  for (const auto& r : rows)
    if (r.model == model && r.fault_kind == fault_kind && r.intensity == intensity) return &r;
  return nullptr;
}

namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Runs fn(0..n-1) on up to `jobs` threads; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(workers, n); ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// Per-seed confusions for every model, with a fresh corpus per seed.
std::vector<std::vector<Confusion>> run_spec(std::span<const Window> data, std::span<const ModelKind> models,
                                             const FaultSpec& spec, const GridConfig& cfg, std::uint64_t spec_seed) {
  const auto seeds = static_cast<std::size_t>(std::max(1, cfg.seeds));
  std::vector<std::vector<Confusion>> out(models.size(), std::vector<Confusion>(seeds));
  parallel_for(seeds, cfg.jobs, [&](std::size_t rep) {
    const auto cell = derive_seed(spec_seed, rep);
    const auto corpus = build_corpus(data, spec, cfg.abnormal_fraction, cfg.split, derive_seed(cell, 0));
    const auto enc = encode_corpus(corpus, cfg.valid_fraction, derive_seed(cell, 1));
    for (std::size_t m = 0; m < models.size(); ++m) {
      const auto model = train_model(models[m], enc, cfg, derive_seed(cell, 2 + m));
      out[m][rep] = confusion(model.predict(enc.test_images), enc.test_labels);
    }
  });
  return out;
}

ReportRow make_row(ModelKind model, const FaultSpec& spec, std::vector<Confusion> per_seed) {
  ReportRow row;
  row.model = to_string(model);
  row.fault_kind = spec.name();
  row.intensity = intensity_label(spec);
  row.per_seed = std::move(per_seed);
  for (const auto& c : row.per_seed) row.pooled += c;
  return row;
}

FaultSpec single_spec(FaultKind kind, double intensity, int w) {
  switch (kind) {
    case FaultKind::noise: return FaultSpec::noise(intensity, w);
    case FaultKind::short_term: return FaultSpec::short_term(intensity, w);
    case FaultKind::fixed: return FaultSpec::fixed(intensity, w);
  }
  throw std::logic_error("unreachable fault kind");
}

}  // namespace

std::string intensity_label(const FaultSpec& spec) {
  std::string label = format_number(spec.intensity());
  if (spec.second) label += "+" + format_number(spec.component(*spec.second).intensity());
  return label;
}

EvalReport run_single_fault_grid(std::span<const Window> data, std::span<const ModelKind> models, FaultKind kind,
                                 std::span<const double> intensities, const GridConfig& cfg,
                                 const RowCallback& on_row) {
  EvalReport report;
  const auto grid_seed = derive_seed(cfg.master_seed, fnv1a(to_string(kind)));

  if (!cfg.train_once_at) {
    for (std::size_t i = 0; i < intensities.size(); ++i) {
      const auto spec = single_spec(kind, intensities[i], cfg.w);
      auto per_model = run_spec(data, models, spec, cfg, derive_seed(grid_seed, i));
      for (std::size_t m = 0; m < models.size(); ++m) {
        report.rows.push_back(make_row(models[m], spec, std::move(per_model[m])));
        if (on_row) on_row(report.rows.back());
      }
    }
    return report;
  }

  // Train once per seed at the reference intensity, test across the grid. The
  // corpus seed is shared so every intensity reuses the same window split.
  const auto seeds = static_cast<std::size_t>(std::max(1, cfg.seeds));
  const auto train_spec = single_spec(kind, *cfg.train_once_at, cfg.w);
  std::vector<std::vector<std::vector<Confusion>>> cells(
      intensities.size(), std::vector<std::vector<Confusion>>(models.size(), std::vector<Confusion>(seeds)));
  parallel_for(seeds, cfg.jobs, [&](std::size_t rep) {
    const auto cell = derive_seed(grid_seed, 1'000'000 + rep);
    const auto corpus_seed = derive_seed(cell, 0);
    const auto corpus = build_corpus(data, train_spec, cfg.abnormal_fraction, cfg.split, corpus_seed);
    const auto enc = encode_corpus(corpus, cfg.valid_fraction, derive_seed(cell, 1));
    std::vector<TrainedModel> trained;
    for (std::size_t m = 0; m < models.size(); ++m) trained.push_back(train_model(models[m], enc, cfg, derive_seed(cell, 2 + m)));
    for (std::size_t i = 0; i < intensities.size(); ++i) {
      const auto test_corpus =
          build_corpus(data, single_spec(kind, intensities[i], cfg.w), cfg.abnormal_fraction, cfg.split, corpus_seed);
      const auto [images, labels] = encode_all(test_corpus.test, enc.stats);
      for (std::size_t m = 0; m < models.size(); ++m) cells[i][m][rep] = confusion(trained[m].predict(images), labels);
    }
  });
  for (std::size_t i = 0; i < intensities.size(); ++i)
    for (std::size_t m = 0; m < models.size(); ++m) {
      report.rows.push_back(make_row(models[m], single_spec(kind, intensities[i], cfg.w), std::move(cells[i][m])));
      if (on_row) on_row(report.rows.back());
    }
  return report;
}

EvalReport run_mixed_fault_suite(std::span<const Window> data, std::span<const ModelKind> models,
                                 const GridConfig& cfg, double r, double f, double g, const RowCallback& on_row) {
  const FaultSpec specs[] = {
      FaultSpec::mixed(FaultKind::noise, FaultKind::fixed, r, f, g, cfg.w),
      FaultSpec::mixed(FaultKind::noise, FaultKind::short_term, r, f, g, cfg.w),
      FaultSpec::mixed(FaultKind::short_term, FaultKind::fixed, r, f, g, cfg.w),
  };
  EvalReport report;
  const auto suite_seed = derive_seed(cfg.master_seed, fnv1a("mixed"));
  for (std::size_t s = 0; s < std::size(specs); ++s) {
    auto per_model = run_spec(data, models, specs[s], cfg, derive_seed(suite_seed, s));
    for (std::size_t m = 0; m < models.size(); ++m) {
      report.rows.push_back(make_row(models[m], specs[s], std::move(per_model[m])));
      if (on_row) on_row(report.rows.back());
    }
  }
  return report;
}

namespace {

std::string percent(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v * 100.0);
  return buf;
}

}  // namespace

void write_csv_header(std::ostream& out) { out << "model,fault_kind,intensity,seed_count,tp,fp,tn,fn,DA,TPR,PRE\n"; }

void write_csv_row(std::ostream& out, const ReportRow& row) {
  out << row.model << ',' << row.fault_kind << ',' << row.intensity << ',' << row.per_seed.size() << ','
      << row.pooled.tp << ',' << row.pooled.fp << ',' << row.pooled.tn << ',' << row.pooled.fn << ','
      << percent(row.da()) << ',' << percent(row.tpr()) << ',' << percent(row.pre()) << '\n';
}

void write_csv(std::ostream& out, const EvalReport& report) {
  write_csv_header(out);
  for (const auto& row : report.rows) write_csv_row(out, row);
}

}  // namespace wsn
