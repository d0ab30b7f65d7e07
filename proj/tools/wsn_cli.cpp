// wsn: fault injection, gray-image encoding, CNN/CART training and
// evaluation over IBRL-format sensor logs.

#include <algorithm>
#include <cstdio>
#include <functional>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "run_config.hpp"
#include "wsn/encode.hpp"
#include "wsn/error.hpp"
#include "wsn/eval.hpp"
#include "wsn/faults.hpp"
#include "wsn/ingest.hpp"
#include "wsn/nn/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wsn::cli {
namespace {

constexpr const char* kSyntheticWatermark = "# synthetic data, not an IBRL reproduction";

struct CommonOptions {
  std::optional<std::string> config;
  std::optional<std::string> data;
  bool synthetic = false;
  std::optional<std::vector<int>> nodes;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> jobs;
  std::optional<std::size_t> stride;
  std::optional<int> seeds;
  std::optional<int> epochs;
};

RunConfig resolve(const CommonOptions& o) {
  RunConfig c;
  c.output_dir = default_output_dir();
  if (o.config) c = load_run_config(*o.config, c);
  if (o.data) {
    c.data = *o.data;
    c.synthetic = false;
  }
  if (o.synthetic) {
    c.synthetic = true;
    c.data.reset();
  }
  if (o.nodes) c.nodes = *o.nodes;
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  if (o.jobs) c.grid.jobs = *o.jobs;
  if (o.stride) c.stride = *o.stride;
  if (o.seeds) c.grid.seeds = *o.seeds;
  if (o.epochs) c.grid.train.max_epochs = *o.epochs;
  c.grid.master_seed = c.seed;
  return c;
}

void add_common(CLI::App& app, CommonOptions& o) {
  app.add_option("--config", o.config, "JSON run config; flags override its values")->check(CLI::ExistingFile);
  app.add_option("--data", o.data, "IBRL data file");
  app.add_flag("--synthetic", o.synthetic, "use generated streams instead of a dataset");
  app.add_option("--nodes", o.nodes, "node ids")->delimiter(',');
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("-o,--out", o.out, "output directory (default $WSN_OUTPUT_DIR or .)");
  app.add_option("--jobs", o.jobs, "worker threads for grid cells")->check(CLI::PositiveNumber);
  app.add_option("--stride", o.stride, "window stride")->check(CLI::PositiveNumber);
  app.add_option("--seeds", o.seeds, "repetitions per grid cell")->check(CLI::PositiveNumber);
  app.add_option("--epochs", o.epochs, "maximum training epochs")->check(CLI::PositiveNumber);
}

std::string format_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
  return buf;
}

std::string seed_tag(std::uint64_t seed) { return "seed" + std::to_string(seed); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cli", "cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cli", "cannot write " + path.string());
  return out;
}

// Fault spec from a name and optional intensity overrides.
FaultSpec make_spec(const std::string& name, std::optional<double> intensity, std::optional<double> r,
                    std::optional<double> f, std::optional<double> g, int w) {
  FaultSpec defaults;
  defaults.w = w;
  if (r) defaults.r = *r;
  if (f) defaults.f = *f;
  if (g) defaults.g = *g;
  auto spec = FaultSpec::parse(name, defaults);
  if (intensity) {
    switch (spec.kind) {
      case FaultKind::noise: spec.r = *intensity; break;
      case FaultKind::short_term: spec.f = *intensity; break;
      case FaultKind::fixed: spec.g = *intensity; break;
    }
  }
  return spec;
}

void print_metrics(std::ostream& out, const Confusion& c) {
  out << "tp=" << c.tp << " fp=" << c.fp << " tn=" << c.tn << " fn=" << c.fn << std::endl;
  // Each metric throws UndefinedMetricError when its denominator is zero.
  const double d = da(c), t = tpr(c), p = pre(c);
  out << "DA=" << format_percent(d) << "\nTPR=" << format_percent(t) << "\nPRE=" << format_percent(p) << '\n';
}

void warn_if_synthetic(bool synthetic) {
  if (synthetic) std::cerr << "wsn: note: " << (kSyntheticWatermark + 2) << '\n';
}

// ---- synth ----

int cmd_synth(const RunConfig& c, std::size_t samples, const std::optional<std::string>& file) {
  std::vector<Sample> all;
  for (int node : c.nodes) {
    const auto s = synth_stream(node, samples, derive_seed(c.seed, static_cast<std::uint64_t>(node)));
    all.insert(all.end(), s.samples.begin(), s.samples.end());
  }
  fs::path path = file ? fs::path(*file) : c.output_dir / ("synthetic_" + seed_tag(c.seed) + ".txt");
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  auto out = open_out(path);
  write_ibrl(out, all, true);
  std::cout << path.string() << '\n';
  return 0;
}

// ---- encode ----

struct Category {
  const char* label;
  std::optional<FaultSpec> spec;
};

int cmd_encode(const RunConfig& c, std::optional<std::size_t> window_index, double r, double f, double g) {
  const auto data = load_windows(c);
  warn_if_synthetic(data.synthetic);

  std::size_t index = 0;
  if (window_index) {
    index = *window_index;
    if (index >= data.windows.size())
      throw std::invalid_argument("window index " + std::to_string(index) + " out of range (" +
                                  std::to_string(data.windows.size()) + " windows)");
  } else {
    while (index < data.windows.size() && temperature_std(data.windows[index]) == 0.0) ++index;
    if (index == data.windows.size()) throw DegenerateWindowError("faults", "every window has constant temperature");
  }
  const Window& base = data.windows[index];

  const int w = c.grid.w;
  const Category categories[] = {
      {"normal", std::nullopt},
      {"noise", FaultSpec::noise(r, w)},
      {"short", FaultSpec::short_term(f, w)},
      {"constant", FaultSpec::fixed(g, w)},
      {"noise+constant", FaultSpec::mixed(FaultKind::noise, FaultKind::fixed, r, f, g, w)},
      {"noise+short", FaultSpec::mixed(FaultKind::noise, FaultKind::short_term, r, f, g, w)},
      {"short+constant", FaultSpec::mixed(FaultKind::short_term, FaultKind::fixed, r, f, g, w)},
  };

  std::vector<Window> windows;
  for (std::size_t i = 0; i < std::size(categories); ++i)
    windows.push_back(categories[i].spec ? inject(base, *categories[i].spec, derive_seed(c.seed, i)) : base);

  // Statistics span every clean window plus the faulted ones so all seven
  // images share one gray scale.
  auto fit_set = data.windows;
  fit_set.insert(fit_set.end(), windows.begin() + 1, windows.end());
  const auto stats = fit_stats(fit_set);

  ensure_dir(c.output_dir);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto path = c.output_dir / (std::string(categories[i].label) + "_" + seed_tag(c.seed) + ".pgm");
    export_pgm(encode_window(windows[i], stats), path);
    std::cout << path.string() << '\n';
  }
  return 0;
}

// ---- train / eval ----

struct SplitData {
  LabeledCorpus corpus;
  EncodedCorpus encoded;
};

SplitData build_split(const std::vector<Window>& windows, const FaultSpec& spec, const RunConfig& c) {
  SplitData s;
  s.corpus = build_corpus(windows, spec, c.grid.abnormal_fraction, c.grid.split, derive_seed(c.seed, 0));
  s.encoded = encode_corpus(s.corpus, c.grid.valid_fraction, derive_seed(c.seed, 1));
  return s;
}

fs::path sidecar_path(const fs::path& model) { return fs::path(model.string() + ".json"); }

int cmd_train(const RunConfig& c, const std::string& model_name, const FaultSpec& spec,
              const std::optional<std::string>& model_out) {
  const auto kind = model_kind_from_string(model_name);
  if (kind == ModelKind::CART)
    throw std::invalid_argument("train saves CNN presets only (M1, M2, M3); CART runs inside reproduce");
  const auto data = load_windows(c);
  warn_if_synthetic(data.synthetic);
  const auto split = build_split(data.windows, spec, c);

  const auto trained = train_model(kind, split.encoded, c.grid, derive_seed(c.seed, 2));
  const auto test = confusion(trained.predict(split.encoded.test_images), split.encoded.test_labels);

  const fs::path path = model_out ? fs::path(*model_out)
                                  : c.output_dir / (model_name + "_" + spec.name() + "_" + seed_tag(c.seed) + ".model");
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  nn::save_model(path, cnn_config(kind), trained.cnn.params);

  json history = json::array();
  for (const auto& e : trained.cnn.history)
    history.push_back({{"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"valid_accuracy", e.valid_accuracy},
                       {"valid_loss", e.valid_loss}});
  const json meta = {
      {"model", model_name},
      {"fault", to_json(spec)},
      {"config", to_json(c)},
      {"synthetic", data.synthetic},
      {"stats", to_json(split.encoded.stats)},
      {"best_epoch", trained.cnn.best_epoch},
      {"history", history},
      {"test", {{"tp", test.tp}, {"fp", test.fp}, {"tn", test.tn}, {"fn", test.fn}}},
  };
  auto out = open_out(sidecar_path(path));
  out << meta.dump(2) << '\n';

  std::cout << "model " << path.string() << '\n';
  print_metrics(std::cout, test);
  return 0;
}

int cmd_eval(const CommonOptions& flags, const std::string& model_path, const std::optional<std::string>& fault,
             std::optional<double> intensity, bool normal_only) {
  const fs::path path(model_path);
  std::ifstream side(sidecar_path(path));
  if (!side) throw IoError("cli", "missing model metadata " + sidecar_path(path).string());
  json meta;
  try {
    meta = json::parse(side);
  } catch (const json::parse_error& e) {
    throw IoError("cli", "bad model metadata: " + std::string(e.what()));
  }

  // The training config reproduces the held-out split; flags override it.
  RunConfig c;
  apply_json(c, meta.at("config"));
  c.output_dir = default_output_dir();
  if (flags.config) c = load_run_config(*flags.config, c);
  if (flags.data) {
    c.data = *flags.data;
    c.synthetic = false;
  }
  if (flags.synthetic) {
    c.synthetic = true;
    c.data.reset();
  }
  if (flags.nodes) c.nodes = *flags.nodes;
  if (flags.seed) c.seed = *flags.seed;
  if (flags.stride) c.stride = *flags.stride;

  const auto config = nn::ModelConfig::parse(meta.at("model").get<std::string>());
  const auto model = nn::load_model(path, &config);
  const auto stats = stats_from_json(meta.at("stats"));

  FaultSpec spec = fault_spec_from_json(meta.at("fault"));
  if (fault || intensity) spec = make_spec(fault.value_or(spec.name()), intensity, spec.r, spec.f, spec.g, spec.w);

  const auto data = load_windows(c);
  warn_if_synthetic(data.synthetic);
  const auto corpus = build_corpus(data.windows, spec, c.grid.abnormal_fraction, c.grid.split, derive_seed(c.seed, 0));
  std::vector<Window> test;
  if (normal_only) {
    for (const auto& w : corpus.test)
      if (w.label() == Label::normal) test.push_back(w);
  } else {
    test = corpus.test;
  }
  const auto [images, labels] = encode_all(test, stats);
  std::vector<Label> predictions;
  predictions.reserve(images.size());
  for (const auto& im : images) predictions.push_back(nn::predict(model.config, model.params, im));
  print_metrics(std::cout, confusion(predictions, labels));
  return 0;
}

// ---- reproduce ----

class CsvSink {
 public:
  CsvSink(const fs::path& path, bool synthetic) : out_(open_out(path)) {
    if (synthetic) out_ << kSyntheticWatermark << '\n';
    write_csv_header(out_);
    out_.flush();
  }
  void operator()(const ReportRow& row) {
    write_csv_row(out_, row);
    out_.flush();
    std::cout << row.model << ' ' << row.fault_kind << ' ' << row.intensity << " DA="
              << (row.da() ? format_percent(*row.da()) : "NA") << '\n'
              << std::flush;
  }

 private:
  std::ofstream out_;
};

json report_summary(const EvalReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json per_seed = json::array();
    for (const auto& c : r.per_seed) per_seed.push_back({c.tp, c.fp, c.tn, c.fn});
    auto metric = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    rows.push_back({{"model", r.model},
                    {"fault_kind", r.fault_kind},
                    {"intensity", r.intensity},
                    {"per_seed", per_seed},
                    {"DA", metric(r.da())},
                    {"TPR", metric(r.tpr())},
                    {"PRE", metric(r.pre())},
                    {"DA_std", metric(r.spread(da))},
                    {"TPR_std", metric(r.spread(tpr))},
                    {"PRE_std", metric(r.spread(pre))}});
  }
  return rows;
}

void write_metadata(const fs::path& path, const json& meta) {
  auto out = open_out(path);
  out << meta.dump(2) << '\n';
}

int cmd_reproduce(const RunConfig& c, const std::vector<std::string>& attachments) {
  const auto data = load_windows(c);
  warn_if_synthetic(data.synthetic);
  ensure_dir(c.output_dir);

  json attached = json::object();
  for (const auto& a : attachments) {
    std::ifstream in(a);
    if (!in) throw IoError("cli", "cannot read attachment " + a);
    std::stringstream ss;
    ss << in.rdbuf();
    attached[fs::path(a).filename().string()] = ss.str();
  }

  json param_counts = json::object();
  for (auto m : c.models)
    if (m != ModelKind::CART)
      param_counts[to_string(m)] = nn::ModelParams<double>::zeros(cnn_config(m)).parameter_count();

  json meta = {
      {"format", "wsn-run 1"},
      {"synthetic", data.synthetic},
      {"data_source", data.synthetic ? std::string(kSyntheticWatermark + 2) : c.data->string()},
      {"config", to_json(c)},
      {"windows", data.windows.size()},
      {"samples", data.samples},
      {"skipped_rows", data.skipped_rows},
      {"parameter_counts", param_counts},
      {"defaults",
       {{"window_length", kWindowLength},
        {"image_side", kImageSide},
        {"padding", "same, zero filled"},
        {"activation", "relu after C1, C2, F1; softmax output"},
        {"loss", "mean cross-entropy"},
        {"init", "uniform +-sqrt(6/fan_in), zero bias"},
        {"optimizer", "sgd with momentum"},
        {"early_stopping", "validation DA, best epoch kept, ties to lower validation loss"},
        {"label_tie", "abnormal"},
        {"normalization", "min-max fitted on the training split, clamped to [0,1]"},
        {"gray", "floor(255 x + 0.5)"},
        {"cart", "gini, midpoint thresholds, trained on training split incl. validation"},
        {"pooled_metrics", "confusion summed over seeds"}}},
      {"attachments", attached},
      {"completed", false},
  };
  const auto meta_path = c.output_dir / "run_metadata.json";
  write_metadata(meta_path, meta);

  json results = json::object();
  auto wants = [&](const std::string& g) { return std::find(c.grids.begin(), c.grids.end(), g) != c.grids.end(); };
  for (const auto& [name, kind, grid] : {std::tuple{"noise", FaultKind::noise, &c.noise_grid},
                                         std::tuple{"short", FaultKind::short_term, &c.short_grid},
                                         std::tuple{"fixed", FaultKind::fixed, &c.fixed_grid}}) {
    if (!wants(name)) continue;
    CsvSink sink(c.output_dir / (std::string("single_") + name + ".csv"), data.synthetic);
    const auto report = run_single_fault_grid(data.windows, c.models, kind, *grid, c.grid, std::ref(sink));
    results[std::string("single_") + name] = report_summary(report);
  }
  if (wants("mixed")) {
    CsvSink sink(c.output_dir / "mixed.csv", data.synthetic);
    const auto report =
        run_mixed_fault_suite(data.windows, c.models, c.grid, c.mixed_r, c.mixed_f, c.mixed_g, std::ref(sink));
    results["mixed"] = report_summary(report);
  }

  meta["results"] = results;
  meta["completed"] = true;
  write_metadata(meta_path, meta);
  std::cout << meta_path.string() << '\n';
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Sensor fault detection with gray-image CNNs and a CART baseline", "wsn"};
  app.require_subcommand(1);
  CommonOptions common;

  auto* synth = app.add_subcommand("synth", "write generated streams in IBRL format");
  add_common(*synth, common);
  std::size_t synth_samples = 70'000;
  std::optional<std::string> synth_file;
  synth->add_option("--samples", synth_samples, "samples per node")->check(CLI::PositiveNumber);
  synth->add_option("--file", synth_file, "output file");

  auto* encode = app.add_subcommand("encode", "export one window as seven PGM images (normal and six fault types)");
  add_common(*encode, common);
  std::optional<std::size_t> window_index;
  double enc_r = 1.5, enc_f = 1.5, enc_g = 300;
  encode->add_option("--window", window_index, "window index (default: first non-constant)");
  encode->add_option("--r", enc_r, "noise intensity");
  encode->add_option("--f", enc_f, "short-term intensity");
  encode->add_option("--g", enc_g, "fixed value");

  std::string model_name = "M2";
  std::string fault_name = "fixed";
  std::optional<double> intensity, fr, ff, fg;
  std::optional<std::string> model_out;
  auto* train = app.add_subcommand("train", "train one CNN preset on one fault type and save it");
  add_common(*train, common);
  train->add_option("--model", model_name, "M1, M2 or M3");
  train->add_option("--fault", fault_name, "noise, short, fixed or a pair such as noise+short");
  train->add_option("--intensity", intensity, "intensity of the first fault");
  train->add_option("--r", fr, "noise intensity");
  train->add_option("--f", ff, "short-term intensity");
  train->add_option("--g", fg, "fixed value");
  train->add_option("--model-out", model_out, "model file path");

  std::string eval_model;
  std::optional<std::string> eval_fault;
  std::optional<double> eval_intensity;
  bool normal_only = false;
  auto* eval = app.add_subcommand("eval", "evaluate a saved model on its held-out split or a variant of it");
  add_common(*eval, common);
  eval->add_option("model", eval_model, "model file written by train")->required()->check(CLI::ExistingFile);
  eval->add_option("--fault", eval_fault, "evaluate against a different fault type");
  eval->add_option("--intensity", eval_intensity, "evaluate at a different intensity");
  eval->add_flag("--normal-only", normal_only, "drop abnormal windows from the test split");

  std::vector<std::string> models, grids, attachments;
  std::optional<double> train_once_at;
  auto* reproduce = app.add_subcommand("reproduce", "run the single-fault grids and the mixed-fault suite");
  add_common(*reproduce, common);
  reproduce->add_option("--models", models, "subset of M1,M2,M3,CART")->delimiter(',');
  reproduce->add_option("--grids", grids, "subset of noise,short,fixed,mixed")->delimiter(',');
  reproduce->add_option("--train-once-at", train_once_at, "train once per seed at this intensity");
  reproduce->add_option("--attach", attachments, "text file to embed in run_metadata.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (*synth) return cmd_synth(resolve(common), synth_samples, synth_file);
  if (*encode) return cmd_encode(resolve(common), window_index, enc_r, enc_f, enc_g);
  if (*train) {
    const auto c = resolve(common);
    return cmd_train(c, model_name, make_spec(fault_name, intensity, fr, ff, fg, c.grid.w), model_out);
  }
  if (*eval) return cmd_eval(common, eval_model, eval_fault, eval_intensity, normal_only);
  if (*reproduce) {
    auto c = resolve(common);
    if (!models.empty()) {
      c.models.clear();
      for (const auto& m : models) c.models.push_back(model_kind_from_string(m));
    }
    if (!grids.empty()) {
      for (const auto& g : grids)
        if (g != "noise" && g != "short" && g != "fixed" && g != "mixed")
          throw std::invalid_argument("unknown grid: " + g);
      c.grids = grids;
    }
    if (train_once_at) c.grid.train_once_at = *train_once_at;
    return cmd_reproduce(c, attachments);
  }
  return 1;
}

}  // namespace
}  // namespace wsn::cli

int main(int argc, char** argv) {
  try {
    return wsn::cli::run(argc, argv);
  } catch (const wsn::Error& e) {
    std::cerr << "wsn: " << e.module() << ": " << e.what() << '\n';
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "wsn: cli: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "wsn: cli: " << e.what() << '\n';
  }
  return 1;
}
