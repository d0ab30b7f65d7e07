#include "run_config.hpp"

#include <cstdlib>
#include <fstream>

#include "wsn/error.hpp"

namespace wsn::cli {

using nlohmann::json;

namespace {

std::vector<ModelKind> models_from_json(const json& j) {
  std::vector<ModelKind> out;
  for (const auto& m : j) out.push_back(model_kind_from_string(m.get<std::string>()));
  return out;
}

void apply_train(nn::TrainConfig& t, const json& j) {
  for (const auto& [key, value] : j.items()) {
    if (key == "learning_rate") t.learning_rate = value.get<double>();
    else if (key == "momentum") t.momentum = value.get<double>();
    else if (key == "batch_size") t.batch_size = value.get<int>();
    else if (key == "max_epochs") t.max_epochs = value.get<int>();
    else if (key == "patience") t.patience = value.get<int>();
    else throw std::invalid_argument("unknown train key: " + key);
  }
}

}  // namespace

void apply_json(RunConfig& c, const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "data") c.data = value.get<std::string>();
    else if (key == "synthetic") c.synthetic = value.get<bool>();
    else if (key == "synthetic_samples") c.synthetic_samples = value.get<std::size_t>();
    else if (key == "nodes") c.nodes = value.get<std::vector<int>>();
    else if (key == "stride") c.stride = value.get<std::size_t>();
    else if (key == "output_dir") c.output_dir = value.get<std::string>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "models") c.models = models_from_json(value);
    else if (key == "noise_grid") c.noise_grid = value.get<std::vector<double>>();
    else if (key == "short_grid") c.short_grid = value.get<std::vector<double>>();
    else if (key == "fixed_grid") c.fixed_grid = value.get<std::vector<double>>();
    else if (key == "grids") c.grids = value.get<std::vector<std::string>>();
    else if (key == "mixed_r") c.mixed_r = value.get<double>();
    else if (key == "mixed_f") c.mixed_f = value.get<double>();
    else if (key == "mixed_g") c.mixed_g = value.get<double>();
    else if (key == "seeds") c.grid.seeds = value.get<int>();
    else if (key == "abnormal_fraction") c.grid.abnormal_fraction = value.get<double>();
    else if (key == "split") c.grid.split = value.get<double>();
    else if (key == "valid_fraction") c.grid.valid_fraction = value.get<double>();
    else if (key == "w") c.grid.w = value.get<int>();
    else if (key == "jobs") c.grid.jobs = value.get<int>();
    else if (key == "train_once_at") {
      if (value.is_null()) c.grid.train_once_at.reset();
      else c.grid.train_once_at = value.get<double>();
    } else if (key == "train") apply_train(c.grid.train, value);
    else if (key == "cart") {
      for (const auto& [k, v] : value.items()) {
        if (k == "max_depth") c.grid.cart.max_depth = v.get<int>();
        else if (k == "min_leaf") c.grid.cart.min_leaf = v.get<int>();
        else throw std::invalid_argument("unknown cart key: " + k);
      }
    } else throw std::invalid_argument("unknown config key: " + key);
  }
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cli", "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("cli", "bad config " + path.string() + ": " + e.what());
  }
  apply_json(base, j);
  return base;
}

json to_json(const RunConfig& c) {
  json models = json::array();
  for (auto m : c.models) models.push_back(to_string(m));
  const auto& t = c.grid.train;
  return {
      {"data", c.data ? json(c.data->string()) : json(nullptr)},
      {"synthetic", c.synthetic},
      {"synthetic_samples", c.synthetic_samples},
      {"nodes", c.nodes},
      {"stride", c.stride},
      {"seed", c.seed},
      {"models", models},
      {"noise_grid", c.noise_grid},
      {"short_grid", c.short_grid},
      {"fixed_grid", c.fixed_grid},
      {"grids", c.grids},
      {"mixed_r", c.mixed_r},
      {"mixed_f", c.mixed_f},
      {"mixed_g", c.mixed_g},
      {"seeds", c.grid.seeds},
      {"abnormal_fraction", c.grid.abnormal_fraction},
      {"split", c.grid.split},
      {"valid_fraction", c.grid.valid_fraction},
      {"w", c.grid.w},
      {"train_once_at", c.grid.train_once_at ? json(*c.grid.train_once_at) : json(nullptr)},
      {"train",
       {{"learning_rate", t.learning_rate},
        {"momentum", t.momentum},
        {"batch_size", t.batch_size},
        {"max_epochs", t.max_epochs},
        {"patience", t.patience}}},
      {"cart", {{"max_depth", c.grid.cart.max_depth}, {"min_leaf", c.grid.cart.min_leaf}}},
  };
}

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("WSN_OUTPUT_DIR"); env && *env) return env;
  return ".";
}

LoadedData load_windows(const RunConfig& c) {
  LoadedData out;
  std::vector<Sample> samples;
  if (c.synthetic) {
    if (c.data) throw std::invalid_argument("give either a dataset or --synthetic, not both");
    out.synthetic = true;
    for (int node : c.nodes) {
      const auto s = synth_stream(node, c.synthetic_samples, derive_seed(c.seed, static_cast<std::uint64_t>(node)));
      samples.insert(samples.end(), s.samples.begin(), s.samples.end());
    }
  } else {
    if (!c.data) throw IoError("ingest", "no dataset given (use --data FILE or --synthetic)");
    auto parsed = parse_ibrl(*c.data);
    out.synthetic = parsed.synthetic;
    out.skipped_rows = parsed.skipped;
    samples = std::move(parsed.samples);
  }
  out.samples = samples.size();
  out.windows = windows_for_nodes(samples, c.nodes, c.stride);
  if (out.windows.empty()) throw EmptyStreamError("ingest", "no complete 64-sample windows for the requested nodes");
  return out;
}

json to_json(const NormStats& s) {
  return {{"min", std::vector<double>(s.min.data(), s.min.data() + kFeatureCount)},
          {"max", std::vector<double>(s.max.data(), s.max.data() + kFeatureCount)}};
}

NormStats stats_from_json(const json& j) {
  NormStats s;
  const auto lo = j.at("min").get<std::vector<double>>();
  const auto hi = j.at("max").get<std::vector<double>>();
  if (lo.size() != static_cast<std::size_t>(kFeatureCount) || hi.size() != lo.size())
    throw IoError("cli", "normalization stats need four features");
  for (int i = 0; i < kFeatureCount; ++i) {
    s.min(i) = lo[static_cast<std::size_t>(i)];
    s.max(i) = hi[static_cast<std::size_t>(i)];
  }
  return s;
}

json to_json(const FaultSpec& s) {
  return {{"name", s.name()}, {"r", s.r}, {"f", s.f}, {"g", s.g}, {"w", s.w}};
}

FaultSpec fault_spec_from_json(const json& j) {
  FaultSpec defaults;
  defaults.r = j.at("r").get<double>();
  defaults.f = j.at("f").get<double>();
  defaults.g = j.at("g").get<double>();
  defaults.w = j.at("w").get<int>();
  return FaultSpec::parse(j.at("name").get<std::string>(), defaults);
}

}  // namespace wsn::cli
