#ifndef WSN_TOOLS_RUN_CONFIG_HPP
#define WSN_TOOLS_RUN_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wsn/eval.hpp"

namespace wsn::cli {

/// Everything a CLI run depends on. Output files are a pure function of it.
struct RunConfig {
  std::optional<std::filesystem::path> data;  // IBRL text file
  bool synthetic = false;                     // generate streams in memory instead
  std::size_t synthetic_samples = 70'000;     // per node
  std::vector<int> nodes = {1, 2};
  std::size_t stride = kWindowLength;
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 1;

  std::vector<ModelKind> models = {ModelKind::M1, ModelKind::M2, ModelKind::M3, ModelKind::CART};
  std::vector<double> noise_grid = {0.5, 1, 1.5, 2, 2.5, 3};
  std::vector<double> short_grid = {1.5, 2, 3, 5, 7, 10};
  std::vector<double> fixed_grid = {150, 300, 500};
  std::vector<std::string> grids = {"noise", "short", "fixed", "mixed"};
  double mixed_r = 1.5;
  double mixed_f = 1.5;
  double mixed_g = 300;

  GridConfig grid;
};

/// Reads a JSON config; unknown keys are an error.
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
void apply_json(RunConfig& config, const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);

/// Default output directory: $WSN_OUTPUT_DIR when set, else ".".
std::filesystem::path default_output_dir();

/// Windows for the configured nodes, from the dataset or the generator.
struct LoadedData {
  std::vector<Window> windows;
  bool synthetic = false;
  std::size_t samples = 0;
  std::size_t skipped_rows = 0;
};
LoadedData load_windows(const RunConfig& config);

nlohmann::json to_json(const NormStats& stats);
NormStats stats_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FaultSpec& spec);
FaultSpec fault_spec_from_json(const nlohmann::json& j);

}  // namespace wsn::cli

#endif  // WSN_TOOLS_RUN_CONFIG_HPP
