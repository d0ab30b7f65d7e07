#ifndef WSN_INGEST_HPP
#define WSN_INGEST_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <vector>

#include "wsn/fault_spec.hpp"

namespace wsn {

constexpr std::size_t kWindowLength = 64;
constexpr int kFeatureCount = 4;

/// One reading of a mote. Feature order everywhere is T, H, L, V.
struct Sample {
  std::int64_t epoch = 0;
  int node_id = 1;
  double temperature = 0.0;  // degrees C
  double humidity = 0.0;     // %RH
  double light = 0.0;        // lux
  double voltage = 0.0;      // V

  double feature(int index) const;
  double& feature(int index);

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct NodeStream {
  int node_id = 0;
  std::vector<Sample> samples;  // strictly increasing epoch
};

enum class Label { normal = 0, abnormal = 1 };

struct Window {
  int node_id = 0;
  std::size_t start = 0;        // offset m into the node stream
  std::vector<Sample> values;   // kWindowLength samples
  std::optional<FaultSpec> fault;

  Label label() const noexcept { return fault ? Label::abnormal : Label::normal; }
};

struct ParseResult {
  std::vector<Sample> samples;
  std::size_t skipped = 0;
  /// Set when the source carries a "# synthetic" marker line.
  bool synthetic = false;
};

/// Reads whitespace-separated IBRL rows:
/// `date time epoch moteid temperature humidity light voltage`.
/// Rows with missing, extra or non-finite fields are skipped and counted.
/// Lines beginning with '#' are comments. Throws EmptyInputError when no row
/// parses.
ParseResult parse_ibrl(std::istream& in);

/// As above, reading from a file. Throws IoError when it cannot be opened.
ParseResult parse_ibrl(const std::filesystem::path& path);

/// Samples of one node, sorted by epoch, first occurrence kept on duplicate
/// epochs. Throws EmptyStreamError when the node has no samples.
NodeStream build_node_stream(std::span<const Sample> samples, int node_id);

/// Consecutive length-`length` windows every `stride` samples. A trailing
/// remainder is dropped; all windows start out normal.
std::vector<Window> slide_windows(const NodeStream& stream, std::size_t length = kWindowLength,
                                  std::size_t stride = kWindowLength);

/// Deterministic pseudo-IBRL stream: slow sinusoids plus clipped Gaussian
/// jitter. Temperature stays in [10, 35] for every seed.
NodeStream synth_stream(int node_id, std::size_t n, std::uint64_t seed);

/// Writes samples in IBRL row format (with a "# synthetic" marker when
/// requested). Output re-parses to the same samples.
void write_ibrl(std::ostream& out, std::span<const Sample> samples, bool synthetic_marker);

/// Windows of every listed node, concatenated in node order.
std::vector<Window> windows_for_nodes(std::span<const Sample> samples, std::span<const int> nodes,
                                      std::size_t stride = kWindowLength);

}  // namespace wsn

#endif  // WSN_INGEST_HPP
