#include "wsn/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

#include "wsn/error.hpp"
#include "wsn/random.hpp"

namespace wsn {

double Sample::feature(int index) const {
  switch (index) {
    case 0: return temperature;
    case 1: return humidity;
    case 2: return light;
    case 3: return voltage;
  }
  throw std::out_of_range("feature index");
}

double& Sample::feature(int index) {
  switch (index) {
    case 0: return temperature;
    case 1: return humidity;
    case 2: return light;
    case 3: return voltage;
  }
  throw std::out_of_range("feature index");
}

namespace {

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::optional<Sample> parse_row(std::string_view line) {
  std::array<std::string_view, 8> tokens;
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
    if (count == tokens.size()) return std::nullopt;
    tokens[count++] = line.substr(pos, end - pos);
    pos = end;
  }
  if (count != tokens.size()) return std::nullopt;

  Sample s;
  if (!parse_number(tokens[2], s.epoch) || !parse_number(tokens[3], s.node_id)) return std::nullopt;
  if (s.node_id < 1) return std::nullopt;
  for (int k = 0; k < kFeatureCount; ++k) {
    double v = 0.0;
    if (!parse_number(tokens[4 + k], v) || !std::isfinite(v)) return std::nullopt;
    s.feature(k) = v;
  }
  return s;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

}  // namespace

ParseResult parse_ibrl(std::istream& in) {
  ParseResult result;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view view(line);
    if (!view.empty() && view.front() == '#') {
      if (view.find("synthetic") != std::string_view::npos) result.synthetic = true;
      continue;
    }
    if (is_blank(view)) continue;
    if (auto s = parse_row(view)) {
      result.samples.push_back(*s);
    } else {
      ++result.skipped;
    }
  }
  if (in.bad()) throw IoError("ingest", "read failure while parsing IBRL input");
  if (result.samples.empty()) {
    throw EmptyInputError("ingest", "no parseable IBRL rows (" + std::to_string(result.skipped) +
                                        " malformed)");
  }
  return result;
}

ParseResult parse_ibrl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("ingest", "cannot open " + path.string());
  return parse_ibrl(in);
}

NodeStream build_node_stream(std::span<const Sample> samples, int node_id) {
  NodeStream stream;
  stream.node_id = node_id;
  for (const auto& s : samples)
    if (s.node_id == node_id) stream.samples.push_back(s);
  if (stream.samples.empty())
    throw EmptyStreamError("ingest", "no samples for node " + std::to_string(node_id));

  std::stable_sort(stream.samples.begin(), stream.samples.end(),
                   [](const Sample& a, const Sample& b) { return a.epoch < b.epoch; });
  auto last = std::unique(stream.samples.begin(), stream.samples.end(),
                          [](const Sample& a, const Sample& b) { return a.epoch == b.epoch; });
  stream.samples.erase(last, stream.samples.end());
  return stream;
}

std::vector<Window> slide_windows(const NodeStream& stream, std::size_t length, std::size_t stride) {
  if (length == 0 || stride == 0) throw std::invalid_argument("slide_windows: length and stride must be positive");
  std::vector<Window> windows;
  const auto& s = stream.samples;
  for (std::size_t m = 0; m + length <= s.size(); m += stride) {
    Window w;
    w.node_id = stream.node_id;
    w.start = m;
    w.values.assign(s.begin() + static_cast<std::ptrdiff_t>(m),
                    s.begin() + static_cast<std::ptrdiff_t>(m + length));
    windows.push_back(std::move(w));
  }
  return windows;
}

NodeStream synth_stream(int node_id, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("synth_stream: n must be positive");
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(node_id)));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double day_phase = phase(rng);
  const double drift_phase = phase(rng);
  const double volt_phase = phase(rng);

  // Jitter is clipped at three standard deviations so ranges hold exactly.
  auto jitter = [&](double sd) { return sd * std::clamp(gauss(rng), -3.0, 3.0); };

  constexpr double kDay = 2787.0;  // ~31 s sampling
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  NodeStream stream;
  stream.node_id = node_id;
  stream.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    const double day = std::sin(kTwoPi * t / kDay + day_phase);
    Sample s;
    s.epoch = static_cast<std::int64_t>(i) + 1;
    s.node_id = node_id;
    s.temperature = 22.0 + 5.0 * day + 1.5 * std::sin(kTwoPi * t / 613.0 + drift_phase) + jitter(0.15);
    s.humidity = 35.0 - 6.0 * day + jitter(0.3);
    s.light = std::clamp(300.0 + 280.0 * std::sin(kTwoPi * t / kDay + day_phase + 0.5) + jitter(5.0),
                         0.0, 600.0);
    s.voltage = 2.55 + 0.2 * std::cos(kTwoPi * t / 20000.0 + volt_phase) + jitter(0.005);
    stream.samples.push_back(s);
  }
  return stream;
}

namespace {

void append_double(std::string& out, double v) {
  std::array<char, 64> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), ptr);
}

}  // namespace

void write_ibrl(std::ostream& out, std::span<const Sample> samples, bool synthetic_marker) {
  if (synthetic_marker) out << "# synthetic stream; not IBRL measurements\n";
  std::string line;
  for (const auto& s : samples) {
    line = "2004-02-28 00:00:00.00000 ";
    line += std::to_string(s.epoch);
    line += ' ';
    line += std::to_string(s.node_id);
    for (int k = 0; k < kFeatureCount; ++k) {
      line += ' ';
      append_double(line, s.feature(k));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw IoError("ingest", "write failure");
}

std::vector<Window> windows_for_nodes(std::span<const Sample> samples, std::span<const int> nodes,
                                      std::size_t stride) {
  std::vector<Window> all;
  for (int node : nodes) {
    auto windows = slide_windows(build_node_stream(samples, node), kWindowLength, stride);
    std::move(windows.begin(), windows.end(), std::back_inserter(all));
  }
  return all;
}

}  // namespace wsn
