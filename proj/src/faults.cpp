#include "wsn/faults.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "wsn/error.hpp"
#include "wsn/random.hpp"

namespace wsn {

std::string_view to_string(FaultKind kind) {
  switch (kind) {
    case FaultKind::noise: return "noise";
    case FaultKind::short_term: return "short";
    case FaultKind::fixed: return "fixed";
  }
  return "?";
}

FaultKind fault_kind_from_string(std::string_view name) {
  if (name == "noise") return FaultKind::noise;
  if (name == "short") return FaultKind::short_term;
  if (name == "fixed" || name == "constant") return FaultKind::fixed;
  throw std::invalid_argument("unknown fault kind: " + std::string(name));
}

std::string FaultSpec::name() const {
  std::string n(to_string(kind));
  if (second) {
    n += '+';
    n += to_string(*second);
  }
  return n;
}

double FaultSpec::intensity() const noexcept {
  switch (kind) {
    case FaultKind::noise: return r;
    case FaultKind::short_term: return f;
    case FaultKind::fixed: return g;
  }
  return 0.0;
}

FaultSpec FaultSpec::parse(std::string_view name, const FaultSpec& defaults) {
  FaultSpec s = defaults;
  s.second.reset();
  const auto plus = name.find('+');
  s.kind = fault_kind_from_string(name.substr(0, plus));
  if (plus != std::string_view::npos) s.second = fault_kind_from_string(name.substr(plus + 1));
  return s;
}

namespace {

void check_run(const Window& window, int w) {
  if (w <= 0 || static_cast<std::size_t>(w) > window.values.size())
    throw std::invalid_argument("fault length w must be in [1, window length]");
}

std::size_t segment_offset(Rng& rng, const Window& window, int w) {
  std::uniform_int_distribution<std::size_t> pick(0, window.values.size() - static_cast<std::size_t>(w));
  return pick(rng);
}

void apply_to_segment(Window& out, FaultKind kind, const FaultSpec& params, double base_std,
                      std::size_t offset, int w, Rng& rng) {
  switch (kind) {
    case FaultKind::noise: {
      std::normal_distribution<double> eps(0.0, params.r * base_std);
      for (int i = 0; i < w; ++i) out.values[offset + i].temperature += eps(rng);
      break;
    }
    case FaultKind::short_term:
      for (int i = 0; i < w; ++i) {
        auto& t = out.values[offset + i].temperature;
        t = t + params.f * t;
      }
      break;
    case FaultKind::fixed:
      for (int i = 0; i < w; ++i) out.values[offset + i].temperature = params.g;
      break;
  }
}

double noise_base_std(const Window& window) {
  const double s = temperature_std(window);
  if (!(s > 0.0))
    throw DegenerateWindowError("faults", "window at node " + std::to_string(window.node_id) + " offset " +
                                              std::to_string(window.start) + " has constant temperature");
  return s;
}

}  // namespace

double temperature_std(const Window& window) {
  const auto n = window.values.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (const auto& s : window.values) mean += s.temperature;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (const auto& s : window.values) ss += (s.temperature - mean) * (s.temperature - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

Window inject_noise(const Window& window, double r, int w, std::uint64_t seed) {
  check_run(window, w);
  if (!(r > 0.0)) throw std::invalid_argument("noise intensity r must be positive");
  const double base = noise_base_std(window);
  Rng rng(seed);
  const auto offset = segment_offset(rng, window, w);
  Window out = window;
  FaultSpec spec = FaultSpec::noise(r, w);
  spec.seed = seed;
  apply_to_segment(out, FaultKind::noise, spec, base, offset, w, rng);
  out.fault = spec;
  return out;
}

Window inject_short(const Window& window, double f, int w, std::uint64_t seed) {
  check_run(window, w);
  if (!(f > 0.0)) throw std::invalid_argument("short intensity f must be positive");
  Rng rng(seed);
  std::vector<std::size_t> idx(window.values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  Window out = window;
  for (int i = 0; i < w; ++i) {
    auto& t = out.values[idx[i]].temperature;
    t = t + f * t;
  }
  FaultSpec spec = FaultSpec::short_term(f, w);
  spec.seed = seed;
  out.fault = spec;
  return out;
}

Window inject_fixed(const Window& window, double g, int w, std::uint64_t seed) {
  check_run(window, w);
  Rng rng(seed);
  const auto offset = segment_offset(rng, window, w);
  Window out = window;
  FaultSpec spec = FaultSpec::fixed(g, w);
  spec.seed = seed;
  apply_to_segment(out, FaultKind::fixed, spec, 0.0, offset, w, rng);
  out.fault = spec;
  return out;
}

Window inject_mixed(const Window& window, const FaultSpec& a, const FaultSpec& b, std::uint64_t seed) {
  if (a.mixed() || b.mixed()) throw std::invalid_argument("mixed components must be single faults");
  if (a.kind == b.kind) throw std::invalid_argument("mixed fault needs two distinct kinds");
  check_run(window, a.w);
  if (a.kind == FaultKind::noise && !(a.r > 0.0)) throw std::invalid_argument("noise intensity r must be positive");
  if (b.kind == FaultKind::noise && !(b.r > 0.0)) throw std::invalid_argument("noise intensity r must be positive");

  const bool has_noise = a.kind == FaultKind::noise || b.kind == FaultKind::noise;
  const double base = has_noise ? noise_base_std(window) : 0.0;

  Rng rng(seed);
  const auto offset = segment_offset(rng, window, a.w);
  Window out = window;
  apply_to_segment(out, a.kind, a, base, offset, a.w, rng);
  apply_to_segment(out, b.kind, b, base, offset, a.w, rng);

  FaultSpec spec = a;
  spec.second = b.kind;
  if (b.kind == FaultKind::noise) spec.r = b.r;
  if (b.kind == FaultKind::short_term) spec.f = b.f;
  if (b.kind == FaultKind::fixed) spec.g = b.g;
  spec.seed = seed;
  out.fault = spec;
  return out;
}

Window inject(const Window& window, const FaultSpec& spec, std::uint64_t seed) {
  if (spec.mixed()) return inject_mixed(window, spec.component(spec.kind), spec.component(*spec.second), seed);
  switch (spec.kind) {
    case FaultKind::noise: return inject_noise(window, spec.r, spec.w, seed);
    case FaultKind::short_term: return inject_short(window, spec.f, spec.w, seed);
    case FaultKind::fixed: return inject_fixed(window, spec.g, spec.w, seed);
  }
  throw std::logic_error("unreachable fault kind");
}

namespace {

std::size_t rounded(double x) { return static_cast<std::size_t>(std::llround(x)); }

}  // namespace

std::pair<std::vector<Window>, std::vector<Window>> stratified_split(std::span<const Window> windows,
                                                                     double fraction, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < windows.size(); ++i)
    by_class[static_cast<int>(windows[i].label())].push_back(i);

  std::pair<std::vector<Window>, std::vector<Window>> out;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_first = rounded(static_cast<double>(members.size()) * fraction);
    for (std::size_t k = 0; k < members.size(); ++k)
      (k < n_first ? out.first : out.second).push_back(windows[members[k]]);
  }
  std::shuffle(out.first.begin(), out.first.end(), rng);
  std::shuffle(out.second.begin(), out.second.end(), rng);
  return out;
}

LabeledCorpus build_corpus(std::span<const Window> windows, const FaultSpec& spec, double abnormal_fraction,
                           double split, std::uint64_t seed) {
  if (!(abnormal_fraction > 0.0 && abnormal_fraction < 1.0))
    throw std::invalid_argument("abnormal_fraction must be in (0, 1)");
  if (!(split > 0.0 && split < 1.0)) throw std::invalid_argument("split must be in (0, 1)");

  const auto target = rounded(static_cast<double>(windows.size()) * abnormal_fraction);
  Rng rng(seed);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Window> pool;
  pool.reserve(windows.size());
  std::vector<bool> faulted(windows.size(), false);
  std::size_t made = 0;
  for (auto idx : order) {
    if (made == target) break;
    try {
      pool.push_back(inject(windows[idx], spec, derive_seed(seed, idx + 1)));
      faulted[idx] = true;
      ++made;
    } catch (const DegenerateWindowError&) {
      // stays in the normal pool
    }
  }
  if (made < target)
    throw CorpusError("faults", "only " + std::to_string(made) + " of " + std::to_string(target) +
                                    " windows accept fault " + spec.name());
  for (std::size_t i = 0; i < windows.size(); ++i)
    if (!faulted[i]) pool.push_back(windows[i]);

  auto [train, test] = stratified_split(pool, split, mix64(seed));
  auto has_both = [](const std::vector<Window>& v) {
    const auto ab = std::count_if(v.begin(), v.end(), [](const Window& w) { return w.label() == Label::abnormal; });
    return ab > 0 && static_cast<std::size_t>(ab) < v.size();
  };
  if (!has_both(train) || !has_both(test))
    throw CorpusError("faults", "too few windows (" + std::to_string(windows.size()) +
                                    ") for both classes in both splits");

  LabeledCorpus corpus;
  corpus.train = std::move(train);
  corpus.test = std::move(test);
  corpus.spec = spec;
  corpus.abnormal_fraction = abnormal_fraction;
  corpus.split = split;
  corpus.seed = seed;
  return corpus;
}

}  // namespace wsn
