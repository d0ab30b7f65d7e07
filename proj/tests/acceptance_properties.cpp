// Property acceptance suite. One PASS/FAIL line per criterion; exit status is
// the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>

#include "oracles.hpp"
#include "wsn/encode.hpp"
#include "wsn/eval.hpp"
#include "wsn/faults.hpp"
#include "wsn/nn/model.hpp"

using namespace wsn;
using namespace wsn::nn;

namespace {

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("%s criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Norm-wise relative error max|a - b| / max|b|.
double rel_error(const Matrix<double>& a, const Matrix<double>& b) {
  const double scale = b.cwiseAbs().maxCoeff();
  const double diff = (a - b).cwiseAbs().maxCoeff();
  return scale == 0.0 ? diff : diff / scale;
}

void gradient_correctness() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t checked = 0, refined = 0;
  for (auto preset : {Preset::M1, Preset::M2, Preset::M3}) {
    const auto cfg = ModelConfig::from_preset(preset);
    for (std::uint64_t input = 0; input < 5; ++input) {
      std::mt19937_64 rng(1000 + 10 * static_cast<std::uint64_t>(preset) + input);
      auto params = ModelParams<double>::init(cfg, rng());
      std::uniform_real_distribution<double> u(-0.1, 0.1);
      for (auto t : params.tensors())
        for (auto& v : t)
          if (v == 0.0) v = u(rng);
      const std::vector<Example<double>> batch = {
          {oracle::random_tensor(16, 16, 1, rng), rng() % 2 ? Label::abnormal : Label::normal}};
      const auto lg = loss_and_backward<double>(cfg, params, batch);
      const auto check = oracle::finite_difference_check(cfg, params, batch, lg.gradient);
      worst = std::max(worst, check.max_rel_error);
      checked += check.checked;
      refined += check.refined;
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(1, "gradient correctness", worst < 1e-4 && seconds < 300.0,
         fmt("max relative error %.3g over ", worst) + std::to_string(checked) + " parameters (" +
             std::to_string(refined) + fmt(" stepped around a kink), %.1f s", seconds));
}

void oracle_equivalence() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> half_side(1, 8), channels(1, 4), outs(1, 8), ksize(0, 2), features(1, 300);
  std::uniform_real_distribution<double> u(-1, 1);
  double conv_err = 0.0, dense_err = 0.0;
  bool pool_exact = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int h = 2 * half_side(rng), w = 2 * half_side(rng), c = channels(rng), k = 2 * ksize(rng) + 1;
    const auto in = oracle::random_tensor(h, w, c, rng, -1, 1);
    ConvKernels<double> kernels(k, c, outs(rng));
    for (Eigen::Index i = 0; i < kernels.weights.size(); ++i) kernels.weights.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < kernels.bias.size(); ++i) kernels.bias(i) = u(rng);
    conv_err = std::max(conv_err, rel_error(conv2d_same(in, kernels).data, oracle::conv(in, kernels).data));

    pool_exact = pool_exact && maxpool2(in).output.data == oracle::maxpool(in).data;

    const int n_in = features(rng), n_out = outs(rng);
    DenseLayer<double> layer(n_in, n_out);
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = u(rng);
    Vector<double> x(n_in);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = u(rng);
    const auto want = oracle::dense(std::span<const double>(x.data(), static_cast<std::size_t>(n_in)), layer);
    dense_err = std::max(dense_err, rel_error(dense(x, layer), Eigen::Map<const Vector<double>>(want.data(), n_out)));
  }
  report(2, "oracle equivalence", conv_err <= 1e-12 && dense_err <= 1e-12 && pool_exact,
         fmt("conv %.3g, dense %.3g relative; maxpool ", conv_err, dense_err) + (pool_exact ? "exact" : "MISMATCH") +
             " over 100 shapes");
}

void shape_contract() {
  std::mt19937_64 rng(3);
  bool ok = true;
  std::string detail;
  for (auto preset : {Preset::M1, Preset::M2, Preset::M3}) {
    const auto cfg = ModelConfig::from_preset(preset);
    const auto t = forward_trace(cfg, ModelParams<double>::init(cfg, 1), oracle::random_tensor(16, 16, 1, rng));
    const int width = preset == Preset::M3 ? 128 : 64;
    const bool pass = t.c1.height == 16 && t.c1.width == 16 && t.c1.channels() == 8 && t.s1.output.height == 8 &&
                      t.s1.output.width == 8 && t.s1.output.channels() == 8 && t.c2.height == 8 && t.c2.width == 8 &&
                      t.c2.channels() == 16 && t.s2.output.height == 4 && t.s2.output.width == 4 &&
                      t.s2.output.channels() == 16 && t.f1.size() == width && t.probs.size() == 2;
    ok = ok && pass;
    detail += cfg.name() + (pass ? " ok " : " WRONG ");
  }
  report(3, "shape contract", ok, detail + "(16x16x8, 8x8x8, 8x8x16, 4x4x16, 64|128, 2)");
}

void metric_exactness() {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> count(0, 1000);
  bool ok = true;
  int checked = 0;
  // Reduced fractions; integer division by the gcd keeps num/den exact, and
  // IEEE division of exact integers is the correctly rounded rational value.
  auto exact = [](std::size_t num, std::size_t den) {
    const auto g = std::gcd(num, den);
    return static_cast<double>(num / g) / static_cast<double>(den / g);
  };
  while (checked < 20) {
    Confusion c{count(rng), count(rng), count(rng), count(rng)};
    if (c.tp + c.fn == 0 || c.tp + c.fp == 0) continue;
    ok = ok && da(c) == exact(c.tp + c.tn, c.total()) && tpr(c) == exact(c.tp, c.tp + c.fn) &&
         pre(c) == exact(c.tp, c.tp + c.fp);
    ++checked;
  }
  report(4, "metric exactness", ok, std::to_string(checked) + " random confusion matrices");
}

void injection_laws() {
  std::mt19937_64 rng(5);
  const int w = 20;
  const double g = 300.0;
  bool overwrite = true, only_temperature = true;
  for (int trial = 0; trial < 200; ++trial) {
    const auto base = oracle::random_window(rng);
    const auto seed = rng();
    for (auto first : {FaultKind::noise, FaultKind::short_term}) {
      const auto out = inject(base, FaultSpec::mixed(first, FaultKind::fixed, 2.0, 3.0, g, w), seed);
      std::vector<std::size_t> stuck;
      for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (out.values[i].temperature == g) stuck.push_back(i);
        else overwrite = overwrite && out.values[i].temperature == base.values[i].temperature;
      }
      overwrite = overwrite && stuck.size() == static_cast<std::size_t>(w) && stuck.back() - stuck.front() == w - 1u;
    }
    const FaultSpec specs[] = {FaultSpec::noise(1.5, w), FaultSpec::short_term(2, w), FaultSpec::fixed(g, w),
                               FaultSpec::mixed(FaultKind::noise, FaultKind::short_term, 1.5, 2, g, w),
                               FaultSpec::mixed(FaultKind::noise, FaultKind::fixed, 1.5, 2, g, w),
                               FaultSpec::mixed(FaultKind::short_term, FaultKind::fixed, 1.5, 2, g, w)};
    for (const auto& spec : specs) {
      const auto out = inject(base, spec, seed);
      for (std::size_t i = 0; i < out.values.size(); ++i) {
        const auto &a = base.values[i], &b = out.values[i];
        only_temperature = only_temperature && a.epoch == b.epoch && a.node_id == b.node_id &&
                           a.humidity == b.humidity && a.light == b.light && a.voltage == b.voltage;
      }
    }
  }

  // Pooled deviations of 10,000 noise injections against r times the window std.
  const auto base = oracle::random_window(rng);
  const double sigma = temperature_std(base);
  double worst = 0.0;
  for (double r : {0.5, 1.5, 3.0}) {
    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    for (int draw = 0; draw < 10'000; ++draw) {
      const auto out = inject_noise(base, r, w, rng());
      for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double d = out.values[i].temperature - base.values[i].temperature;
        if (d == 0.0) continue;
        sum += d;
        sum_sq += d * d;
        ++n;
      }
    }
    const double mean = sum / static_cast<double>(n);
    const double sd = std::sqrt((sum_sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1));
    worst = std::max(worst, std::abs(sd / (r * sigma) - 1.0));
  }
  report(5, "injection laws", overwrite && only_temperature && worst <= 0.05,
         std::string("fixed overwrite ") + (overwrite ? "holds" : "BROKEN") + ", only temperature " +
             (only_temperature ? "holds" : "BROKEN") + fmt(", noise scale off by %.2f%% at worst", 100 * worst));
}

void encoding_bijection() {
  std::mt19937_64 rng(6);
  bool placement = true;
  for (int trial = 0; trial < 100; ++trial) {
    const auto win = oracle::random_window(rng);
    NormStats st;
    st.min << 10, 20, 0, 2;
    st.max << 35, 50, 800, 3;
    const auto img = encode_window(win, st);
    std::vector<int> hits(256, 0);
    for (int r = 0; r < kImageSide; ++r)
      for (int c = 0; c < kImageSide; ++c) {
        const auto [feature, sample] = oracle::cell_source(r, c);
        ++hits[static_cast<std::size_t>(4 * sample + feature)];
        const double v = win.values[static_cast<std::size_t>(sample)].feature(feature);
        placement = placement && img.pixels(r, c) == to_gray(normalize(v, st.min(feature), st.max(feature)));
      }
    placement = placement && std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; });
  }

  const auto dir = std::filesystem::temp_directory_path() / "wsn_acceptance_pgm";
  std::filesystem::create_directories(dir);
  bool round_trip = true;
  std::uniform_int_distribution<int> px(0, 255);
  for (int trial = 0; trial < 100; ++trial) {
    GrayImage img;
    for (int r = 0; r < kImageSide; ++r)
      for (int c = 0; c < kImageSide; ++c) img.pixels(r, c) = static_cast<std::uint8_t>(px(rng));
    const auto path = dir / ("img" + std::to_string(trial) + ".pgm");
    export_pgm(img, path);
    round_trip = round_trip && read_pgm(path).pixels == img.pixels;
  }
  std::filesystem::remove_all(dir);
  report(6, "encoding bijection", placement && round_trip,
         std::string("placement ") + (placement ? "round-trips 256 values" : "BROKEN") + " on 100 windows, PGM " +
             (round_trip ? "bit-exact" : "MISMATCH") + " on 100 images");
}

}  // namespace

int main() {
  gradient_correctness();
  oracle_equivalence();
  shape_contract();
  metric_exactness();
  injection_laws();
  encoding_bijection();
  std::printf("%d of 6 property criteria failed\n", failures);
  return failures;
}
