#ifndef WSN_FAULTS_HPP
#define WSN_FAULTS_HPP

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "wsn/fault_spec.hpp"
#include "wsn/ingest.hpp"

namespace wsn {

// Injectors touch only the temperature channel and return an abnormal copy of
// the window. Segment offsets and indices are drawn from Rng(seed).

/// Adds N(0, (r*s)^2) to a contiguous run of `w` temperatures, where s is the
/// sample std of the window's temperatures before injection. Throws
/// DegenerateWindowError when s == 0.
Window inject_noise(const Window& window, double r, int w, std::uint64_t seed);

/// Scales `w` distinct randomly chosen temperatures by (1 + f).
Window inject_short(const Window& window, double f, int w, std::uint64_t seed);

/// Sets a contiguous run of `w` temperatures to `g`.
Window inject_fixed(const Window& window, double g, int w, std::uint64_t seed);

/// Picks one contiguous segment of length a.w, applies `a` to every point of
/// it and then `b` to the result.
Window inject_mixed(const Window& window, const FaultSpec& a, const FaultSpec& b, std::uint64_t seed);

/// Dispatches on `spec` (single or mixed).
Window inject(const Window& window, const FaultSpec& spec, std::uint64_t seed);

struct LabeledCorpus {
  std::vector<Window> train;
  std::vector<Window> test;
  FaultSpec spec;
  double abnormal_fraction = 0.5;
  double split = 0.7;
  std::uint64_t seed = 0;
};

/// Faults a seeded subset of round(n * abnormal_fraction) windows with `spec`,
/// then splits each class so that round(count * split) goes to train.
/// Windows on which the fault is undefined (zero-variance noise) stay normal.
/// Throws CorpusError when either class would be missing from either split.
LabeledCorpus build_corpus(std::span<const Window> windows, const FaultSpec& spec,
                           double abnormal_fraction, double split, std::uint64_t seed);

/// Stratified seeded split: first part receives round(count * fraction) of
/// each class.
std::pair<std::vector<Window>, std::vector<Window>> stratified_split(std::span<const Window> windows,
                                                                     double fraction, std::uint64_t seed);

/// Sample standard deviation (n - 1 denominator) of the window's temperatures.
double temperature_std(const Window& window);

}  // namespace wsn

#endif  // WSN_FAULTS_HPP
