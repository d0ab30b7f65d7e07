#ifndef WSN_FAULT_SPEC_HPP
#define WSN_FAULT_SPEC_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace wsn {

enum class FaultKind { noise, short_term, fixed };

std::string_view to_string(FaultKind kind);
FaultKind fault_kind_from_string(std::string_view name);

/// A single fault (`second` empty) or a two-stage mixed fault applied to the
/// same segment, `kind` first and `second` after it.
struct FaultSpec {
  FaultKind kind = FaultKind::noise;
  std::optional<FaultKind> second;
  double r = 1.5;    // noise std as a multiple of the window's temperature std
  double f = 1.5;    // short-term amplitude multiplier
  double g = 300.0;  // stuck-at value
  int w = 20;        // faulted points per window
  std::uint64_t seed = 0;

  bool mixed() const noexcept { return second.has_value(); }

  /// "noise", "short", "fixed", or "noise+fixed" etc.
  std::string name() const;

  /// Intensity of the (first) fault: r, f or G.
  double intensity() const noexcept;

  static FaultSpec noise(double r, int w = 20) {
    FaultSpec s;
    s.kind = FaultKind::noise;
    s.r = r;
    s.w = w;
    return s;
  }
  static FaultSpec short_term(double f, int w = 20) {
    FaultSpec s;
    s.kind = FaultKind::short_term;
    s.f = f;
    s.w = w;
    return s;
  }
  static FaultSpec fixed(double g, int w = 20) {
    FaultSpec s;
    s.kind = FaultKind::fixed;
    s.g = g;
    s.w = w;
    return s;
  }
  static FaultSpec mixed(FaultKind first, FaultKind then, double r = 1.5, double f = 1.5,
                         double g = 300.0, int w = 20) {
    FaultSpec s;
    s.kind = first;
    s.second = then;
    s.r = r;
    s.f = f;
    s.g = g;
    s.w = w;
    return s;
  }

  /// Parses the forms produced by name(), taking intensities from `defaults`.
  static FaultSpec parse(std::string_view name, const FaultSpec& defaults);

  /// The single-fault spec for one component of this spec.
  FaultSpec component(FaultKind k) const {
    FaultSpec s = *this;
    s.kind = k;
    s.second.reset();
    return s;
  }

  friend bool operator==(const FaultSpec&, const FaultSpec&) = default;
};

}  // namespace wsn

#endif  // WSN_FAULT_SPEC_HPP
