#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace piatms {

/// A necessity lower bound in (0, 1], stored as a fixed-point decimal with
/// four fractional digits so that ordering and equality are exact.
/// Zero support is represented by absence (std::optional<Weight>), never by
/// a stored Weight.
class Weight {
 public:
  static constexpr std::int32_t kScale = 10000;

  static Weight from_raw(std::int32_t raw) {
    if (raw < 1 || raw > kScale)
      throw std::invalid_argument("Weight raw value out of (0,1]: " + std::to_string(raw));
    return Weight(raw);
  }

  /// Rounds half-up to the fixed scale.
  static Weight from_double(double v) {
    auto raw = static_cast<std::int32_t>(std::llround(v * kScale));
    return from_raw(raw);
  }

  /// Exact rational num/den rounded to the fixed scale.
  static Weight from_ratio(std::int64_t num, std::int64_t den) {
    if (den <= 0 || num <= 0) throw std::invalid_argument("Weight ratio must be positive");
    std::int64_t raw = (num * kScale + den / 2) / den;
    if (raw > kScale) raw = kScale;
    return from_raw(static_cast<std::int32_t>(raw));
  }

  static constexpr Weight one() { return Weight(kScale); }

  /// Parses "1", "0.35", ".3333"; at most four fractional digits.
  static std::optional<Weight> parse(std::string_view s);

  std::int32_t raw() const { return raw_; }
  double value() const { return static_cast<double>(raw_) / kScale; }

  /// Canonical decimal rendering with trailing zeros trimmed: "0.35", "1".
  std::string str() const;

  auto operator<=>(const Weight&) const = default;

 private:
  constexpr explicit Weight(std::int32_t raw) : raw_(raw) {}
  std::int32_t raw_;
};

inline std::string Weight::str() const {
  if (raw_ == kScale) return "1";
  std::string frac = std::to_string(raw_);
  frac.insert(frac.begin(), 4 - frac.size(), '0');
  while (frac.back() == '0') frac.pop_back();
  return "0." + frac;
}

inline std::optional<Weight> Weight::parse(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::size_t dot = s.find('.');
  std::string_view whole = s.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? "" : s.substr(dot + 1);
  if (frac.size() > 4) return std::nullopt;
  std::int64_t raw = 0;
  for (char c : whole) {
    if (c < '0' || c > '9') return std::nullopt;
    raw = raw * 10 + (c - '0');
    if (raw > 1) return std::nullopt;
  }
  raw *= kScale;
  std::int32_t place = kScale / 10;
  for (char c : frac) {
    if (c < '0' || c > '9') return std::nullopt;
    raw += static_cast<std::int64_t>(c - '0') * place;
    place /= 10;
  }
  if (raw < 1 || raw > kScale) return std::nullopt;
  return Weight::from_raw(static_cast<std::int32_t>(raw));
}

/// min over the premise degrees and the justification degree: the support a
/// single derivation step confers on its conclusion.
inline Weight combine_support(std::span<const Weight> premise_degrees, Weight justification_degree) {
  if (premise_degrees.empty())
    throw std::invalid_argument("combine_support: empty premise list");
  Weight acc = justification_degree;
  for (Weight w : premise_degrees)
    if (w < acc) acc = w;
  return acc;
}

/// max-merge of a new derivation degree into an existing one: a weaker
/// derivation never lowers established certainty.
inline Weight merge_degree(std::optional<Weight> existing, Weight candidate) {
  if (existing && *existing > candidate) return *existing;
  return candidate;
}

}  // namespace piatms
