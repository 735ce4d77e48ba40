#pragma once

#include <functional>
#include <stdexcept>

#include "piatms/fusion/doctrine.hpp"
#include "piatms/fusion/unit.hpp"
#include "piatms/weight.hpp"

namespace piatms::fusion {

/// Floor for the completeness and temporal factors (0.05).
inline constexpr std::int32_t kFactorFloorRaw = 500;

/// Optional strictly increasing remapping applied to every atomic certainty
/// factor before combination; identity when empty. Ranking is sensitive only
/// to the relative order of the weights, which this hook lets tests and
/// sensitivity analyses exercise.
using WeightTransform = std::function<Weight(Weight)>;

struct CertaintyFactors {
  Weight base = Weight::one();
  Weight completeness = Weight::one();
  Weight temporal = Weight::one();

  bool operator==(const CertaintyFactors&) const = default;
};

inline Weight floor_factor(Weight w) {
  return w.raw() < kFactorFloorRaw ? Weight::from_raw(kFactorFloorRaw) : w;
}

inline Weight completeness_factor(int observed, int required) {
  if (required <= 0 || observed <= 0 || observed > required)
    throw std::invalid_argument("completeness_factor: bad counts");
  return floor_factor(Weight::from_ratio(observed, required));
}

inline Weight temporal_factor(int span_minutes, int max_span_minutes) {
  if (max_span_minutes <= 0) throw std::invalid_argument("temporal_factor: bad max span");
  if (span_minutes >= max_span_minutes) return Weight::from_raw(kFactorFloorRaw);
  if (span_minutes <= 0) return Weight::one();
  return floor_factor(Weight::from_ratio(max_span_minutes - span_minutes, max_span_minutes));
}

inline Weight apply_transform(const WeightTransform& tf, Weight w) { return tf ? tf(w) : w; }

inline Weight combine_certainty(const CertaintyFactors& f, const WeightTransform& tf = {}) {
  return std::min({apply_transform(tf, f.base), apply_transform(tf, f.completeness),
                   apply_transform(tf, f.temporal)});
}

inline CertaintyFactors certainty_factors(const Unit& unit, const Template& tmpl) {
  CertaintyFactors f;
  f.base = tmpl.base_weight;
  f.completeness = completeness_factor(static_cast<int>(unit.sub_units.size()), tmpl.required_total());
  f.temporal = temporal_factor(unit.t1 - unit.t0, tmpl.max_span_minutes);
  return f;
}

/// Certainty of an aggregated unit under doctrine: min of the template base
/// weight, the completeness ratio and the remaining temporal slack. Leaf
/// observations keep their message-supplied confidence.
inline Weight certainty(const Unit& unit, const Doctrine& doctrine, const WeightTransform& tf = {}) {
  if (unit.sub_units.empty() && unit.leaves == std::vector<std::string>{unit.id})
    return apply_transform(tf, unit.certainty);
  const Template* tmpl = doctrine.find(unit.level, unit.type);
  if (!tmpl)
    throw std::invalid_argument("no doctrine template for " + std::string(to_string(unit.level)) +
                                "/" + unit.type);
  return combine_certainty(certainty_factors(unit, *tmpl), tf);
}

}  // namespace piatms::fusion
