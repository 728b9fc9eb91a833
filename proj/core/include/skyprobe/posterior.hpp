#pragma once

#include "skyprobe/dataset.hpp"

namespace skyprobe {

struct Posterior {
  double p_skype = 0.5;
  double p_normal = 0.5;

  static Posterior from_skype(double p) noexcept { return {p, 1.0 - p}; }
  bool operator==(const Posterior&) const = default;
};

// Maximum a posteriori label; an exact tie goes to Normal.
constexpr ClassLabel label_of(const Posterior& p) noexcept {
  return p.p_skype > p.p_normal ? ClassLabel::Skype : ClassLabel::Normal;
}

struct Prediction {
  ClassLabel label = ClassLabel::Normal;
  Posterior posterior;
};

}  // namespace skyprobe
