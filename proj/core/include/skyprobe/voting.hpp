#pragma once

#include <array>
#include <span>

#include "skyprobe/model.hpp"

namespace skyprobe {

inline constexpr std::size_t kVoters = 3;

// One-hot vote δ: exactly one of the two indicators is set.
struct Vote {
  bool skype = false;
  bool normal = true;
  bool operator==(const Vote&) const = default;
};

// Argmax of the posterior; ties vote Normal.
constexpr Vote harden(const Posterior& p) noexcept {
  const bool s = label_of(p) == ClassLabel::Skype;
  return {s, !s};
}

struct EnsembleDecision {
  ClassLabel label = ClassLabel::Normal;
  int vote_count = 0;  // Skype votes, 0..3
  double score = 0;    // mean p_skype across voters
  bool operator==(const EnsembleDecision&) const = default;
};

// Hard majority over the hardened posteriors of exactly three classifiers
// (throws WrongArity otherwise). The score is the mean Skype posterior, used
// only for ranking.
EnsembleDecision majority_vote(std::span<const Posterior> posteriors);

class Ensemble {
 public:
  explicit Ensemble(ModelTriple models) : models_(std::move(models)) {}

  std::array<Prediction, kVoters> predict_each(const FeatureVector& v) const;
  EnsembleDecision decide(const FeatureVector& v) const;

  const ModelTriple& models() const noexcept { return models_; }

 private:
  ModelTriple models_;
};

}  // namespace skyprobe
