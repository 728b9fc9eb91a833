#include "skyprobe/voting.hpp"

#include "skyprobe/errors.hpp"

namespace skyprobe {

EnsembleDecision majority_vote(std::span<const Posterior> posteriors) {
  if (posteriors.size() != kVoters)
    throw WrongArity("majority vote needs exactly 3 classifiers, got " + std::to_string(posteriors.size()));
  int skype = 0;
  int normal = 0;
  double sum = 0;
  for (const Posterior& p : posteriors) {
    const Vote v = harden(p);
    skype += v.skype;
    normal += v.normal;
    sum += p.p_skype;
  }
  EnsembleDecision d;
  d.vote_count = skype;
  d.label = skype > normal ? ClassLabel::Skype : ClassLabel::Normal;
  d.score = sum / static_cast<double>(kVoters);
  return d;
}

std::array<Prediction, kVoters> Ensemble::predict_each(const FeatureVector& v) const {
  return {predict(models_[0], v), predict(models_[1], v), predict(models_[2], v)};
}

EnsembleDecision Ensemble::decide(const FeatureVector& v) const {
  const auto each = predict_each(v);
  const std::array<Posterior, kVoters> ps{each[0].posterior, each[1].posterior, each[2].posterior};
  return majority_vote(ps);
}

}  // namespace skyprobe
