#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "skyprobe/errors.hpp"
#include "skyprobe/voting.hpp"

using namespace skyprobe;

namespace {

Posterior hard(bool skype) { return skype ? Posterior{0.8, 0.2} : Posterior{0.2, 0.8}; }

}  // namespace

TEST(Harden, Examples) {
  EXPECT_EQ(harden({0.7, 0.3}), (Vote{true, false}));
  EXPECT_EQ(harden({0.5, 0.5}), (Vote{false, true}));
}

TEST(MajorityVote, Examples) {
  const std::array<Posterior, 3> ssn{hard(true), hard(true), hard(false)};
  const auto d = majority_vote(ssn);
  EXPECT_EQ(d.label, ClassLabel::Skype);
  EXPECT_EQ(d.vote_count, 2);
  const std::array<Posterior, 3> nnn{hard(false), hard(false), hard(false)};
  EXPECT_EQ(majority_vote(nnn).label, ClassLabel::Normal);
  EXPECT_EQ(majority_vote(nnn).vote_count, 0);
}

TEST(MajorityVote, ExhaustiveModeEquivalence) {
  for (int mask = 0; mask < 8; ++mask) {
    std::array<Posterior, 3> ps;
    int skype = 0;
    for (int i = 0; i < 3; ++i) {
      const bool s = (mask >> i) & 1;
      ps[static_cast<std::size_t>(i)] = hard(s);
      skype += s;
    }
    const auto mode = skype >= 2 ? ClassLabel::Skype : ClassLabel::Normal;
    const auto d = majority_vote(ps);
    EXPECT_EQ(d.label, mode) << "mask " << mask;
    EXPECT_EQ(d.vote_count, skype);
  }
}

TEST(MajorityVote, PermutationAndUnanimity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::array<Posterior, 3> ps;
    for (auto& p : ps) p = Posterior::from_skype(u(rng));
    const auto base = majority_vote(ps);
    std::sort(ps.begin(), ps.end(), [](auto& a, auto& b) { return a.p_skype < b.p_skype; });
    do {
      const auto d = majority_vote(ps);
      EXPECT_EQ(d.label, base.label);
      EXPECT_EQ(d.vote_count, base.vote_count);
    } while (std::next_permutation(ps.begin(), ps.end(), [](auto& a, auto& b) { return a.p_skype < b.p_skype; }));
    const std::array<Posterior, 3> same{ps[0], ps[0], ps[0]};
    EXPECT_EQ(majority_vote(same).label, label_of(ps[0]));
  }
}

TEST(MajorityVote, WrongArity) {
  const std::array<Posterior, 2> two{};
  EXPECT_THROW(majority_vote(two), WrongArity);
}
