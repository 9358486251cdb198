#include <gtest/gtest.h>

#include <random>

#include "peerkt/error.hpp"
#include "peerkt/repository.hpp"
#include "test_support.hpp"

using namespace peerkt;
using peerkt::testing::ev;

namespace {

const Dimension kFractions{DimensionKind::Concept, "fractions"};

InteractionRepository repo_with(std::initializer_list<Dimension> dims) {
  InteractionRepository r;
  for (const auto& d : dims) r.register_dimension(d);
  return r;
}

std::vector<std::uint8_t> bits(std::initializer_list<int> xs) {
  std::vector<std::uint8_t> v;
  for (int x : xs) v.push_back(static_cast<std::uint8_t>(x));
  return v;
}

}  // namespace

TEST(Repository, SingleInteractionBuildsOneList) {
  auto repo = repo_with({kFractions});
  const Dimension dims[] = {kFractions};
  repo.record(ev("a", "s", "q", "fractions", true, 0), dims);
  const auto* list = repo.outcomes("s", kFractions);
  ASSERT_NE(list, nullptr);
  EXPECT_EQ(list->correct, bits({1}));
}

TEST(Repository, PreservesOrder) {
  auto repo = repo_with({kFractions});
  const Dimension dims[] = {kFractions};
  repo.record(ev("a", "s", "q1", "fractions", true, 0), dims);
  repo.record(ev("a", "s", "q2", "fractions", false, 1), dims);
  EXPECT_EQ(repo.outcomes("s", kFractions)->correct, bits({1, 0}));
}

TEST(Repository, EqualOrderIndexIsOutOfOrder) {
  auto repo = repo_with({kFractions});
  const Dimension dims[] = {kFractions};
  repo.record(ev("a", "s", "q1", "fractions", true, 3), dims);
  try {
    repo.record(ev("a", "s", "q2", "fractions", true, 3), dims);
    FAIL() << "expected OutOfOrder";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfOrder);
  }
  EXPECT_EQ(repo.interaction_count(), 1u);
  EXPECT_EQ(repo.outcomes("s", kFractions)->size(), 1u);
}

TEST(Repository, UnknownDimensionRejectedWithoutSideEffects) {
  auto repo = repo_with({kFractions});
  const Dimension dims[] = {kFractions, {DimensionKind::Concept, "decimals"}};
  try {
    repo.record(ev("a", "s", "q1", "fractions", true, 0), dims);
    FAIL() << "expected UnknownDimension";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownDimension);
  }
  EXPECT_TRUE(repo.empty());
  EXPECT_EQ(repo.outcomes("s", kFractions), nullptr);
}

TEST(Dwa, Examples) {
  EXPECT_DOUBLE_EQ(dwa(bits({1, 1, 1}), 0.8), 1.0);
  EXPECT_NEAR(dwa(bits({1, 0, 1}), 0.8), 1.64 / 2.44, 1e-12);
  EXPECT_NEAR(dwa(bits({1, 0, 1}), 0.8), 0.67213, 1e-5);
  EXPECT_DOUBLE_EQ(dwa(bits({0}), 0.8), 0.0);
}

TEST(Dwa, EmptyHistoryIsAnError) {
  try {
    dwa({}, 0.8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyHistory);
  }
}

TEST(Perf, Examples) {
  InteractionRepository repo;
  EXPECT_FALSE(repo.perf("nobody", kFractions, {}).has_value());

  const auto p = perf_of(bits({1, 1, 0, 1}), {});
  ASSERT_TRUE(p);
  EXPECT_DOUBLE_EQ(p->acc, 0.75);
  EXPECT_EQ(p->attempts, 4u);
  EXPECT_NEAR(p->dwa, 2.152 / 2.952, 1e-12);
  EXPECT_NEAR(p->dwa, 0.72900, 1e-5);

  const auto one = perf_of(bits({1}), {});
  EXPECT_DOUBLE_EQ(one->acc, 1.0);
  EXPECT_DOUBLE_EQ(one->dwa, 1.0);
  EXPECT_EQ(one->attempts, 1u);
}

TEST(Confidence, Examples) {
  ConfConfig cfg;
  EXPECT_DOUBLE_EQ(confidence(bits({1, 1, 1, 1, 1}), cfg), 1.0);
  EXPECT_DOUBLE_EQ(confidence(bits({1, 0}), cfg), 0.0);
  EXPECT_DOUBLE_EQ(confidence(bits({1}), cfg), 0.2);
}

class DwaProperties : public ::testing::TestWithParam<int> {};

TEST_P(DwaProperties, ConstantSequenceFixedPointAndLimits) {
  std::mt19937_64 gen(static_cast<std::uint64_t>(GetParam()));
  std::uniform_int_distribution<int> len(1, 40);
  std::uniform_int_distribution<int> bit(0, 1);
  std::uniform_real_distribution<double> beta(0.01, 0.99);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = len(gen);
    const auto c = static_cast<std::uint8_t>(bit(gen));
    std::vector<std::uint8_t> constant(static_cast<std::size_t>(n), c);
    EXPECT_EQ(dwa(constant, beta(gen)), static_cast<double>(c));

    std::vector<std::uint8_t> r;
    for (int i = 0; i < n; ++i) r.push_back(static_cast<std::uint8_t>(bit(gen)));
    EXPECT_LT(std::abs(dwa(r, 0.001) - r.back()), 0.01);
    double mean = 0;
    for (auto x : r) mean += x;
    mean /= n;
    EXPECT_NEAR(dwa(r, 1.0 - 1e-9), mean, 1e-6);

    const auto p = perf_of(r, {});
    const double correct = p->acc * static_cast<double>(p->attempts);
    EXPECT_DOUBLE_EQ(correct, std::round(correct));
    EXPECT_EQ(static_cast<std::size_t>(std::round(correct)),
              static_cast<std::size_t>(std::count(r.begin(), r.end(), 1)));
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, DwaProperties, ::testing::Range(0, 4));

TEST(Confidence, MonotoneInLengthForConstantSequences) {
  for (std::uint8_t c : {0, 1}) {
    double prev = -1.0;
    for (std::size_t n = 1; n <= 30; ++n) {
      const std::vector<std::uint8_t> r(n, c);
      const double v = confidence(r, {});
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

TEST(Repository, ConservesAttemptsPerDimensionKind) {
  std::mt19937_64 gen(11);
  InteractionRepository repo;
  std::vector<Dimension> concepts, levels;
  for (int i = 0; i < 4; ++i) concepts.push_back({DimensionKind::Concept, "k" + std::to_string(i)});
  for (auto l : kAllLevels) levels.push_back({DimensionKind::Difficulty, std::string(to_string(l))});
  for (const auto& d : concepts) repo.register_dimension(d);
  for (const auto& d : levels) repo.register_dimension(d);

  std::size_t total = 0;
  for (int s = 0; s < 6; ++s) {
    const int n = static_cast<int>(gen() % 20);
    for (int i = 0; i < n; ++i) {
      const Dimension dims[] = {concepts[gen() % 4], levels[gen() % 3]};
      repo.record(ev("a", "s" + std::to_string(s), "q", "k", gen() % 2, i), dims);
      ++total;
    }
  }
  std::size_t by_concept = 0, by_level = 0;
  for (int s = 0; s < 6; ++s) {
    const auto student = "s" + std::to_string(s);
    for (const auto& d : concepts) {
      if (auto p = repo.perf(student, d, {})) by_concept += p->attempts;
    }
    for (const auto& d : levels) {
      if (auto p = repo.perf(student, d, {})) by_level += p->attempts;
    }
  }
  EXPECT_EQ(by_concept, total);
  EXPECT_EQ(by_level, total);
  EXPECT_EQ(repo.interaction_count(), total);
}

TEST(Repository, PerfRespectsAsOf) {
  auto repo = repo_with({kFractions});
  const Dimension dims[] = {kFractions};
  repo.record(ev("a", "s", "q1", "fractions", true, 0), dims);
  repo.record(ev("a", "s", "q2", "fractions", false, 5), dims);
  EXPECT_FALSE(repo.perf("s", kFractions, {}, 0));
  EXPECT_EQ(repo.perf("s", kFractions, {}, 5)->attempts, 1u);
  EXPECT_EQ(repo.perf("s", kFractions, {}, 6)->attempts, 2u);
  EXPECT_EQ(repo.students_on(kFractions, 0).size(), 0u);
  EXPECT_EQ(repo.students_on(kFractions, 1).size(), 1u);
}

TEST(Dimension, StringRoundTrip) {
  for (const auto& text : {"K:fraction addition", "D:Low", "QG:ratio|High", "A:Medium"}) {
    EXPECT_EQ(Dimension::parse(text).str(), text);
  }
}
