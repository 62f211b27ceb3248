#include "thir/retrieval.hpp"

#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace thir {
namespace {

using Ids = std::vector<std::pair<std::uint32_t, double>>;

Ids ids_of(const std::vector<RankedResult>& results) {
  Ids out;
  for (const auto& r : results) out.emplace_back(r.entry_id, r.distance);
  return out;
}

TopoDescriptor vec(std::initializer_list<float> values) {
  TopoDescriptor v(static_cast<Eigen::Index>(values.size()));
  std::copy(values.begin(), values.end(), v.data());
  return v;
}

TEST(Euclidean, HandValues) {
  EXPECT_EQ(euclidean(vec({1, 2, 2}), vec({0, 0, 0})), 3.0);
  EXPECT_EQ(euclidean(vec({3, 4}), vec({0, 0})), 5.0);
  EXPECT_EQ(euclidean(vec({7, 7, 7}), vec({7, 7, 7})), 0.0);
  EXPECT_THROW(euclidean(vec({1, 2}), vec({1, 2, 3})), Error);
}

// Kahan-compensated reference in long double.
double compensated(const TopoDescriptor& a, const TopoDescriptor& b) {
  long double sum = 0, carry = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const long double d = static_cast<long double>(a(i)) - b(i);
    const long double y = d * d - carry;
    const long double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return static_cast<double>(std::sqrt(sum));
}

TEST(Euclidean, MetricPropertiesOnRandomVectors) {
  std::mt19937 rng(12);
  std::uniform_int_distribution<int> count(0, 400);
  std::uniform_real_distribution<float> real(-1000.0f, 1000.0f);
  for (int trial = 0; trial < 200; ++trial) {
    TopoDescriptor a(600), b(600), c(600);
    for (int i = 0; i < 600; ++i) {
      const bool integral = trial % 2 == 0;
      a(i) = integral ? static_cast<float>(count(rng)) : real(rng);
      b(i) = integral ? static_cast<float>(count(rng)) : real(rng);
      c(i) = integral ? static_cast<float>(count(rng)) : real(rng);
    }
    const double ab = euclidean(a, b);
    EXPECT_NEAR(ab, compensated(a, b), 1e-9 * std::max(1.0, ab));
    EXPECT_EQ(ab, euclidean(b, a));
    EXPECT_EQ(euclidean(a, a), 0.0);
    EXPECT_LE(euclidean(a, c), ab + euclidean(b, c) + 1e-9);
  }
}

class TopK : public ::testing::Test {
 protected:
  // Distances from the origin: id0 = 0, id1 = 5, id2 = 1.
  Index ix = testing::make_index({{0, 0, 0}, {3, 4, 0}, {1, 0, 0}}, 1);
};

TEST_F(TopK, HandExample) {
  EXPECT_EQ(ids_of(top_k(ix, vec({0, 0, 0}), {2})), (Ids{{0, 0.0}, {2, 1.0}}));
  EXPECT_EQ(ids_of(top_k(ix, vec({0, 0, 0}), {2, {0}})), (Ids{{2, 1.0}, {1, 5.0}}));
}

TEST_F(TopK, CarriesRecordMetadata) {
  ix.records[2].label = Label::Malignant;
  ix.records[2].magnification = Magnification::X200;
  const auto r = top_k(ix, vec({1, 0, 0}), {1});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].entry_id, 2u);
  EXPECT_EQ(r[0].label, Label::Malignant);
  EXPECT_EQ(r[0].magnification, Magnification::X200);
  EXPECT_EQ(r[0].path, ix.records[2].path);
}

TEST_F(TopK, KLargerThanIndexReturnsEverything) {
  EXPECT_EQ(top_k(ix, vec({0, 0, 0}), {10}).size(), 3u);
  EXPECT_EQ(top_k(ix, vec({0, 0, 0}), {10, {0, 1, 2}}).size(), 0u);
}

TEST_F(TopK, TiesBreakOnLowerId) {
  const Index tied = testing::make_index({{2, 0, 0}, {0, 2, 0}, {1, 0, 0}, {0, 0, 2}}, 1);
  EXPECT_EQ(ids_of(top_k(tied, vec({0, 0, 0}), {4})), (Ids{{2, 1.0}, {0, 2.0}, {1, 2.0}, {3, 2.0}}));
}

TEST_F(TopK, RejectsBadInputs) {
  const auto expect_kind = [](auto&& fn, ErrorKind kind) {
    try {
      fn();
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), kind);
    }
  };
  expect_kind([&] { top_k(ix, vec({0, 0, 0}), {0}); }, ErrorKind::InvalidArgument);
  expect_kind([&] { top_k(ix, vec({0, 0}), {1}); }, ErrorKind::DimensionMismatch);
  expect_kind([&] { top_k(Index{}, vec({0, 0, 0}), {1}); }, ErrorKind::EmptyIndex);
}

TEST_F(TopK, NormalizedCompareDirections) {
  const Index scaled = testing::make_index({{10, 0, 0}, {0, 1, 0}}, 1);
  EXPECT_EQ(top_k(scaled, vec({0, 2, 0}), {1})[0].entry_id, 1u);
  auto r = top_k(scaled, vec({1, 0, 0}), {2, {}, true});
  EXPECT_EQ(r[0].entry_id, 0u);
  EXPECT_EQ(r[0].distance, 0.0);
  EXPECT_NEAR(r[1].distance, std::sqrt(2.0), 1e-12);
}

TEST(TopKDifferential, MatchesFullSortOnRandomIndices) {
  std::mt19937 rng(77);
  std::uniform_int_distribution<int> small(0, 3);  // few values, many ties
  std::uniform_int_distribution<int> size(1, 60);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = size(rng);
    const int r = 1 + trial % 4;
    std::vector<std::vector<float>> rows(n, std::vector<float>(3 * r));
    for (auto& row : rows)
      for (auto& v : row) v = static_cast<float>(small(rng));
    const Index ix = testing::make_index(rows, r);
    TopoDescriptor q(3 * r);
    for (auto& v : q) v = static_cast<float>(small(rng));
    QuerySpec spec{1 + trial % 9};
    for (int i = 0; i < n; i += 7) spec.exclude_ids.insert(static_cast<std::uint32_t>(i));

    Ids expected;
    for (int i = 0; i < n; ++i) {
      if (spec.exclude_ids.contains(static_cast<std::uint32_t>(i))) continue;
      expected.emplace_back(i, euclidean(ix.descriptors.row(i).transpose(), q));
    }
    std::sort(expected.begin(), expected.end(),
              [](const auto& a, const auto& b) { return a.second < b.second || (a.second == b.second && a.first < b.first); });
    expected.resize(std::min<std::size_t>(expected.size(), static_cast<std::size_t>(spec.k)));

    const auto got = top_k(ix, q, spec);
    ASSERT_EQ(ids_of(got), expected) << "trial " << trial;
    ASSERT_EQ(got, top_k(ix, q, spec));
  }
}

}  // namespace
}  // namespace thir
