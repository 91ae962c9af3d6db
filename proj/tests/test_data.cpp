#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "vrbb/data.hpp"
#include "vrbb/losses.hpp"
#include "vrbb/reference.hpp"

using namespace vrbb;

namespace {

SparseDataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::uniform_int_distribution<int> expo(-30, 30);
  std::bernoulli_distribution keep(0.3), pos(0.5);
  SparseDataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    SparseVector a(d);
    for (std::uint32_t j = 0; j < d; ++j)
      if (keep(rng)) a.push_back(j, std::ldexp(u(rng), expo(rng)));
    ds.push_back(std::move(a), pos(rng) ? 1.0 : -1.0);
  }
  return ds;
}

}  // namespace

TEST(Libsvm, ParsesSingleLine) {
  auto ds = parse_libsvm(std::string("+1 1:0.5 3:-2.0"));
  ASSERT_EQ(ds.n(), 1u);
  EXPECT_EQ(ds.d(), 3u);
  EXPECT_EQ(ds.label(0), 1.0);
  const auto& a = ds.sample(0);
  ASSERT_EQ(a.nnz(), 2u);
  EXPECT_EQ(a.indices()[0], 0u);
  EXPECT_EQ(a.values()[0], 0.5);
  EXPECT_EQ(a.indices()[1], 2u);
  EXPECT_EQ(a.values()[1], -2.0);
}

TEST(Libsvm, LabelOnlyLineIsEmptyRow) {
  auto ds = parse_libsvm(std::string("-1"));
  ASSERT_EQ(ds.n(), 1u);
  EXPECT_EQ(ds.label(0), -1.0);
  EXPECT_EQ(ds.sample(0).nnz(), 0u);
  EXPECT_EQ(ds.d(), 0u);
}

TEST(Libsvm, WritesCanonicalText) {
  auto ds = parse_libsvm(std::string("+1 1:0.5 3:-2.0"));
  EXPECT_EQ(write_libsvm(ds), "+1 1:0.5 3:-2\n");
  EXPECT_EQ(write_libsvm(SparseDataset{}), "");
}

TEST(Libsvm, RoundTripIsBitwise) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto ds = random_dataset(100, 40, seed);
    ds.set_dim(40);
    auto back = parse_libsvm(write_libsvm(ds), LabelRule::plus_minus_one(), 40);
    ASSERT_TRUE(back == ds) << "seed " << seed;
    for (std::size_t i = 0; i < ds.n(); ++i)
      for (std::size_t k = 0; k < ds.sample(i).nnz(); ++k)
        ASSERT_EQ(std::bit_cast<std::uint64_t>(ds.sample(i).values()[k]),
                  std::bit_cast<std::uint64_t>(back.sample(i).values()[k]));
  }
}

TEST(Libsvm, PreservesOrderAndSkipsComments) {
  auto ds = parse_libsvm(std::string("# header\n1 2:1\n\n-1 1:3 # trailing\n+1 5:2\n"));
  ASSERT_EQ(ds.n(), 3u);
  EXPECT_EQ(ds.label(0), 1.0);
  EXPECT_EQ(ds.label(1), -1.0);
  EXPECT_EQ(ds.sample(1).values()[0], 3.0);
  EXPECT_EQ(ds.d(), 5u);
}

TEST(Libsvm, RejectsMalformedLinesWithLineNumber) {
  try {
    parse_libsvm(std::string("1 1:0.5\n1 3:1 2:1\n"));
    FAIL() << "expected parse_error";
  } catch (const parse_error& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_libsvm(std::string("1 1:abc")), parse_error);
  EXPECT_THROW(parse_libsvm(std::string("1 0:1")), parse_error);
  EXPECT_THROW(parse_libsvm(std::string("1 2:1 2:3")), parse_error);
  EXPECT_THROW(parse_libsvm(std::string("x 1:1")), parse_error);
  EXPECT_THROW(parse_libsvm(std::string("1 1:1 4:2"), LabelRule::plus_minus_one(), 3),
               dimension_error);
}

TEST(Libsvm, LabelRules) {
  EXPECT_THROW(parse_libsvm(std::string("2 1:1")), label_error);
  auto mnist = parse_libsvm(std::string("3 1:1\n8 1:2\n5 1:3\n"),
                            LabelRule::from_string("map:3=-1,8=1;drop"));
  ASSERT_EQ(mnist.n(), 2u);
  EXPECT_EQ(mnist.label(0), -1.0);
  EXPECT_EQ(mnist.label(1), 1.0);
  EXPECT_THROW(parse_libsvm(std::string("5 1:3"), LabelRule::from_string("map:3=-1,8=1")),
               label_error);
  auto s = parse_libsvm(std::string("0.3 1:1\n-2 1:1\n"), LabelRule::sign());
  EXPECT_EQ(s.label(0), 1.0);
  EXPECT_EQ(s.label(1), -1.0);
  auto r = parse_libsvm(std::string("7 1:1"), LabelRule::raw());
  EXPECT_EQ(r.label(0), 7.0);
}

TEST(Dataset, DimensionNeverDecreases) {
  SparseDataset ds;
  ds.push_back(SparseVector(7), 1.0);
  ds.push_back(SparseVector(3), -1.0);
  EXPECT_EQ(ds.d(), 7u);
}

TEST(Synth, DeterministicBySeed) {
  auto a = synth_binary(10, 3, 7);
  auto b = synth_binary(10, 3, 7);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == synth_binary(10, 3, 8));
  EXPECT_TRUE(a.all_labels_pm1());
}

TEST(Synth, SeparableDataIsFitByTheReference) {
  auto ds = synth_binary(500, 10, 3, 1.0);
  LossModel model(ds, 1e-4, LossKind::logistic);
  auto ref = solve_reference(model, 1e-8);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.n(); ++i)
    if (ds.sample(i).dot(ref.w_star) * ds.label(i) > 0) ++correct;
  EXPECT_GE(static_cast<double>(correct) / ds.n(), 0.95);
}

TEST(Data, ScaleMaxAbs) {
  auto ds = parse_libsvm(std::string("1 1:2 2:-8\n-1 1:-4 2:2\n"));
  auto s = scale_max_abs(ds);
  EXPECT_EQ(s.sample(0).values()[0], 0.5);
  EXPECT_EQ(s.sample(0).values()[1], -1.0);
  EXPECT_EQ(s.sample(1).values()[0], -1.0);
  EXPECT_EQ(s.sample(1).values()[1], 0.25);
}

TEST(Data, HashSeparatesDatasets) {
  auto a = synth_binary(20, 4, 1);
  EXPECT_EQ(dataset_hash(a), dataset_hash(synth_binary(20, 4, 1)));
  EXPECT_NE(dataset_hash(a), dataset_hash(synth_binary(20, 4, 2)));
}
