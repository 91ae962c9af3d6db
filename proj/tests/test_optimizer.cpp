#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"
#include "vrbb/optimizer.hpp"
#include "vrbb/reference.hpp"

using namespace vrbb;
using vrbb::test::NaiveLoss;
using vrbb::test::random_instance;
using vrbb::test::random_vector;

namespace {

StepSizeSchedule default_schedule(Method m, const LossModel& model) {
  if (m == Method::svrgbb) return EpochBBStep{0.1};
  if (is_bbs(m)) {
    double eta0 = 1.0 / model.smoothness();
    Preset p = m == Method::svrg2bbs_m1 ? Preset::M1 : m == Method::svrg2bbs_m2 ? Preset::M2 : Preset::M3;
    return preset(p, model.n(), 0.1, eta0 * model.lambda(), eta0);
  }
  return ConstantStep{0.1};
}

}  // namespace

TEST(Direction, AnchorCoincidenceGivesFullGradient) {
  auto ds = random_instance(50, 6, 1);
  LossModel model(ds, 0.01, LossKind::logistic);
  std::mt19937_64 rng(2);
  Vector anchor = random_vector(6, rng), prev = random_vector(6, rng);
  Vector g = model.grad_full(anchor);
  for (CorrectionKind k : {CorrectionKind::none, CorrectionKind::full_hessian,
                           CorrectionKind::diag_hessian, CorrectionKind::bb_scalar}) {
    auto op = CorrectionOperator::build(k, model, anchor, &prev, 1e-8);
    for (std::size_t i = 0; i < 50; ++i)
      EXPECT_EQ(direction(model, op, anchor, anchor, g, i), g) << to_string(k);
  }
}

TEST(Direction, SvrgMatchesIndependentOracle) {
  auto ds = random_instance(40, 7, 3);
  LossModel model(ds, 0.02, LossKind::squared_hinge);
  NaiveLoss ref(ds, 0.02, LossKind::squared_hinge);
  std::mt19937_64 rng(4);
  auto none = CorrectionOperator{};
  for (int trial = 0; trial < 20; ++trial) {
    Vector w = random_vector(7, rng), anchor = random_vector(7, rng);
    Vector g = model.grad_full(anchor);
    for (std::size_t i = 0; i < 40; i += 3) {
      Vector oracle = ref.grad(i, w) - ref.grad(i, anchor) + ref.grad_full(anchor);
      EXPECT_LT((direction(model, none, w, anchor, g, i) - oracle).norm(),
                1e-14 * std::max(1.0, oracle.norm()));
    }
  }
}

TEST(Direction, UnbiasedForEveryVariant) {
  std::mt19937_64 rng(5);
  for (auto loss : {LossKind::logistic, LossKind::squared_hinge}) {
    auto ds = random_instance(120, 8, 6);
    LossModel model(ds, 0.01, loss);
    for (int trial = 0; trial < 10; ++trial) {
      Vector w = random_vector(8, rng), anchor = random_vector(8, rng), prev = random_vector(8, rng);
      Vector g = model.grad_full(anchor), target = model.grad_full(w);
      for (CorrectionKind k : {CorrectionKind::none, CorrectionKind::full_hessian,
                               CorrectionKind::diag_hessian, CorrectionKind::bb_scalar}) {
        auto op = CorrectionOperator::build(k, model, anchor, &prev, 1e-8);
        Vector mean = Vector::Zero(8);
        for (std::size_t i = 0; i < model.n(); ++i) mean += direction(model, op, w, anchor, g, i);
        mean /= static_cast<double>(model.n());
        EXPECT_LT((mean - target).norm(), 1e-10) << to_string(k);
      }
    }
  }
}

TEST(Optimize, ZeroEpochs) {
  auto ds = random_instance(10, 3, 7);
  LossModel model(ds, 0.1, LossKind::logistic);
  RunConfig cfg;
  cfg.epochs = 0;
  Vector w0 = Vector::Constant(3, 0.25);
  auto res = optimize(model, cfg, w0);
  EXPECT_EQ(res.w, w0);
  EXPECT_TRUE(res.records.empty());
}

TEST(Optimize, DeterministicBySeed) {
  auto ds = synth_binary(50, 5, 8);
  LossModel model(ds, 1e-2, LossKind::logistic);
  RunConfig cfg;
  cfg.method = Method::svrg2bb;
  cfg.schedule = ConstantStep{0.05};
  cfg.epochs = 6;
  auto a = optimize(model, cfg, Vector::Zero(5));
  auto b = optimize(model, cfg, Vector::Zero(5));
  ASSERT_EQ(a.records.size(), b.records.size());
  EXPECT_EQ(a.w, b.w);
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    auto ra = a.records[k], rb = b.records[k];
    ra.wall_time_sec = rb.wall_time_sec = 0;
    EXPECT_TRUE(identical(ra, rb));
  }
  cfg.seed = 2;
  EXPECT_NE(optimize(model, cfg, Vector::Zero(5)).w, a.w);
}

TEST(Optimize, FirstStepIsScaledFullGradient) {
  auto ds = random_instance(30, 4, 9);
  LossModel model(ds, 0.05, LossKind::logistic);
  for (Method m : all_methods) {
    RunConfig cfg;
    cfg.method = m;
    cfg.schedule = default_schedule(m, model);
    cfg.epochs = 3;
    cfg.m = 1;  // one inner step: w̃_{k+1} = w̃_k - η g̃
    cfg.record_variance = false;
    std::vector<Vector> expect;
    double eta = 0;
    cfg.step_observer = [&](std::size_t, std::size_t, double e) { eta = e; };
    cfg.observer = [&](const EpochView& v) {
      expect.push_back(v.anchor - eta * v.grad_anchor);
      EXPECT_LT((v.next_anchor - expect.back()).norm(), 1e-15) << to_string(m);
    };
    optimize(model, cfg, Vector::Constant(4, 0.1));
    EXPECT_EQ(expect.size(), 3u);
  }
}

TEST(Optimize, GradientEvaluationAccounting) {
  auto ds = random_instance(25, 4, 10);
  LossModel model(ds, 0.05, LossKind::logistic);
  const std::uint64_t n = 25, m = 2 * n;
  for (Method method : all_methods) {
    RunConfig cfg;
    cfg.method = method;
    cfg.schedule = default_schedule(method, model);
    cfg.epochs = 4;
    cfg.record_variance = false;
    auto res = optimize(model, cfg, Vector::Zero(4));
    ASSERT_EQ(res.records.size(), 4u);
    bool bb = correction_for(method) == CorrectionKind::bb_scalar;
    for (std::uint64_t k = 1; k <= 4; ++k) {
      // epoch 1 of the BB correction runs without history
      std::uint64_t bb_epochs = bb ? k - 1 : 0;
      EXPECT_EQ(res.records[k - 1].grad_evals, k * (n + 2 * m) + bb_epochs * 2 * m)
          << to_string(method);
    }
    if (method == Method::svrg2) {
      EXPECT_EQ(res.hess_vec_products, 4 * (m + n));
    }
  }
}

TEST(Optimize, DivergenceIsReported) {
  auto ds = random_instance(30, 4, 11, 0.8, 3.0);
  LossModel model(ds, 1e-3, LossKind::squared_hinge);
  RunConfig cfg;
  cfg.schedule = ConstantStep{50.0};
  cfg.epochs = 5;
  auto res = optimize(model, cfg, Vector::Zero(4));
  EXPECT_TRUE(res.diverged);
  EXPECT_NE(res.diagnostic.find("epoch"), std::string::npos);
  EXPECT_LT(res.records.size(), 5u);
}

TEST(Optimize, RejectsMismatchedSchedule) {
  auto ds = random_instance(10, 3, 12);
  LossModel model(ds, 0.1, LossKind::logistic);
  RunConfig cfg;
  cfg.method = Method::svrg2bbs_m1;
  cfg.schedule = ConstantStep{0.1};
  EXPECT_THROW(optimize(model, cfg, Vector::Zero(3)), config_error);
  cfg.method = Method::svrg;
  EXPECT_THROW(optimize(model, cfg, Vector::Zero(4)), dimension_error);
}

TEST(Optimize, RandomIterateOptionConverges) {
  auto ds = synth_binary(200, 8, 13);
  LossModel model(ds, 1e-2, LossKind::logistic);
  auto ref = solve_reference(model, 1e-12);
  for (Method m : {Method::svrg, Method::svrg2bb}) {
    RunConfig cfg;
    cfg.method = m;
    cfg.schedule = ConstantStep{0.1};
    cfg.epochs = 25;
    cfg.anchor_option = AnchorOption::random_iterate;
    auto res = optimize(model, cfg, Vector::Zero(8), ref.f_star);
    ASSERT_FALSE(res.diverged);
    EXPECT_LT(res.records.back().gap, 1e-8) << to_string(m);
  }
}

TEST(Optimize, GapAndVarianceRecords) {
  auto ds = synth_binary(100, 5, 14);
  LossModel model(ds, 1e-2, LossKind::logistic);
  auto ref = solve_reference(model, 1e-12);
  RunConfig cfg;
  cfg.method = Method::svrg2d;
  cfg.schedule = ConstantStep{0.1};
  cfg.epochs = 5;
  auto res = optimize(model, cfg, Vector::Zero(5), ref.f_star);
  for (const auto& r : res.records) {
    EXPECT_EQ(r.gap, r.fval - ref.f_star);
    EXPECT_GE(r.gap, -1e-12);
    EXPECT_GE(r.variance, 0.0);
    EXPECT_EQ(r.step_size, 0.1);
  }
  EXPECT_EQ(res.variance_sample_count, 100u);

  cfg.variance_point = VariancePoint::epoch_start;
  auto start = optimize(model, cfg, Vector::Zero(5), ref.f_star);
  for (const auto& r : start.records) EXPECT_LT(r.variance, 1e-28);

  cfg.enumeration_cap = 10;
  cfg.variance_samples = 64;
  cfg.variance_point = VariancePoint::last_iterate;
  auto sampled = optimize(model, cfg, Vector::Zero(5), ref.f_star);
  EXPECT_EQ(sampled.variance_sample_count, 64u);
}

TEST(Optimize, VarianceMeasurementMatchesEnumeration) {
  auto ds = random_instance(60, 5, 15);
  LossModel model(ds, 0.02, LossKind::logistic);
  std::mt19937_64 rng(16);
  Vector w = random_vector(5, rng), anchor = random_vector(5, rng);
  Vector g = model.grad_full(anchor), gw = model.grad_full(w);
  CorrectionOperator none;
  double s = 0;
  for (std::size_t i = 0; i < 60; ++i) {
    Vector v = model.grad_sample(i, w) - model.grad_sample(i, anchor) + g;
    s += (v - gw).squaredNorm();
  }
  auto vm = measure_variance(model, none, w, anchor, g);
  EXPECT_TRUE(vm.exact);
  EXPECT_NEAR(vm.value, s / 60, 1e-12 * s);
}

TEST(Optimize, LinearConvergenceOnDeskInstance) {
  auto ds = synth_binary(300, 10, 17);
  LossModel model(ds, 1e-2, LossKind::logistic);
  auto ref = solve_reference(model, 1e-12);
  for (Method m : {Method::svrg, Method::svrg2, Method::svrg2d, Method::svrg2bb}) {
    RunConfig cfg;
    cfg.method = m;
    cfg.schedule = ConstantStep{0.1};
    cfg.epochs = 12;
    cfg.record_variance = false;
    auto res = optimize(model, cfg, Vector::Zero(10), ref.f_star);
    ASSERT_FALSE(res.diverged);
    // gap shrinks by a constant factor per epoch until the floor
    double first = res.records.front().gap;
    EXPECT_LT(res.records.back().gap, std::max(first * 1e-6, 1e-13)) << to_string(m);
  }
}
