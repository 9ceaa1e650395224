#include <gtest/gtest.h>

#include <random>

#include "crof/error.hpp"
#include "crof/trainer.hpp"

namespace crof {
namespace {

SyntheticData small_fixture() { return generate_synthetic(6, 12, 5, 10, 0.4, 21); }

TrainConfig quick_config(std::size_t epochs = 5) {
  TrainConfig cfg;
  cfg.adapter.epochs = epochs;
  cfg.toggles = Toggles::parse("ft+wt");
  return cfg;
}

TEST(Toggles, LabelsRoundTrip) {
  for (const char* text : {"none", "ft", "ft+wt", "tpg+ft+wt", "tpg", "wt"}) {
    EXPECT_EQ(Toggles::parse(text).label(), text);
  }
  EXPECT_EQ(Toggles::parse("zs"), Toggles::parse("none"));
  EXPECT_THROW(Toggles::parse("ft+bogus"), Error);
}

TEST(Evaluate, ZeroSigmaIsPerfect) {
  const auto s = generate_synthetic(8, 6, 2, 5, 0.0, 3);
  EXPECT_EQ(evaluate(s.dataset.test_images(), s.dataset.test_clean(), s.prototypes, 0.01), 100.0);
}

TEST(Evaluate, PermutedLabelsAreNearChance) {
  const auto s = generate_synthetic(20, 16, 1, 200, 0.3, 3);
  auto labels = s.dataset.test_clean();
  std::mt19937_64 rng(1);
  std::shuffle(labels.begin(), labels.end(), rng);
  const double acc = evaluate(s.dataset.test_images(), labels, s.prototypes, 0.01);
  EXPECT_NEAR(acc, 5.0, 2.0);
}

TEST(Evaluate, IdentityAdapterMatchesPlain) {
  const auto s = small_fixture();
  AdapterConfig cfg;
  cfg.lambda = 0.0;
  const auto p = init_params(12, cfg);
  const auto imgs = s.dataset.test_images();
  const auto labels = s.dataset.test_clean();
  EXPECT_EQ(evaluate(imgs, labels, s.prototypes, p, 0.01),
            evaluate(imgs, labels, s.prototypes, 0.01));
}

TEST(Train, ZeroEpochsRecordsOnlyInitialEvaluation) {
  const auto s = small_fixture();
  auto cfg = quick_config(0);
  const auto r = train(s.dataset, std::nullopt, s.prototypes, cfg);
  for (const auto& row : r.metrics.rows) EXPECT_EQ(row.epoch, 0u);
  EXPECT_EQ(r.params.step_count, 0u);
  AdapterConfig init_cfg = cfg.adapter;
  init_cfg.seed = cfg.seed;
  EXPECT_EQ(r.params.w1, init_params(12, init_cfg).w1);
}

TEST(Train, RecordsTrainAndTestRowsPerEpoch) {
  const auto s = small_fixture();
  const auto r = train(s.dataset, std::nullopt, s.prototypes, quick_config(3));
  ASSERT_EQ(r.metrics.rows.size(), 8u);
  EXPECT_EQ(r.metrics.rows.back().epoch, 3u);
  EXPECT_EQ(r.metrics.rows.back().split, "test");
  for (const auto& row : r.metrics.rows) {
    EXPECT_GE(row.accuracy, 0.0);
    EXPECT_LE(row.accuracy, 100.0);
  }
  EXPECT_EQ(r.metrics.to_csv().rfind("epoch,split,accuracy,loss\n0,train,", 0), 0u);
  EXPECT_GE(r.metrics.best_test_accuracy(), r.metrics.final_test_accuracy());
}

TEST(Train, FineTuningOffIsZeroShot) {
  const auto s = small_fixture();
  auto cfg = quick_config(5);
  cfg.toggles = Toggles::parse("none");
  const auto r = train(s.dataset, std::nullopt, s.prototypes, cfg);
  EXPECT_EQ(r.metrics.final_test_accuracy(),
            evaluate(s.dataset.test_images(), s.dataset.test_clean(), s.prototypes,
                     cfg.adapter.tau));
  for (const auto& row : r.metrics.rows) EXPECT_EQ(row.epoch, 0u);
}

TEST(Train, EveryObservedWeightVectorIsOnTheSimplex) {
  const auto s = small_fixture();
  const auto noisy = inject_noise(s.dataset, {NoiseKind::kSymmetric, 0.4, 2});
  std::size_t seen = 0;
  auto cfg = quick_config(4);
  cfg.check_weights = false;
  train(noisy, std::nullopt, s.prototypes, cfg, [&](const WeightVector& wv) {
    ++seen;
    EXPECT_NO_THROW(check_simplex(wv));
  });
  EXPECT_EQ(seen, 4u * noisy.train_rows());
}

TEST(Train, DeterministicForFixedSeed) {
  const auto s = small_fixture();
  const auto noisy = inject_noise(s.dataset, {NoiseKind::kSymmetric, 0.4, 2});
  auto cfg = quick_config(4);
  cfg.adapter.batch_size = 7;
  const auto a = train(noisy, std::nullopt, s.prototypes, cfg);
  const auto b = train(noisy, std::nullopt, s.prototypes, cfg);
  EXPECT_EQ(a.metrics.to_csv(), b.metrics.to_csv());
  EXPECT_EQ(a.params.w1, b.params.w1);
  cfg.seed = 1;
  EXPECT_NE(train(noisy, std::nullopt, s.prototypes, cfg).params.w1, a.params.w1);
}

TEST(Train, FusedTextRequiredForPromptToggle) {
  const auto s = small_fixture();
  auto cfg = quick_config(1);
  cfg.toggles = Toggles::parse("tpg+ft+wt");
  try {
    train(s.dataset, std::nullopt, s.prototypes, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
  EXPECT_NO_THROW(train(s.dataset, s.prototypes, s.prototypes, cfg));
}

TEST(Train, ConfigErrorsBeforeAnyStep) {
  const auto s = small_fixture();
  auto cfg = quick_config(1);
  cfg.top_k = 0;
  EXPECT_THROW(train(s.dataset, std::nullopt, s.prototypes, cfg), Error);
  cfg = quick_config(1);
  cfg.weighting.alpha = 1.0;
  EXPECT_THROW(train(s.dataset, std::nullopt, s.prototypes, cfg), Error);
  const auto wrong_dims = generate_synthetic(6, 8, 1, 1, 0.1, 1).prototypes;
  EXPECT_THROW(train(s.dataset, std::nullopt, wrong_dims, quick_config(1)), Error);
}

TEST(Sweep, ShapeRangeAndOrder) {
  const auto s = small_fixture();
  const std::vector<double> deltas{0.0, 0.2, 0.4, 0.6, 0.8};
  const std::vector<std::uint64_t> seeds{1, 2};
  const std::vector<Toggles> toggles{Toggles::parse("none"), Toggles::parse("ft+wt")};
  const auto rows = sweep(s.dataset, std::nullopt, s.prototypes, quick_config(2), deltas, seeds,
                          toggles, 3);
  ASSERT_EQ(rows.size(), 5u * 2u * 2u);
  for (const auto& r : rows) {
    EXPECT_GE(r.final_acc, 0.0);
    EXPECT_LE(r.best_acc, 100.0);
  }
  EXPECT_EQ(rows[0].delta, 0.0);
  EXPECT_EQ(rows[0].toggles, "none");
  EXPECT_EQ(rows[1].seed, 2u);
  EXPECT_EQ(rows[2].toggles, "ft+wt");
  EXPECT_EQ(sweep_to_csv(rows).rfind("delta,toggles,seed,final_acc,best_acc\n0,none,1,", 0), 0u);

  const auto serial = sweep(s.dataset, std::nullopt, s.prototypes, quick_config(2), deltas, seeds,
                            toggles, 1);
  EXPECT_EQ(rows, serial);
}

TEST(Sweep, ZeroShotRowMatchesEvaluate) {
  const auto s = small_fixture();
  const std::vector<double> deltas{0.0};
  const std::vector<std::uint64_t> seeds{4};
  const std::vector<Toggles> toggles{Toggles::parse("none")};
  const auto rows =
      sweep(s.dataset, std::nullopt, s.prototypes, quick_config(2), deltas, seeds, toggles);
  EXPECT_EQ(rows[0].final_acc, evaluate(s.dataset.test_images(), s.dataset.test_clean(),
                                        s.prototypes, 0.01));
}

}  // namespace
}  // namespace crof
