// Copyright 2026 The WiC Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "wic/optim.h"
#include "wic/preprocess.h"
#include "wic/trainer.h"

namespace wic {
namespace {

using nn::Matrix;

Matrix Mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

TEST(GcCentralizeTest, SubtractsRowMeans) {
  Matrix g = Mat({{1, 3}, {2, 4}});
  GcCentralize(&g, 2);
  EXPECT_EQ(g, Mat({{-1, 1}, {-1, 1}}));
}

TEST(GcCentralizeTest, RankOneUntouched) {
  Matrix g = Mat({{5, 7}});
  GcCentralize(&g, 1);
  EXPECT_EQ(g, Mat({{5, 7}}));
}

TEST(GcCentralizeTest, ZeroIsFixedPoint) {
  Matrix g = Matrix::Zero(3, 4);
  GcCentralize(&g, 2);
  EXPECT_EQ(g, Matrix::Zero(3, 4));
}

TEST(GcCentralizeTest, HigherRankUsesLeadingAxis) {
  // Shape 2x2x2: slice means are 2.5 and 6.5.
  std::vector<double> data = {1, 2, 3, 4, 5, 6, 7, 8};
  const std::vector<std::size_t> shape = {2, 2, 2};
  GcCentralize(data, shape);
  EXPECT_EQ(data, (std::vector<double>{-1.5, -0.5, 0.5, 1.5, -1.5, -0.5, 0.5, 1.5}));
}

TEST(RadamStepTest, FirstStepTakesWarmupBranch) {
  RangerConfig cfg;
  cfg.lr = 0.1;
  Matrix w = Mat({{1.0}}), m = Matrix::Zero(1, 1), v = Matrix::Zero(1, 1);
  const bool rectified = RadamStep(&w, Mat({{1.0}}), &m, &v, 1, cfg);
  EXPECT_FALSE(rectified);
  EXPECT_EQ(w(0, 0), 0.9);
}

TEST(RadamStepTest, ZeroGradientFromZeroMomentsLeavesParameter) {
  RangerConfig cfg;
  for (std::int64_t t : {1, 5, 50}) {
    Matrix w = Mat({{2.5, -1}}), m = Matrix::Zero(1, 2), v = Matrix::Zero(1, 2);
    RadamStep(&w, Matrix::Zero(1, 2), &m, &v, t, cfg);
    EXPECT_EQ(w, Mat({{2.5, -1}}));
  }
}

TEST(RadamStepTest, DegenerateLimitIsSignStep) {
  // With no momentum and no epsilon, a steady gradient is normalized away
  // once the rectifier approaches 1.
  RangerConfig cfg;
  cfg.lr = 0.01;
  cfg.beta1 = 0.0;
  cfg.beta2 = 0.9;
  cfg.eps = 0.0;
  for (double g : {-3.0, 0.02, 7.0}) {
    Matrix w = Mat({{0.0}}), m = Matrix::Zero(1, 1), v = Mat({{g * g}});
    EXPECT_TRUE(RadamStep(&w, Mat({{g}}), &m, &v, 1000, cfg));
    EXPECT_NEAR(w(0, 0), -cfg.lr * g / std::abs(g), 1e-12);
  }
}

TEST(RadamStepTest, RectifiedBranchAfterWarmup) {
  RangerConfig cfg;
  Matrix w = Mat({{0.0}}), m = Matrix::Zero(1, 1), v = Matrix::Zero(1, 1);
  int first_rectified = 0;
  for (int t = 1; t <= 10 && first_rectified == 0; ++t) {
    if (RadamStep(&w, Mat({{1.0}}), &m, &v, t, cfg)) first_rectified = t;
  }
  // rho_t first exceeds 4 at t = 5 for beta2 = 0.999.
  EXPECT_EQ(first_rectified, 5);
}

TEST(LookaheadSyncTest, Interpolates) {
  RangerConfig cfg;
  Matrix fast = Mat({{2.0}}), slow = Mat({{0.0}});
  EXPECT_TRUE(LookaheadSync(&fast, &slow, cfg.k, cfg));
  EXPECT_EQ(slow(0, 0), 1.0);
  EXPECT_EQ(fast(0, 0), 1.0);
}

TEST(LookaheadSyncTest, AlphaOneCopies) {
  RangerConfig cfg;
  cfg.alpha = 1.0;
  Matrix fast = Mat({{2.0, -3.0}}), slow = Mat({{0.0, 5.0}});
  LookaheadSync(&fast, &slow, 2 * cfg.k, cfg);
  EXPECT_EQ(slow, Mat({{2.0, -3.0}}));
  EXPECT_EQ(fast, slow);
}

TEST(LookaheadSyncTest, OffCycleUnchanged) {
  RangerConfig cfg;
  Matrix fast = Mat({{2.0}}), slow = Mat({{0.0}});
  EXPECT_FALSE(LookaheadSync(&fast, &slow, cfg.k - 1, cfg));
  EXPECT_EQ(fast(0, 0), 2.0);
  EXPECT_EQ(slow(0, 0), 0.0);
}

TEST(RangerTest, FastEqualsSlowAfterEveryCycle) {
  nn::Parameter p("w", Mat({{0.5, -1.0}, {2.0, 0.0}}), 2);
  RangerConfig cfg;
  cfg.lr = 0.05;
  Ranger opt({&p}, cfg);
  std::mt19937 gen(1);
  std::normal_distribution<double> normal;
  for (int t = 1; t <= 4 * cfg.k; ++t) {
    for (Eigen::Index i = 0; i < p.grad.size(); ++i) p.grad.data()[i] = normal(gen);
    opt.Step();
    if (t % cfg.k == 0) EXPECT_EQ(p.value, opt.state().slow[0]);
  }
  EXPECT_EQ(opt.step_count(), 4 * cfg.k);
}

// At lr 0.1 the warmup rectifier and lookahead halving limit travel to
// about one unit in 200 steps, so the optimum starts within that reach.
TEST(RangerTest, ConvergesOnQuadratic) {
  const Matrix target = Mat({{0.5, -0.5}});
  nn::Parameter p("w", Matrix::Zero(1, 2), 1);
  RangerConfig cfg;
  cfg.lr = 0.1;
  Ranger opt({&p}, cfg);
  for (int t = 0; t < 200; ++t) {
    p.grad = p.value - target;
    opt.Step();
  }
  EXPECT_LT((p.value - target).norm(), 1e-3);
}

TEST(RangerTest, RefusesNonFiniteGradient) {
  nn::Parameter p("w", Mat({{1.0, 2.0}}), 1);
  Ranger opt({&p}, RangerConfig{});
  p.grad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(opt.Step(), NonFiniteGradient);
  EXPECT_EQ(p.value, Mat({{1.0, 2.0}}));
  EXPECT_EQ(opt.step_count(), 0);
}

TEST(RangerTest, StateBlobsRestoreTrajectory) {
  auto run = [](Ranger& opt, nn::Parameter& p, int steps) {
    for (int t = 0; t < steps; ++t) {
      p.grad = p.value.array() - 1.0;
      opt.Step();
    }
  };
  RangerConfig cfg;
  cfg.lr = 0.1;
  nn::Parameter a("w", Mat({{0.0, 4.0}}), 1);
  Ranger opt_a({&a}, cfg);
  run(opt_a, a, 7);
  nn::Parameter b("w", a.value, 1);
  Ranger opt_b({&b}, cfg);
  opt_b.LoadStateBlobs(opt_a.StateBlobs(), opt_a.step_count());
  run(opt_a, a, 9);
  run(opt_b, b, 9);
  EXPECT_EQ(a.value, b.value);
}

TEST(RangerConfigTest, RejectsInvalidValues) {
  RangerConfig c;
  c.alpha = 0.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = RangerConfig{};
  c.k = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = RangerConfig{};
  c.beta2 = 1.0;
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(FgmTest, UnitNormPerturbation) {
  Matrix table = Mat({{1.0, 1.0}});
  const FgmBackup backup = FgmAttack(&table, Mat({{3.0, 4.0}}), FgmConfig{});
  EXPECT_NEAR(table(0, 0), 1.6, 1e-15);
  EXPECT_NEAR(table(0, 1), 1.8, 1e-15);
  EXPECT_NEAR((table - backup.table).norm(), 1.0, 1e-12);
}

TEST(FgmTest, ZeroGradientIsNoOp) {
  Matrix table = Mat({{1.0, 2.0}});
  const FgmBackup backup = FgmAttack(&table, Matrix::Zero(1, 2), FgmConfig{});
  EXPECT_EQ(table, Mat({{1.0, 2.0}}));
  EXPECT_EQ(backup.table, table);
}

TEST(FgmTest, RestoreIsExactAndRepeatable) {
  std::mt19937 gen(4);
  std::normal_distribution<double> normal;
  Matrix table(5, 3), grad(5, 3);
  for (Eigen::Index i = 0; i < table.size(); ++i) {
    table.data()[i] = normal(gen);
    grad.data()[i] = normal(gen);
  }
  const Matrix original = table;
  FgmConfig cfg;
  cfg.epsilon = 0.37;
  FgmBackup backup = FgmAttack(&table, grad, cfg);
  EXPECT_NEAR((table - original).norm(), 0.37, 1e-6);
  const Matrix first = table;
  FgmRestore(&table, backup);
  EXPECT_EQ(table, original);
  backup = FgmAttack(&table, grad, cfg);
  EXPECT_EQ(table, first);
  FgmRestore(&table, backup);
  FgmRestore(&table, FgmBackup{table});
  EXPECT_EQ(table, original);
  EXPECT_THROW(FgmRestore(&table, FgmBackup{Matrix::Zero(2, 2)}), Error);
}

TEST(FgmTest, PerRowNormalization) {
  Matrix table = Matrix::Zero(2, 2);
  FgmConfig cfg;
  cfg.per_row = true;
  FgmAttack(&table, Mat({{3.0, 4.0}, {0.0, 2.0}}), cfg);
  EXPECT_NEAR(table.row(0).norm(), 1.0, 1e-12);
  EXPECT_NEAR(table.row(1).norm(), 1.0, 1e-12);
}

struct ToyTask {
  TrainConfig config;
  std::unique_ptr<Tokenizer> tokenizer;
  std::vector<Batch> batches;
};

ToyTask MakeToyTask() {
  ToyTask task;
  task.config.encoder = "toy";
  task.config.lr = 0.01;
  task.config.dropout = 0.0;
  SyntheticConfig sc;
  sc.pairs = 40;
  const auto tagged = PrepareCorpus(GenerateSynthetic(sc, "s"), Provenance::kOriginal);
  std::vector<std::string> texts;
  for (const auto& p : tagged) {
    texts.push_back(p.tagged1);
    texts.push_back(p.tagged2);
  }
  task.tokenizer = MakeTokenizer(task.config, texts);
  task.batches = BatchEncode(tagged, *task.tokenizer, 240, 10);
  return task;
}

std::vector<Matrix> Values(WicModel& model) {
  std::vector<Matrix> out;
  for (auto* p : model.parameters()) out.push_back(p->value);
  return out;
}

TEST(AdversarialStepTest, ZeroEpsilonEqualsDoubledPlainStep) {
  ToyTask task = MakeToyTask();
  auto a = MakeModel(task.config, *task.tokenizer);
  auto b = MakeModel(task.config, *task.tokenizer);
  Ranger opt_a(a->parameters(), task.config.ranger());
  Ranger opt_b(b->parameters(), task.config.ranger());
  FgmConfig zero;
  zero.epsilon = 0.0;
  for (const Batch& batch : task.batches) {
    AdversarialTrainingStep(*a, batch, opt_a, zero);
    PlainStep(*b, batch, opt_b, 2);
  }
  EXPECT_EQ(Values(*a), Values(*b));
}

TEST(AdversarialStepTest, RestoreHappensBeforeUpdate) {
  ToyTask task = MakeToyTask();
  auto a = MakeModel(task.config, *task.tokenizer);
  auto b = MakeModel(task.config, *task.tokenizer);
  Ranger opt_a(a->parameters(), task.config.ranger());
  Ranger opt_b(b->parameters(), task.config.ranger());
  const Batch& batch = task.batches[0];
  const StepLosses losses = AdversarialTrainingStep(*a, batch, opt_a, FgmConfig{});

  // Scripted replay of the five sub-steps.
  b->ZeroGrad();
  const double clean = b->AccumulateGradients(batch, true);
  nn::Parameter& table = b->encoder().embedding_table();
  const FgmBackup backup = FgmAttack(&table, FgmConfig{});
  const double adversarial = b->AccumulateGradients(batch, true);
  FgmRestore(&table.value, backup);
  opt_b.Step();

  EXPECT_EQ(losses.clean, clean);
  EXPECT_EQ(losses.adversarial, adversarial);
  EXPECT_EQ(a->encoder().embedding_table().value, table.value);
  EXPECT_EQ(Values(*a), Values(*b));
}

TEST(AdversarialStepTest, AdversarialLossUsuallyHigher) {
  ToyTask task = MakeToyTask();
  auto model = MakeModel(task.config, *task.tokenizer);
  Ranger opt(model->parameters(), task.config.ranger());
  FgmConfig fgm;
  fgm.epsilon = 0.1;
  int higher = 0, steps = 0;
  while (steps < 200) {
    for (const Batch& batch : task.batches) {
      const StepLosses l = AdversarialTrainingStep(*model, batch, opt, fgm);
      higher += l.adversarial >= l.clean;
      if (++steps == 200) break;
    }
  }
  EXPECT_GE(higher, 160) << higher << " of 200";
}

}  // namespace
}  // namespace wic
