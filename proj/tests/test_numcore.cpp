#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <cstring>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "tcnscope/batchnorm.hpp"
#include "tcnscope/conv1d.hpp"
#include "tcnscope/layers.hpp"
#include "tcnscope/optim.hpp"
#include "tcnscope/serialize.hpp"

using namespace tcnscope;

namespace {

constexpr double kStep = 1e-3;
constexpr double kGradTol = 1e-4;

}  // namespace

TEST(Conv1d, ZeroInputGivesZeroOutput) {
  std::mt19937_64 rng(1);
  Tensor x({2, 9, 3});
  auto w = oracle::random_tensor({4, 3, 3}, rng);
  auto y = conv1d(x, w, 1, Padding::same);
  EXPECT_EQ(max_abs(y), 0.0);
}

TEST(Conv1d, SameShapeForFullWidthInput) {
  Tensor x({1, 300, 120});
  Tensor w({64, 8, 120});
  auto y = conv1d(x, w, 1, Padding::same);
  EXPECT_EQ(y.shape(), (Tensor::Shape{1, 300, 64}));
  EXPECT_EQ(conv1d(x, w, 2, Padding::same).extent(1), 150u);
  EXPECT_EQ(conv1d(Tensor({1, 7, 2}), Tensor({1, 3, 2}), 2, Padding::same).extent(1), 4u);
  EXPECT_EQ(conv1d(Tensor({1, 7, 2}), Tensor({1, 3, 2}), 2, Padding::valid).extent(1), 3u);
}

TEST(Conv1d, SmallValidCaseMatchesNestedLoops) {
  std::mt19937_64 rng(7);
  auto x = oracle::random_tensor({1, 8, 3}, rng);
  auto w = oracle::random_tensor({2, 2, 3}, rng);
  auto y = conv1d(x, w, 1, Padding::valid);
  auto ref = oracle::conv1d(x, w, 1, false);
  ASSERT_EQ(y.shape(), ref.shape());
  EXPECT_LE(max_abs_diff(y, ref), 1e-12);
}

TEST(Conv1d, SamePaddingPutsExtraZeroAtTheEnd) {
  // f = 2, stride 1: one pad zero, appended after the last frame
  Tensor x({1, 3, 1}, {1.0, 2.0, 3.0});
  Tensor w({1, 2, 1}, {1.0, 10.0});
  auto y = conv1d(x, w, 1, Padding::same);
  EXPECT_EQ(y.values()[0], 21.0);
  EXPECT_EQ(y.values()[1], 32.0);
  EXPECT_EQ(y.values()[2], 3.0);
}

TEST(Conv1d, Errors) {
  EXPECT_THROW(conv1d(Tensor({1, 4, 3}), Tensor({2, 2, 2}), 1, Padding::same), ShapeError);
  EXPECT_THROW(conv1d(Tensor({1, 4, 3}), Tensor({2, 2, 3}), 0, Padding::same), ParameterError);
  EXPECT_THROW(conv1d(Tensor({1, 4, 3}), Tensor({2, 2, 3}), -1, Padding::same), ParameterError);
  EXPECT_THROW(conv1d(Tensor({1, 4, 3}), Tensor({2, 5, 3}), 1, Padding::valid), ShapeError);
}

TEST(Conv1d, IsLinear) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = oracle::random_tensor({2, 11, 3}, rng);
    auto y = oracle::random_tensor({2, 11, 3}, rng);
    auto w = oracle::random_tensor({4, 3, 3}, rng);
    const double a = 1.7, b = -0.3;
    Tensor mix = add(scaled(x, a), scaled(y, b));
    auto lhs = conv1d(mix, w, 2, Padding::same);
    auto rhs = add(scaled(conv1d(x, w, 2, Padding::same), a), scaled(conv1d(y, w, 2, Padding::same), b));
    EXPECT_LE(max_abs_diff(lhs, rhs), 1e-10 * std::max(1.0, max_abs(rhs)));
  }
}

TEST(Conv1d, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  for (int stride : {1, 2, 3}) {
    for (Padding pad : {Padding::same, Padding::valid}) {
      auto x = oracle::random_tensor({2, 9, 3}, rng);
      auto w = oracle::random_tensor({4, 3, 3}, rng);
      auto probe = oracle::random_tensor(conv1d(x, w, stride, pad).shape(), rng);
      auto loss = [&] { return oracle::weighted_sum(conv1d(x, w, stride, pad), probe); };
      auto g = conv1d_backward(x, w, probe, stride, pad);
      EXPECT_LT(oracle::relative_error(g.input, oracle::numeric_gradient(x, loss, kStep)), kGradTol);
      EXPECT_LT(oracle::relative_error(g.filters, oracle::numeric_gradient(w, loss, kStep)), kGradTol);
    }
  }
}

TEST(BatchNorm, TrainModeStandardizesChannels) {
  std::mt19937_64 rng(5);
  auto x = oracle::random_tensor({3, 10, 4}, rng, 2.0, 9.0);
  auto st = BatchNormState::create(4, "bn");
  auto y = batchnorm(x, st, Mode::train);
  for (std::size_t c = 0; c < 4; ++c) {
    double m = 0, v = 0;
    for (std::size_t r = 0; r < 30; ++r) m += y[r * 4 + c];
    m /= 30;
    for (std::size_t r = 0; r < 30; ++r) v += (y[r * 4 + c] - m) * (y[r * 4 + c] - m);
    v /= 30;
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v, 1.0, 1e-3);  // epsilon shrinks the variance slightly
  }
  // running stats moved toward the batch statistics
  EXPECT_GT(st.running_mean[0], 0.0);
}

TEST(BatchNorm, EvalModeWithUnitStatsIsAffine) {
  auto st = BatchNormState::create(2, "bn");
  st.scale.value.fill(2.0);
  st.shift.value.fill(3.0);
  Tensor x({1, 3, 2}, {-1.0, 0.0, 0.5, 1.0, 2.0, -4.0});
  auto y = batchnorm(x, st, Mode::eval);
  const double k = 1.0 / std::sqrt(1.0 + st.epsilon);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(y[i], 2.0 * x[i] * k + 3.0);
}

TEST(BatchNorm, EvalModeIsBatchCompositionInvariant) {
  std::mt19937_64 rng(8);
  auto st = BatchNormState::create(3, "bn");
  st.running_mean = oracle::random_tensor({3}, rng);
  st.running_var = oracle::random_tensor({3}, rng, 0.5, 2.0);
  auto batch = oracle::random_tensor({4, 5, 3}, rng);
  auto all = batchnorm(batch, st, Mode::eval);
  for (std::size_t b = 0; b < 4; ++b) {
    auto one = batchnorm(batch.slice(b).reshaped({1, 5, 3}), st, Mode::eval);
    EXPECT_EQ(one.reshaped({5, 3}), all.slice(b));
  }
}

TEST(BatchNorm, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(9);
  for (Mode mode : {Mode::train, Mode::eval}) {
    auto x = oracle::random_tensor({2, 6, 4}, rng);
    auto st = BatchNormState::create(4, "bn");
    st.scale.value = oracle::random_tensor({4}, rng, 0.5, 1.5);
    st.shift.value = oracle::random_tensor({4}, rng);
    auto probe = oracle::random_tensor({2, 6, 4}, rng);
    auto loss = [&] {
      auto copy = st;  // keep running stats fixed across evaluations
      return oracle::weighted_sum(batchnorm(x, copy, mode), probe);
    };
    BatchNormCache cache;
    auto copy = st;
    batchnorm(x, copy, mode, &cache);
    copy.scale.zero_grad();
    copy.shift.zero_grad();
    auto dx = batchnorm_backward(probe, copy, cache);
    EXPECT_LT(oracle::relative_error(dx, oracle::numeric_gradient(x, loss, kStep)), kGradTol);
    EXPECT_LT(oracle::relative_error(copy.scale.grad, oracle::numeric_gradient(st.scale.value, loss, kStep)), kGradTol);
    EXPECT_LT(oracle::relative_error(copy.shift.grad, oracle::numeric_gradient(st.shift.value, loss, kStep)), kGradTol);
  }
}

TEST(BatchNorm, ChannelMismatchIsShapeError) {
  auto st = BatchNormState::create(3, "bn");
  EXPECT_THROW(batchnorm(Tensor({1, 2, 4}), st, Mode::train), ShapeError);
}

TEST(Relu, Definition) {
  auto y = relu(Tensor({3}, {-1.0, 0.0, 2.0}));
  EXPECT_EQ(y, Tensor({3}, {0.0, 0.0, 2.0}));
  EXPECT_EQ(max_abs(relu(Tensor({4}, -3.0))), 0.0);
}

TEST(Relu, GradientMaskMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  auto x = oracle::random_tensor({3, 4, 5}, rng);
  for (auto& v : x.values())
    if (std::abs(v) < 0.05) v = 0.5;  // stay away from the kink
  auto probe = oracle::random_tensor(x.shape(), rng);
  auto g = relu_backward(x, probe);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(g[i], x[i] > 0 ? probe[i] : 0.0);
  auto loss = [&] { return oracle::weighted_sum(relu(x), probe); };
  EXPECT_LT(oracle::relative_error(g, oracle::numeric_gradient(x, loss, kStep)), kGradTol);
}

TEST(Dropout, IdentityCases) {
  std::mt19937_64 rng(4);
  auto x = oracle::random_tensor({2, 3, 4}, rng);
  EXPECT_EQ(dropout(x, 0.5, Mode::eval, 1), x);
  EXPECT_EQ(dropout(x, 0.0, Mode::train, 1), x);
  EXPECT_THROW(dropout(x, 1.0, Mode::train, 1), ParameterError);
  EXPECT_THROW(dropout(x, -0.1, Mode::train, 1), ParameterError);
}

TEST(Dropout, InvertedScalingPreservesMean) {
  auto y = dropout(Tensor({100000}, 1.0), 0.5, Mode::train, 2024);
  double mean = 0.0;
  for (double v : y.values()) {
    EXPECT_TRUE(v == 0.0 || v == 2.0);
    mean += v;
  }
  mean /= 100000.0;
  EXPECT_GE(mean, 0.98);
  EXPECT_LE(mean, 1.02);
  EXPECT_EQ(dropout(Tensor({1000}, 1.0), 0.5, Mode::train, 3), dropout(Tensor({1000}, 1.0), 0.5, Mode::train, 3));
}

TEST(Dropout, BackwardUsesTheSameMask) {
  DropoutMask mask;
  auto y = dropout(Tensor({50}, 1.0), 0.3, Mode::train, 10, &mask);
  auto g = dropout_backward(Tensor({50}, 1.0), mask);
  EXPECT_EQ(g, y);
}

TEST(GlobalAveragePool, Definition) {
  Tensor constant({1, 4, 3});
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t c = 0; c < 3; ++c) constant.at(0, t, c) = static_cast<double>(c) - 0.5;
  EXPECT_EQ(global_average_pool(constant), Tensor({1, 3}, {-0.5, 0.5, 1.5}));
  Tensor two({1, 2, 3}, {0, 0, 0, 2, 2, 2});
  EXPECT_EQ(global_average_pool(two), Tensor({1, 3}, 1.0));
}

TEST(GlobalAveragePool, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(13);
  auto x = oracle::random_tensor({2, 7, 3}, rng);
  auto probe = oracle::random_tensor({2, 3}, rng);
  auto loss = [&] { return oracle::weighted_sum(global_average_pool(x), probe); };
  EXPECT_LT(oracle::relative_error(global_average_pool_backward(probe, 7), oracle::numeric_gradient(x, loss, kStep)),
            kGradTol);
}

TEST(DenseSoftmaxXent, ZeroParametersGiveUniformProbabilities) {
  Parameter w("w", Tensor({5, 60})), b("b", Tensor({60}));
  std::mt19937_64 rng(1);
  auto x = oracle::random_tensor({3, 5}, rng);
  std::vector<int> y{0, 17, 59};
  auto r = dense_softmax_xent(x, w, b, y);
  EXPECT_NEAR(r.loss, std::log(60.0), 1e-12);
  EXPECT_NEAR(r.loss, 4.0943, 1e-4);
  for (double p : r.probs.values()) EXPECT_NEAR(p, 1.0 / 60.0, 1e-15);
}

TEST(DenseSoftmaxXent, OutOfRangeLabelIsDataError) {
  Parameter w("w", Tensor({2, 3})), b("b", Tensor({3}));
  std::vector<int> y{3};
  EXPECT_THROW(dense_softmax_xent(Tensor({1, 2}), w, b, y), DataError);
  std::vector<int> neg{-1};
  EXPECT_THROW(dense_softmax_xent(Tensor({1, 2}), w, b, neg), DataError);
}

TEST(DenseSoftmaxXent, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(21);
  auto x = oracle::random_tensor({3, 5}, rng);
  Parameter w("w", oracle::random_tensor({5, 4}, rng)), b("b", oracle::random_tensor({4}, rng));
  std::vector<int> y{2, 0, 3};
  auto loss = [&] { return dense_softmax_xent(x, w, b, y).loss; };
  auto fwd = dense_softmax_xent(x, w, b, y);
  auto dx = dense_softmax_xent_backward(x, w, b, fwd, y);
  EXPECT_LT(oracle::relative_error(dx, oracle::numeric_gradient(x, loss, kStep)), kGradTol);
  EXPECT_LT(oracle::relative_error(w.grad, oracle::numeric_gradient(w.value, loss, kStep)), kGradTol);
  EXPECT_LT(oracle::relative_error(b.grad, oracle::numeric_gradient(b.value, loss, kStep)), kGradTol);
}

TEST(Sgd, L1StepOnConvWeight) {
  SGDConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.momentum = 0.0;
  cfg.l1_weight = 1e-4;
  Parameter w("conv", Tensor({1}, 2.0), true);
  SGD sgd(cfg);
  Parameter* ps[] = {&w};
  sgd.step(ps);
  EXPECT_DOUBLE_EQ(w.value[0], 2.0 - 0.01 * 1e-4);
  EXPECT_NEAR(w.value[0], 1.999999, 1e-15);
}

TEST(Sgd, NonConvParametersGetNoL1) {
  SGDConfig cfg;
  Parameter bn("bn.scale", Tensor({1}, 2.0), false);
  SGD sgd(cfg);
  Parameter* ps[] = {&bn};
  sgd.step(ps);
  EXPECT_EQ(bn.value[0], 2.0);
}

TEST(Sgd, PlainGradientDescent) {
  SGDConfig cfg;
  cfg.l1_weight = 0.0;
  cfg.learning_rate = 0.1;
  Parameter w("conv", Tensor({2}, {1.0, -1.0}), true);
  w.grad = Tensor({2}, {0.5, 2.0});
  SGD sgd(cfg);
  Parameter* ps[] = {&w};
  sgd.step(ps);
  EXPECT_DOUBLE_EQ(w.value[0], 1.0 - 0.1 * 0.5);
  EXPECT_DOUBLE_EQ(w.value[1], -1.0 - 0.1 * 2.0);
}

TEST(Sgd, MomentumTwoStepsOnQuadratic) {
  // f(w) = 0.5 * a * w^2, grad = a * w. By hand with a = 2, lr = 0.1, mu = 0.9, w0 = 1:
  //   g0 = 2,    v1 = -0.2,                 w1 = 0.8
  //   g1 = 1.6,  v2 = 0.9*(-0.2) - 0.16 = -0.34,  w2 = 0.46
  SGDConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.momentum = 0.9;
  cfg.l1_weight = 0.0;
  Parameter w("w", Tensor({1}, 1.0), true);
  SGD sgd(cfg);
  Parameter* ps[] = {&w};
  w.grad[0] = 2.0 * w.value[0];
  sgd.step(ps);
  EXPECT_DOUBLE_EQ(w.value[0], 0.8);
  w.grad[0] = 2.0 * w.value[0];
  sgd.step(ps);
  EXPECT_NEAR(w.value[0], 0.46, 1e-15);
}

TEST(Sgd, ZeroGradientAndNoL1LeavesParametersBitwiseUnchanged) {
  std::mt19937_64 rng(2);
  SGDConfig cfg;
  cfg.l1_weight = 0.0;
  cfg.momentum = 0.9;
  Parameter w("w", oracle::random_tensor({3, 4}, rng), true);
  w.value[0] = -0.0;
  const Tensor before = w.value;
  SGD sgd(cfg);
  Parameter* ps[] = {&w};
  for (int i = 0; i < 3; ++i) sgd.step(ps);
  EXPECT_EQ(std::memcmp(before.data(), w.value.data(), before.size() * sizeof(double)), 0);
}

TEST(Plateau, DecreasingLossesKeepInitialRate) {
  SGDConfig cfg;
  std::vector<double> h{2.0, 1.5, 1.2, 1.0, 0.9, 0.8, 0.7, 0.6};
  EXPECT_EQ(plateau_schedule(h, cfg), 0.01);
}

TEST(Plateau, SixIdenticalLossesDecayOnce) {
  SGDConfig cfg;
  cfg.plateau_patience = 5;
  std::vector<double> h(6, 1.0);
  EXPECT_DOUBLE_EQ(plateau_schedule(h, cfg), 0.001);
  std::vector<double> five(5, 1.0);
  EXPECT_EQ(plateau_schedule(five, cfg), 0.01);
  // counter resets after a decay: five more flat epochs are needed for the next one
  std::vector<double> eleven(11, 1.0);
  EXPECT_DOUBLE_EQ(plateau_schedule(eleven, cfg), 0.01 * 0.1 * 0.1);
  std::vector<double> ten(10, 1.0);
  EXPECT_DOUBLE_EQ(plateau_schedule(ten, cfg), 0.001);
}

TEST(Plateau, ImprovementMustExceedMinDelta) {
  // Exactly representable steps. A single step of exactly min_delta is not an
  // improvement, but the next one beats the best by 2 * min_delta, so a steady
  // min_delta-per-epoch descent never exhausts the patience.
  SGDConfig cfg;
  cfg.min_delta = 0.25;
  cfg.plateau_patience = 5;
  std::vector<double> exact{4.0, 3.75, 3.5, 3.25, 3.0, 2.75, 2.5, 2.25, 2.0, 1.75, 1.5};
  EXPECT_EQ(plateau_schedule(exact, cfg), 0.01);
  PlateauTracker tracker(cfg);
  tracker.observe(4.0);
  tracker.observe(3.75);
  EXPECT_EQ(tracker.best(), 4.0);
  // one step just inside min_delta, then flat: counts as a plateau
  std::vector<double> shallow{4.0, 3.8, 3.8, 3.8, 3.8, 3.8};
  EXPECT_DOUBLE_EQ(plateau_schedule(shallow, cfg), 0.001);
  EXPECT_THROW(plateau_schedule(std::vector<double>{}, cfg), DataError);
}

TEST(Serialize, RoundTripIsBitExact) {
  std::mt19937_64 rng(99);
  auto t = oracle::random_tensor({3, 1, 5}, rng, -1e300, 1e300);
  t[0] = -0.0;
  t[1] = 5e-324;
  std::stringstream ss;
  write_tensor(ss, t);
  auto back = read_tensor(ss);
  EXPECT_EQ(back.shape(), t.shape());
  EXPECT_EQ(std::memcmp(back.data(), t.data(), t.size() * sizeof(double)), 0);
}

TEST(Serialize, LayoutIsLittleEndianRankExtentsData) {
  std::stringstream ss;
  write_tensor(ss, Tensor({2}, {1.0, -2.0}));
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 8u * (1 + 1 + 2));
  EXPECT_EQ(static_cast<unsigned char>(bytes[0]), 1u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 2u);
  // 1.0 = 0x3FF0000000000000, little-endian: last byte 0x3F
  EXPECT_EQ(static_cast<unsigned char>(bytes[16 + 7]), 0x3Fu);
  EXPECT_EQ(static_cast<unsigned char>(bytes[16 + 6]), 0xF0u);
  std::stringstream truncated(bytes.substr(0, 20));
  EXPECT_THROW(read_tensor(truncated), DataError);
}

TEST(Tensor, InvariantsAndErrors) {
  EXPECT_THROW(Tensor({2, 0}), ShapeError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>(3)), ShapeError);
  Tensor t({2, 3});
  EXPECT_EQ(t.size(), 6u);
}
