#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "stablesqf/forecaster.hpp"

using namespace stablesqf;

namespace {

SQFConfig small_config(std::size_t blocks = 2) {
  SQFConfig c;
  c.lookback = 8;
  c.horizon = 3;
  c.n_blocks = blocks;
  c.hidden_width = 6;
  c.knots = make_uniform_knots(4);
  return c;
}

std::vector<double> random_input(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> nd;
  std::vector<double> x(n);
  for (auto& v : x) v = nd(rng);
  return x;
}

// Plain loops over the flat parameter vector.
std::vector<double> dense(const std::vector<double>& theta, const nn::DenseShape& s,
                          const std::vector<double>& x, bool relu) {
  std::vector<double> y(s.out);
  for (std::size_t r = 0; r < s.out; ++r) {
    double acc = theta[s.offset + s.weight_count() + r];
    for (std::size_t c = 0; c < s.in; ++c) acc += theta[s.offset + c * s.out + r] * x[c];
    y[r] = relu ? std::max(acc, 0.0) : acc;
  }
  return y;
}

// gamma, betas per horizon summed over blocks.
std::vector<double> oracle_outputs(const SQFModel& m, std::vector<double> x) {
  const auto& cfg = m.config();
  const std::vector<double> theta(m.params().values().begin(), m.params().values().end());
  const auto& layout = m.params().layout();
  const std::size_t per = cfg.outputs_per_horizon();
  std::vector<double> total(cfg.n_outputs(), 0.0);
  for (std::size_t k = 0; k < cfg.n_blocks; ++k) {
    const std::size_t base = k * 7;
    std::vector<double> h = x;
    for (std::size_t j = 0; j < 4; ++j) h = dense(theta, layout.layer(base + j), h, true);
    const auto back = dense(theta, layout.layer(base + 4), h, cfg.backcast_relu);
    const auto head = dense(theta, layout.layer(base + 5), h, true);
    auto proj = dense(theta, layout.layer(base + 6), head, false);
    for (std::size_t r = 0; r < proj.size(); ++r) {
      if (r % per != 0) proj[r] = std::max(proj[r], 0.0);
      total[r] += proj[r];
    }
    for (std::size_t t = 0; t < x.size(); ++t) x[t] -= back[t];
  }
  return total;
}

std::size_t projection_bias(const SQFModel& m, std::size_t block) {
  const auto& s = m.params().layout().layer(m.block(block).projection);
  return s.offset + s.weight_count();
}

}  // namespace

TEST(SQFConfig, Validation) {
  auto c = small_config();
  c.lookback = 2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.n_blocks = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.knots = nullptr;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(small_config().n_outputs(), 3u * 5u);
}

TEST(SQFModel, MatchesLoopImplementation) {
  std::mt19937_64 rng(11);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SQFModel m(small_config(3), seed);
    const auto x = random_input(rng, 8);
    const auto expect = oracle_outputs(m, x);
    const auto splines = m.forward(x);
    ASSERT_EQ(splines.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_NEAR(splines[i].gamma(), expect[i * 5], 1e-12);
      for (std::size_t l = 0; l < 4; ++l) EXPECT_NEAR(splines[i].betas()[l], expect[i * 5 + 1 + l], 1e-12);
    }
  }
}

TEST(SQFModel, BatchedForwardMatchesSingle) {
  std::mt19937_64 rng(12);
  const SQFModel m(small_config(), 4);
  nn::Matrix x(8, 4);
  for (Eigen::Index c = 0; c < 4; ++c) {
    const auto col = random_input(rng, 8);
    for (Eigen::Index r = 0; r < 8; ++r) x(r, c) = col[static_cast<std::size_t>(r)];
  }
  const auto pass = m.forward(x);
  for (Eigen::Index c = 0; c < 4; ++c) {
    const std::vector<double> col(x.col(c).data(), x.col(c).data() + 8);
    const auto single = m.forward(col);
    const auto batched = m.splines_from_outputs(pass.outputs, c);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_NEAR(single[i].gamma(), batched[i].gamma(), 1e-12);
    }
  }
}

TEST(SQFModel, ZeroWeightsGiveZeroQuantiles) {
  const auto cfg = small_config();
  const SQFModel m(cfg, std::vector<double>(SQFModel::make_layout(cfg).size(), 0.0));
  for (const auto& s : m.forward(std::vector<double>(8, 3.0))) {
    EXPECT_EQ(s.gamma(), 0.0);
    for (double b : s.betas()) EXPECT_EQ(b, 0.0);
  }
}

TEST(SQFModel, SlopesAreNonnegativeAndQuantilesMonotone) {
  std::mt19937_64 rng(13);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SQFModel m(small_config(), seed);
    for (const auto& s : m.forward(random_input(rng, 8))) {
      for (double b : s.betas()) ASSERT_GE(b, 0.0);
      double prev = s(0.0);
      for (int k = 1; k <= 200; ++k) {
        const double q = s(k / 200.0);
        ASSERT_GE(q, prev);
        prev = q;
      }
    }
  }
}

TEST(SQFModel, OutputIsSumOfBlockPartials) {
  std::mt19937_64 rng(14);
  const SQFModel m(small_config(3), 21);
  auto x = random_input(rng, 8);
  const auto total = m.forward(x);
  std::vector<SplineQF> acc;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto out = m.block_forward(k, x);
    if (acc.empty()) {
      acc = out.partials;
    } else {
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = acc[i] + out.partials[i];
    }
    for (std::size_t t = 0; t < x.size(); ++t) x[t] -= out.backcast[t];
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for (double a : {0.0, 0.1, 0.37, 0.5, 0.9, 1.0}) EXPECT_NEAR(acc[i](a), total[i](a), 1e-12);
  }
}

TEST(SQFModel, ResidualTelescopes) {
  std::mt19937_64 rng(15);
  const SQFModel m(small_config(4), 22);
  const auto x = random_input(rng, 8);
  nn::Matrix in = Eigen::Map<const nn::Matrix>(x.data(), 8, 1);
  const auto pass = m.forward(in);
  nn::Matrix back_sum = nn::Matrix::Zero(8, 1);
  for (const auto& rec : pass.blocks) back_sum += pass.tape.output(rec.backcast);
  EXPECT_LT((pass.residual - (in - back_sum)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SQFModel, SingleBlockEqualsItsPartials) {
  std::mt19937_64 rng(16);
  const SQFModel m(small_config(1), 23);
  const auto x = random_input(rng, 8);
  const auto full = m.forward(x);
  const auto part = m.block_forward(0, x).partials;
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(full[i].gamma(), part[i].gamma());
    EXPECT_TRUE(std::equal(full[i].betas().begin(), full[i].betas().end(), part[i].betas().begin()));
  }
}

TEST(SQFModel, SilentSecondBlockChangesNothing) {
  std::mt19937_64 rng(17);
  const SQFModel one(small_config(1), 24);
  std::vector<double> theta(one.params().values().begin(), one.params().values().end());
  theta.resize(SQFModel::make_layout(small_config(2)).size(), 0.0);
  const SQFModel two(small_config(2), theta);
  const auto x = random_input(rng, 8);
  const auto a = one.forward(x), b = two.forward(x);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a[i].gamma(), b[i].gamma());
    for (std::size_t l = 0; l < 4; ++l) EXPECT_EQ(a[i].betas()[l], b[i].betas()[l]);
  }
}

TEST(SQFModel, ProjectionBiasSetsConstantSpline) {
  const auto cfg = small_config(1);
  SQFModel m(cfg, std::vector<double>(SQFModel::make_layout(cfg).size(), 0.0));
  const std::size_t b = projection_bias(m, 0);
  auto theta = m.mutable_params().mutable_values();
  theta[b + 5] = 2.0;   // gamma of horizon 2
  theta[b + 6] = -1.0;  // first slope, removed by the slope ReLU
  theta[b + 7] = 4.0;   // second slope
  const auto s = m.forward(std::vector<double>(8, 0.0));
  EXPECT_EQ(s[1].gamma(), 2.0);
  EXPECT_EQ(s[1].betas()[0], 0.0);
  EXPECT_DOUBLE_EQ(s[1](0.5), 2.0 + 4.0 * 0.25);
}

TEST(ForecastQuantiles, DestandardizesAndClips) {
  const auto cfg = small_config(1);
  SQFModel m(cfg, std::vector<double>(SQFModel::make_layout(cfg).size(), 0.0));
  const auto grid = QuantileGrid::midpoints(10);
  const auto q = forecast_quantiles(m, std::vector<double>(8, 5.0), grid, true, Standardization{7.0, 2.0});
  EXPECT_EQ(q.rows(), 3);
  EXPECT_EQ(q.cols(), 10);
  EXPECT_TRUE((q.array() == 7.0).all());

  auto theta = m.mutable_params().mutable_values();
  theta[projection_bias(m, 0)] = -5.0;
  const auto clipped = forecast_quantiles(m, std::vector<double>(8, 0.0), grid, true, Standardization{1.0, 1.0});
  EXPECT_TRUE((clipped.row(0).array() == 0.0).all());
  const auto raw = forecast_quantiles(m, std::vector<double>(8, 0.0), grid, false, Standardization{1.0, 1.0});
  EXPECT_TRUE((raw.row(0).array() == -4.0).all());
}

TEST(PaddedWindow, FrontPads) {
  const std::vector<double> h = {1, 2, 3};
  EXPECT_EQ(padded_window(h, 5, 9.0), (std::vector<double>{9, 9, 1, 2, 3}));
  EXPECT_EQ(padded_window(h, 2), (std::vector<double>{2, 3}));
}

TEST(SQFModel, RejectsWrongLookbackLength) {
  const SQFModel m(small_config(), 1);
  EXPECT_THROW(m.forward(std::vector<double>(7, 0.0)), std::invalid_argument);
  EXPECT_THROW(SQFModel(small_config(), std::vector<double>(3)), std::invalid_argument);
}
