#include "satconv/nn.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "satconv/errors.hpp"
#include "satconv/reference.hpp"
#include "test_util.hpp"

namespace satconv {
namespace {

using testing::random_map;

// Checks input and parameter gradients of `layer` against central
// differences of <layer(x), r>.
void check_gradients(Layer& layer, FeatureMap x, std::mt19937_64& rng, std::size_t max_params = 40,
                     bool skip_box = false) {
  const FeatureMap y0 = layer.forward(x);
  const FeatureMap r = random_map(y0.channels(), y0.height(), y0.width(), rng);
  layer.zero_grad();
  layer.forward(x);
  const FeatureMap gx = layer.backward(r);
  auto loss = [&] { return dot(layer.forward(x), r); };
  auto close = [](double a, double fd) { return std::abs(a - fd) <= 1e-6 + 1e-5 * std::abs(fd); };

  std::uniform_int_distribution<std::size_t> pick_x(0, x.size() - 1);
  for (int t = 0; t < 20; ++t) {
    const std::size_t i = pick_x(rng);
    const double saved = x.data()[i];
    const double fd = finite_diff(
        [&](double v) {
          x.data()[i] = v;
          return loss();
        },
        saved);
    x.data()[i] = saved;
    EXPECT_PRED2(close, gx.data()[i], fd) << "input " << i;
  }

  std::vector<ParamGroup> groups;
  layer.collect(groups);
  // Snapshot gradients; later forward calls do not touch them.
  std::vector<std::vector<double>> grads;
  for (const auto& g : groups) grads.emplace_back(g.grads.begin(), g.grads.end());
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    if (skip_box && groups[gi].name == "box") continue;
    auto values = groups[gi].values;
    const std::size_t stride = std::max<std::size_t>(1, values.size() / max_params);
    for (std::size_t i = 0; i < values.size(); i += stride) {
      const double saved = values[i];
      const double fd = finite_diff(
          [&](double v) {
            values[i] = v;
            return loss();
          },
          saved);
      values[i] = saved;
      EXPECT_PRED2(close, grads[gi][i], fd) << groups[gi].name << " " << i;
    }
  }
}

TEST(PointwiseLayer, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(1);
  PointwiseLayer l(3, 5, rng);
  check_gradients(l, random_map(3, 4, 6, rng), rng);
}

TEST(DepthwiseConv3x3Layer, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(2);
  DepthwiseConv3x3Layer l(3, rng);
  check_gradients(l, random_map(3, 5, 7, rng), rng, 27);
}

TEST(DepthwiseConv3x3Layer, MatchesNaiveConv) {
  std::mt19937_64 rng(3);
  DepthwiseConv3x3Layer l(2, rng);
  const FeatureMap x = random_map(2, 6, 5, rng);
  std::vector<DenseKernel> kernels;
  for (std::size_t c = 0; c < 2; ++c) {
    DenseKernel k(3);
    std::copy_n(l.weights().begin() + static_cast<long>(c * 9), 9, k.weights.begin());
    kernels.push_back(k);
  }
  const FeatureMap want = naive_conv_depthwise(x, kernels);
  const FeatureMap got = l.forward(x);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.data()[i], want.data()[i], 1e-13);
}

TEST(BoxConvModule, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(4);
  std::vector<BoxParams> boxes;
  BoxParams a;
  a.max_kernel = 9;
  a.theta_xl = -0.4123;
  a.theta_xh = 0.3377;
  a.theta_yl = -0.2861;
  a.theta_yh = 0.5219;
  boxes.push_back(a);
  BoxParams b = a;
  b.variant = BoxVariant::Split4;
  b.split_x = 0.0731;
  b.split_y = -0.0412;
  b.weights = {0.7, -1.1, 0.4, 1.3};
  boxes.push_back(b);
  BoxConvModule m(boxes);
  check_gradients(m, random_map(2, 12, 11, rng), rng, 20);
}

TEST(BoxConvModule, AfterStepProjects) {
  BoxRng rng(5);
  BoxConvModule m(3, 7, BoxVariant::SplitH, rng);
  std::vector<ParamGroup> groups;
  m.collect(groups);
  ASSERT_EQ(groups.size(), 1u);
  auto v = groups[0].values;
  v[0] = 1.7;    // xl
  v[1] = -2.0;   // xh
  v[4] = 5.0;    // split_x
  v[10] = 0.3;   // second box xl
  v[11] = 0.1;   // second box xh below xl
  m.after_step();
  for (const BoxParams& p : m.layer().boxes()) {
    EXPECT_TRUE(is_feasible(p));
    EXPECT_EQ(project_params(p), p);
  }
  EXPECT_DOUBLE_EQ(v[0], -1.0);
  EXPECT_DOUBLE_EQ(v[1], 1.0);
  EXPECT_DOUBLE_EQ(v[10], 0.1);
  EXPECT_DOUBLE_EQ(v[11], 0.3);
}

TEST(HalfProcessBlock, IdentityInnerIsChannelShuffle) {
  std::mt19937_64 rng(6);
  const FeatureMap x = random_map(6, 4, 5, rng);
  HalfProcessBlock blk(6, std::make_unique<Sequential>());
  const FeatureMap y = blk.forward(x);
  EXPECT_EQ(y, channel_shuffle(x, 2));
  std::vector<double> a(x.data().begin(), x.data().end()), b(y.data().begin(), y.data().end());
  std::ranges::sort(a);
  std::ranges::sort(b);
  EXPECT_EQ(a, b);
  // Three channels pass through untouched, landing on even slots.
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_TRUE(std::ranges::equal(y.plane(2 * c), x.plane(c)));
  }
  EXPECT_EQ(blk.backward(y), x);
}

TEST(HalfProcessBlock, KeepsChannelCountAndHalfUntouched) {
  BoxRng rng(7);
  auto inner = std::make_unique<Sequential>();
  inner->push(std::make_unique<PointwiseLayer>(4, 4, rng));
  inner->push(std::make_unique<ReluLayer>());
  HalfProcessBlock blk(8, std::move(inner));
  const FeatureMap x = random_map(8, 5, 5, rng);
  const FeatureMap y = blk.forward(x);
  EXPECT_EQ(y.shape(), x.shape());
  const FeatureMap back = channel_unshuffle(y, 2);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_TRUE(std::ranges::equal(back.plane(c), x.plane(c)));
}

TEST(HalfProcessBlock, OddChannelsRejected) {
  EXPECT_THROW(HalfProcessBlock(5, nullptr), ContractViolation);
}

TEST(ChannelChangeBlock, GradientsMatchFiniteDifferences) {
  BoxRng rng(8);
  NetworkSpec spec;
  spec.width = 4;
  spec.blocks = {parse_block("change-conv3:6")};
  ToyNetwork net(spec, rng);
  // Give the zero head some weight so every parameter is reachable.
  std::vector<ParamGroup> groups = net.parameters();
  std::normal_distribution<double> d(0.0, 0.5);
  for (double& v : groups.back().values) v = d(rng);
  check_gradients(net, random_map(1, 6, 6, rng), rng, 12);
}

TEST(ToyNetwork, GradientsMatchFiniteDifferences) {
  BoxRng rng(9);
  NetworkSpec spec;
  spec.width = 4;
  spec.blocks = {parse_block("half-conv3"), parse_block("half-box7"), parse_block("change-box5:6")};
  ToyNetwork net(spec, rng);
  std::vector<ParamGroup> groups = net.parameters();
  std::normal_distribution<double> d(0.0, 0.5);
  for (auto& g : groups) {
    if (g.name == "pointwise.bias") {
      for (double& v : g.values) v = d(rng);
    }
  }
  for (double& v : groups.back().values) v = d(rng);
  // Box parameters are covered by the module-level check, away from lattice lines.
  check_gradients(net, random_map(1, 9, 9, rng), rng, 8, /*skip_box=*/true);
}

TEST(ToyNetwork, PreservesSpatialSize) {
  BoxRng rng(10);
  NetworkSpec spec = {};
  spec.width = 6;
  spec.blocks = {parse_block("half-box13"), parse_block("change-conv3:10"),
                 parse_block("half-box5"), parse_block("change-box9:4")};
  ToyNetwork net(spec, rng);
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{7, 7}, {16, 9}, {32, 32}}) {
    const FeatureMap y = net.forward(FeatureMap(1, h, w, 0.5));
    EXPECT_EQ(y.shape(), (Shape{1, h, w}));
  }
  EXPECT_EQ(net.box_modules().size(), 4u);
}

TEST(ToyNetwork, UntrainedHeadPredictsConstant) {
  BoxRng rng(11);
  ToyNetwork net(NetworkSpec{.width = 4, .blocks = {parse_block("half-conv3")}}, rng);
  std::mt19937_64 data(12);
  const FeatureMap y = net.forward(random_map(1, 8, 8, data));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(ToyNetwork, SameSeedSameParameters) {
  const NetworkSpec spec = {.width = 4, .blocks = {parse_block("half-box9"), parse_block("change-conv3:8")}};
  BoxRng a(13), b(13);
  ToyNetwork na(spec, a), nb(spec, b);
  const auto pa = na.parameters(), pb = nb.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_TRUE(std::ranges::equal(pa[i].values, pb[i].values));
}

TEST(Sequential, BackwardAccumulatesUntilZeroGrad) {
  std::mt19937_64 rng(14);
  PointwiseLayer l(2, 2, rng);
  const FeatureMap x = random_map(2, 3, 3, rng);
  const FeatureMap g = random_map(2, 3, 3, rng);
  std::vector<ParamGroup> groups;
  l.collect(groups);
  l.forward(x);
  l.backward(g);
  const std::vector<double> once(groups[0].grads.begin(), groups[0].grads.end());
  l.backward(g);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_DOUBLE_EQ(groups[0].grads[i], 2 * once[i]);
  l.zero_grad();
  for (double v : groups[0].grads) EXPECT_EQ(v, 0.0);
}

TEST(BlockSpec, ParsesAndPrints) {
  EXPECT_EQ(parse_block("half-conv3"), (BlockSpec{BlockSpec::Kind::Half, 0, 0}));
  EXPECT_EQ(parse_block("half-box13"), (BlockSpec{BlockSpec::Kind::Half, 13, 0}));
  EXPECT_EQ(parse_block("change-box9:16"), (BlockSpec{BlockSpec::Kind::Change, 9, 16}));
  for (const char* s : {"half-conv3", "half-box21", "change-conv3:8", "change-box7:12"}) {
    EXPECT_EQ(to_string(parse_block(s)), s);
  }
}

TEST(BlockSpec, RejectsMalformed) {
  for (const char* s : {"half-box8", "half-box1", "change-box9", "change-conv3:x", "full-conv3",
                        "half-conv5", "half-box"}) {
    EXPECT_THROW(parse_block(s), ConfigError) << s;
  }
}

}  // namespace
}  // namespace satconv
