#include "satconv/train.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "satconv/errors.hpp"

namespace satconv {
namespace {

DenseKernel integer_box_target() {
  // Columns -3..2, rows -2..1 around the center of a 9x9 window.
  DenseKernel t(9);
  for (int i = 2; i <= 5; ++i) {
    for (int j = 1; j <= 6; ++j) t.at(i, j) = 1.0;
  }
  return t;
}

TEST(ScheduledLr, DropsAtThreeQuarters) {
  EXPECT_EQ(scheduled_lr(0.1, 0, 100), 0.1);
  EXPECT_EQ(scheduled_lr(0.1, 74, 100), 0.1);
  EXPECT_DOUBLE_EQ(scheduled_lr(0.1, 75, 100), 0.01);
  EXPECT_DOUBLE_EQ(scheduled_lr(0.1, 99, 100), 0.01);
}

TEST(LaplacianOfGaussian, CenterAndSymmetry) {
  const DenseKernel k = laplacian_of_gaussian(9, 1.4);
  EXPECT_NEAR(k.at(4, 4), -1.0 / (std::numbers::pi * std::pow(1.4, 4)), 1e-15);
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 9; ++j) {
      EXPECT_DOUBLE_EQ(k.at(i, j), k.at(8 - i, j));
      EXPECT_DOUBLE_EQ(k.at(i, j), k.at(j, i));
    }
  }
}

TEST(CompositeError, EmptyIsBaseline) {
  EXPECT_EQ(composite_error({}, {}, laplacian_of_gaussian(9, 1.4)), 1.0);
}

TEST(CompositeError, ExactBoxIsZero) {
  BoxParams b;
  b.max_kernel = 9;
  b.theta_xl = -0.75;
  b.theta_xh = 0.5;
  b.theta_yl = -0.5;
  b.theta_yh = 0.25;
  EXPECT_NEAR(composite_error({b}, {1.0}, integer_box_target()), 0.0, 1e-15);
  EXPECT_NEAR(composite_error({b}, {0.5}, integer_box_target()), 0.5, 1e-15);
}

TEST(EmbedKernel, CentersSmallerKernel) {
  DenseKernel k(3);
  k.at(1, 1) = 2.0;
  k.at(0, 2) = 1.0;
  const DenseKernel e = embed_kernel(k, 7);
  EXPECT_EQ(e.at(3, 3), 2.0);
  EXPECT_EQ(e.at(2, 4), 1.0);
  EXPECT_THROW(embed_kernel(k, 2), ContractViolation);
}

TEST(TrainKernelApprox, ZeroBoxesReportsBaseline) {
  KernelApproxOptions o;
  o.n_boxes = 0;
  const KernelApproxResult r = train_kernel_approx(laplacian_of_gaussian(9, 1.4), o);
  EXPECT_EQ(r.final_error, 1.0);
  EXPECT_TRUE(r.boxes.empty());
}

TEST(TrainKernelApprox, RecoversRepresentableBox) {
  KernelApproxOptions o;
  o.k = 9;
  o.n_boxes = 1;
  o.steps = 2000;
  const KernelApproxResult r = train_kernel_approx(integer_box_target(), o);
  EXPECT_EQ(r.initial_error, 1.0);
  EXPECT_LT(r.final_error, 1e-3);
  ASSERT_EQ(r.log.size(), 2000u);
}

TEST(TrainKernelApprox, LogTargetImprovesAndStaysDiverse) {
  KernelApproxOptions o;
  o.k = 13;
  o.n_boxes = 4;
  o.steps = 2000;
  const KernelApproxResult r = train_kernel_approx(laplacian_of_gaussian(9, 1.4), o);
  const auto err = [&](std::size_t step) { return 1.0 - r.log[step - 1].accuracy; };
  EXPECT_GT(r.initial_error, err(1));
  EXPECT_GT(err(1), err(100));
  EXPECT_GT(err(100), err(400));
  EXPECT_LT(r.final_error, r.initial_error / 5.0);

  // Diversity: some pair of boxes differs by more than 1e-3.
  double widest = 0.0;
  for (std::size_t i = 0; i < r.boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < r.boxes.size(); ++j) {
      const BoxParams &a = r.boxes[i], &b = r.boxes[j];
      widest = std::max(widest, std::hypot(a.theta_xl - b.theta_xl, a.theta_xh - b.theta_xh,
                                           a.theta_yl - b.theta_yl) +
                                    std::abs(a.theta_yh - b.theta_yh));
    }
  }
  EXPECT_GT(widest, 1e-3);

  // No size collapse: not every box ends at the minimum one-pixel area.
  const auto area = [](const BoxParams& p) {
    const double s = pixel_scale(p.max_kernel);
    return (s * (p.theta_xh - p.theta_xl) + 1.0) * (s * (p.theta_yh - p.theta_yl) + 1.0);
  };
  double largest = 0.0;
  for (const auto& b : r.boxes) largest = std::max(largest, area(b));
  EXPECT_GT(largest, 1.0 + 1e-3);
}

TEST(TrainKernelApprox, Deterministic) {
  KernelApproxOptions o;
  o.steps = 50;
  const auto a = train_kernel_approx(laplacian_of_gaussian(9, 1.4), o);
  const auto b = train_kernel_approx(laplacian_of_gaussian(9, 1.4), o);
  EXPECT_EQ(a.boxes, b.boxes);
  EXPECT_EQ(a.weights, b.weights);
}

TEST(KeypointSample, KeypointInsideMarginAndBlobVisible) {
  BoxRng rng(3);
  for (int t = 0; t < 50; ++t) {
    const KeypointSample s = make_keypoint_sample(32, rng);
    EXPECT_GE(s.point.x, 4.0);
    EXPECT_LE(s.point.x, 27.0);
    EXPECT_GE(s.point.y, 4.0);
    EXPECT_LE(s.point.y, 27.0);
    EXPECT_EQ(s.image.shape(), (Shape{1, 32, 32}));
  }
}

TEST(KeypointSample, RawImageArgmaxIsUnreliable) {
  // The distractor spikes outshine the blob often enough that a pixel-wise
  // decoder fails; the network has to aggregate context.
  BoxRng rng(4);
  int hits = 0;
  for (int t = 0; t < 200; ++t) {
    const KeypointSample s = make_keypoint_sample(32, rng);
    const Keypoint k = decode_keypoint(s.image);
    if (std::hypot(k.x - s.point.x, k.y - s.point.y) <= 2.0) ++hits;
  }
  EXPECT_LT(hits, 100);
}

TEST(TrainToyKeypoints, ZeroStepsIsChanceLevel) {
  KeypointOptions o;
  o.network = default_keypoint_network();
  o.steps = 0;
  o.eval_samples = 100;
  const KeypointResult r = train_toy_keypoints(o);
  // A uniform guess lands within 2 px with probability ~13/1024.
  EXPECT_LE(r.accuracy, 0.05);
  EXPECT_TRUE(r.log.empty());
}

TEST(TrainToyKeypoints, SameSeedBitIdentical) {
  KeypointOptions o;
  o.network = default_keypoint_network();
  o.steps = 15;
  o.batch = 2;
  o.eval_samples = 10;
  const KeypointResult a = train_toy_keypoints(o);
  const KeypointResult b = train_toy_keypoints(o);
  const auto pa = a.network->parameters(), pb = b.network->parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_TRUE(std::ranges::equal(pa[i].values, pb[i].values));
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].loss, b.log[i].loss);
}

TEST(TrainToyKeypoints, ObserverSeesProjectedBoxesEveryStep) {
  KeypointOptions o;
  o.network = default_keypoint_network();
  o.steps = 10;
  o.batch = 1;
  o.lr = 0.05;  // large steps push boxes against their bounds
  o.eval_samples = 0;
  std::size_t calls = 0;
  train_toy_keypoints(o, [&](std::size_t step, ToyNetwork& net) {
    EXPECT_EQ(step, ++calls);
    for (const BoxConvModule* m : net.box_modules()) {
      for (const BoxParams& b : m->layer().boxes()) {
        EXPECT_TRUE(is_feasible(b));
        EXPECT_EQ(project_params(b), b);
      }
    }
  });
  EXPECT_EQ(calls, 10u);
}

}  // namespace
}  // namespace satconv
