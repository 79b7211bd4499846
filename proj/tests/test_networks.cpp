/*
 * Copyright 2026 The lanhdr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace lanhdr;
namespace lt = lanhdr::testing;

TEST(GatedConv, ZeroGateGivesHalfFeature) {
  torch::manual_seed(1);
  GatedConv2d g(3, 4);
  {
    torch::NoGradGuard no_grad;
    g->gate_conv()->weight.zero_();
    g->gate_conv()->bias.zero_();
  }
  const auto x = torch::randn({1, 3, 6, 6});
  EXPECT_TRUE(torch::allclose(g(x), 0.5 * torch::elu(g->feature_conv()(x))));
}

TEST(GatedConv, ZeroInputZeroBias) {
  GatedConv2d g(3, 4);
  {
    torch::NoGradGuard no_grad;
    g->feature_conv()->bias.zero_();
    g->gate_conv()->bias.zero_();
  }
  EXPECT_EQ(g(torch::zeros({1, 3, 5, 5})).abs().max().item<float>(), 0.0f);
}

TEST(GatedConv, OneByOneScalarOracle) {
  torch::manual_seed(2);
  GatedConv2d g(1, 1, 1);
  g->to(torch::kDouble);
  const double wf = g->feature_conv()->weight.item<double>(), bf = g->feature_conv()->bias.item<double>();
  const double wg = g->gate_conv()->weight.item<double>(), bg = g->gate_conv()->bias.item<double>();
  const auto x = torch::randn({1, 1, 3, 4}, torch::kDouble);
  const auto y = g(x);
  for (int64_t i = 0; i < 3; ++i) {
    for (int64_t j = 0; j < 4; ++j) {
      const double v = x[0][0][i][j].item<double>();
      const double f = wf * v + bf, s = wg * v + bg;
      const double elu = f > 0 ? f : std::expm1(f);
      EXPECT_NEAR(y[0][0][i][j].item<double>(), elu / (1.0 + std::exp(-s)), 1e-12);
    }
  }
}

TEST(GatedConv, GateBoundsFeatureResponse) {
  torch::manual_seed(3);
  GatedConv2d g(2, 3);
  const auto x = torch::randn({2, 2, 7, 7}) * 3;
  const auto ratio = g(x) / torch::elu(g->feature_conv()(x));
  const auto valid = torch::elu(g->feature_conv()(x)).abs() > 1e-6;
  const auto r = ratio.masked_select(valid);
  EXPECT_GT(r.min().item<float>(), 0.0f);
  EXPECT_LT(r.max().item<float>(), 1.0f);
  EXPECT_THROW(g(torch::randn({1, 3, 4, 4})), ContractViolation);
}

TEST(LuminanceMask, Examples) {
  const auto white = make_luminance_mask({torch::ones({3, 4, 4}), 1.0});
  EXPECT_TRUE(torch::allclose(white.data, torch::ones({1, 1, 4, 4})));
  const auto black = make_luminance_mask({torch::zeros({3, 4, 4}), 1.0});
  EXPECT_EQ(black.data.abs().max().item<float>(), 0.0f);
  const auto ramp = torch::linspace(0.0, 1.0, 8, torch::kDouble).view({1, 1, 8}).expand({3, 2, 8});
  const auto m = make_luminance_mask({ramp.contiguous(), 1.0});
  EXPECT_TRUE(torch::allclose(m.data[0][0], ramp[0]));
}

TEST(Hallucination, ShapesAndZeroPath) {
  const auto cfg = lt::small_model(2, 8);
  HallucinationModule h(cfg);
  const FeatureMap six{torch::rand({1, 6, 64, 64}), Scale::kFull};
  const FeatureMap mask{torch::rand({1, 1, 64, 64}), Scale::kFull};
  const auto enc = h->encode(six, six, mask, mask);
  EXPECT_EQ(enc.intermediate.data.sizes(), (std::vector<int64_t>{1, 8, 32, 32}));
  EXPECT_EQ(enc.intermediate.scale, Scale::kHalf);
  const auto dec = h->decode({torch::rand({1, 8, 32, 32}), Scale::kHalf}, {});
  EXPECT_EQ(dec.data.sizes(), (std::vector<int64_t>{1, 8, 64, 64}));
  EXPECT_THROW(h->decode({torch::rand({1, 8, 32, 32}), Scale::kFull}, {}), ContractViolation);
  EXPECT_THROW(h->encode({six.data, Scale::kHalf}, six, mask, mask), ContractViolation);

  {
    torch::NoGradGuard no_grad;
    for (auto& p : h->named_parameters()) {
      if (p.key().find("bias") != std::string::npos) p.value().zero_();
    }
  }
  const FeatureMap z6{torch::zeros({1, 6, 16, 16}), Scale::kFull};
  const FeatureMap z1{torch::zeros({1, 1, 16, 16}), Scale::kFull};
  EXPECT_EQ(h->encode(z6, z6, z1, z1).intermediate.data.abs().max().item<float>(), 0.0f);
  EXPECT_EQ(h->decode({torch::zeros({1, 8, 8, 8}), Scale::kHalf}, {}).data.abs().max().item<float>(),
            0.0f);
}

TEST(Hallucination, FullyConvolutional) {
  torch::manual_seed(4);
  HallucinationModule h(lt::small_model(2, 4));
  const auto run = [&](int64_t s) {
    const FeatureMap six{torch::rand({1, 6, s, s}), Scale::kFull};
    const FeatureMap mask{torch::rand({1, 1, s, s}), Scale::kFull};
    return h->encode(six, six, mask, mask).intermediate.data.size(2);
  };
  EXPECT_EQ(run(64), 2 * run(32));
}

TEST(Blend, FusedMinusHallucinatedIsMaskedAligned) {
  torch::manual_seed(5);
  const auto fa = torch::randn({1, 4, 6, 6}, torch::kDouble);
  const auto fh = torch::randn({1, 4, 6, 6}, torch::kDouble);
  const auto m = torch::rand({1, 1, 6, 6}, torch::kDouble);
  EXPECT_LT((blend_with_map(fa, fh, m) - fh - m * fa).abs().max().item<double>(), 1e-6);
  EXPECT_TRUE(torch::equal(blend_with_map(fa, fh, torch::zeros_like(m)), fh));
  EXPECT_TRUE(torch::equal(blend_with_map(fa, fh, torch::ones_like(m)), fh + fa));
  EXPECT_TRUE(torch::equal(blend_with_map(torch::zeros_like(fa), fh, m), fh));
}

TEST(Blend, MapBoundedAndShapeChecked) {
  torch::manual_seed(6);
  AdaptiveBlend b(4);
  const auto r = b(FeatureMap{torch::randn({2, 4, 8, 8}) * 50, Scale::kHalf},
                   FeatureMap{torch::randn({2, 4, 8, 8}) * 50, Scale::kHalf});
  EXPECT_GE(r.map.min().item<float>(), 0.0f);
  EXPECT_LE(r.map.max().item<float>(), 1.0f);
  EXPECT_EQ(r.map.sizes(), (std::vector<int64_t>{2, 1, 8, 8}));
  const FeatureMap big{torch::randn({1, 4, 8, 8}), Scale::kHalf};
  const FeatureMap small{torch::randn({1, 4, 4, 4}), Scale::kHalf};
  EXPECT_THROW(b(big, small), ContractViolation);
}

TEST(ResFFTConv, ZeroWeightsIsIdentity) {
  ResFFTConvBlock blk(4);
  lt::zero_parameters(*blk);
  for (auto shape : {std::vector<int64_t>{1, 4, 8, 8}, {2, 4, 7, 9}}) {
    const auto x = torch::randn(shape);
    const auto y = blk(x);
    EXPECT_EQ(y.sizes(), x.sizes());
    EXPECT_LT((y - x).abs().max().item<float>(), 1e-6f);
  }
}

TEST(ResFFTConv, SpectralRoundTrip) {
  ResFFTConvBlock blk(3, false);
  blk->to(torch::kDouble);
  {
    torch::NoGradGuard no_grad;
    for (auto* conv : {&blk->spectral1(), &blk->spectral2()}) {
      (*conv)->weight.copy_(torch::eye(6, torch::kDouble).view({6, 6, 1, 1}));
      (*conv)->bias.zero_();
    }
  }
  for (auto shape : {std::vector<int64_t>{1, 3, 8, 8}, {1, 3, 5, 7}}) {
    const auto x = torch::randn(shape, torch::kDouble);
    EXPECT_LT((blk->frequency_branch(x) - x).abs().max().item<double>(), 1e-5);
  }
}

TEST(Merge, ShapeRangeAndCount) {
  const auto cfg = lt::small_model(2, 4);
  MergeNetwork m(cfg);
  std::vector<FeatureMap> feats(5, FeatureMap{torch::randn({1, 4, 16, 16}), Scale::kFull});
  const auto out = m(feats);
  EXPECT_EQ(out.sizes(), (std::vector<int64_t>{1, 3, 16, 16}));
  EXPECT_GT(out.min().item<float>(), 0.0f);
  EXPECT_LT(out.max().item<float>(), 1.0f);
  feats.pop_back();
  EXPECT_THROW(m(feats), ContractViolation);
}

TEST(LanHdrNet, ShapesRangeAndOrderSensitivity) {
  torch::manual_seed(7);
  const auto cfg = lt::small_model(2, 4);
  LanHdrNet net(cfg);
  const auto w = lt::synthetic_window(32, 32);
  const auto out = net->forward(w);
  EXPECT_EQ(out.hdr.sizes(), (std::vector<int64_t>{1, 3, 32, 32}));
  EXPECT_GT(out.hdr.min().item<float>(), 0.0f);
  EXPECT_LT(out.hdr.max().item<float>(), 1.0f);
  EXPECT_EQ(out.blend_maps.size(), 5u);
  const auto lan = net->lan_forward(w, 0);
  EXPECT_EQ(lan.features.data.sizes(), (std::vector<int64_t>{1, 4, 32, 32}));

  auto swapped = w;
  std::swap(swapped.frames[1], swapped.frames[3]);
  std::swap(swapped.linear[1], swapped.linear[3]);
  EXPECT_FALSE(torch::equal(net->forward(swapped).hdr, out.hdr));
}

TEST(LanHdrNet, EveryParameterReceivesGradient) {
  torch::manual_seed(8);
  LanHdrNet net(lt::small_model(2, 4));
  const auto w = lt::synthetic_window(32, 32);
  const auto out = net->forward(w);
  lanhdr::l1_loss(out.hdr, w.ground_truth.unsqueeze(0)).backward();
  for (const auto& p : net->named_parameters()) {
    ASSERT_TRUE(p.value().grad().defined()) << p.key();
    EXPECT_GT(p.value().grad().abs().max().item<float>(), 0.0f) << p.key();
  }
}

TEST(LanHdrNet, DeterministicForward) {
  torch::manual_seed(9);
  LanHdrNet net(lt::small_model(3, 4));
  const auto w = lt::synthetic_window(16, 16, 3);
  EXPECT_EQ(w.size(), 7);
  EXPECT_TRUE(torch::equal(net->forward(w).hdr, net->forward(w).hdr));
  const auto five = lt::synthetic_window(16, 16, 2);
  EXPECT_THROW(net->forward(five), ContractViolation);
}

TEST(GradientCheck, GatedConvBlendAndFFTBlock) {
  torch::manual_seed(10);
  GatedConv2d g(3, 3);
  g->to(torch::kDouble);
  AdaptiveBlend b(3);
  b->to(torch::kDouble);
  ResFFTConvBlock r(3);
  r->to(torch::kDouble);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = torch::randn({1, 3, 8, 8}, torch::kDouble).requires_grad_();
    auto y = torch::randn({1, 3, 8, 8}, torch::kDouble).requires_grad_();
    const auto w = torch::randn({1, 3, 8, 8}, torch::kDouble);
    auto leaves = g->parameters();
    leaves.push_back(x);
    EXPECT_LT(lt::directional_gradient_error([&] { return (g(x) * w).sum(); }, leaves), 1e-3);
    leaves = b->parameters();
    leaves.insert(leaves.end(), {x, y});
    EXPECT_LT(lt::directional_gradient_error([&] { return (b->predict_map(x, y) * w.narrow(1, 0, 1)).sum(); },
                                             leaves),
              1e-3);
    leaves = r->parameters();
    leaves.push_back(x);
    EXPECT_LT(lt::directional_gradient_error([&] { return (r(x) * w).sum(); }, leaves), 1e-3);
  }
}
