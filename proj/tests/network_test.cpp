#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

#include "cine/fft.hpp"
#include "cine/network.hpp"
#include "model_gradient.hpp"
#include "oracles.hpp"

using cine::Graph;
using cine::ModelConfig;
using cine::ModelMode;
using cine::ModelParams;
using cine::NodeId;
using cine::ReconBlock;
using cine::Tensor;

namespace {

ModelConfig tiny_config(ModelMode mode, ReconBlock block, std::size_t nc) {
  ModelConfig c;
  c.mode = mode;
  c.block = block;
  c.iterations = 2;
  c.width = 3;
  c.depth = 2;
  c.cascades = 2;
  c.cascade_depth = 2;
  c.nc = nc;
  return c;
}

template <typename T>
void randomize(ModelParams<T>& p, std::uint64_t seed, double scale = 0.3) {
  std::uint64_t k = seed;
  cine::for_each_parameter<T>(p, [&](const std::string&, Tensor<T>& t) {
    t = oracle::random_tensor(t.shape(), ++k, -scale, scale).template cast<T>();
  });
}

struct Frame {
  cine::MultiCoilKSpace kspace;
  cine::SamplingMask mask;
  cine::CoilSensitivities csm;
};

Frame random_frame(std::size_t nc, std::size_t n, std::uint64_t seed) {
  const auto mask = cine::make_gaussian_random_mask(4, n, 1, 2, seed);
  const auto csm = cine::simulate_coil_sensitivities(n, n, nc, seed);
  return {cine::apply_mask(oracle::random_complex({nc, 1, n, n}, seed), mask), mask, csm};
}

std::size_t conv_params(std::size_t in, std::size_t out, std::size_t width, std::size_t depth, std::size_t k) {
  std::size_t n = 0;
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t ci = l == 0 ? in : width;
    const std::size_t co = l + 1 == depth ? out : width;
    n += co * ci * k * k + co;
  }
  return n;
}

Tensor<double> run_net(const Tensor<double>& x, const cine::ConvNet<double>& net) {
  Tensor<double> y = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    y = oracle::conv2d(y, net.layers[l].weight, net.layers[l].bias);
    if (l + 1 < net.layers.size()) y = oracle::relu(y);
  }
  return y;
}

}  // namespace

TEST(ModelConfig, KeyValueRoundTripAndValidation) {
  ModelConfig c = tiny_config(ModelMode::SingleChannel, ReconBlock::D5C5, 3);
  c.dc_lambda = 2.5;
  EXPECT_EQ(ModelConfig::from_key_values(c.to_key_values()), c);
  c.dc_lambda = std::numeric_limits<double>::infinity();
  EXPECT_EQ(c.to_key_values().get("model.dc_lambda"), "inf");
  EXPECT_EQ(ModelConfig::from_key_values(c.to_key_values()), c);

  ModelConfig bad;
  bad.kernel = 4;
  EXPECT_THROW(bad.validate(), cine::ConfigError);
  bad = ModelConfig{};
  bad.dc_lambda = 0;
  EXPECT_THROW(bad.validate(), cine::ConfigError);
  EXPECT_THROW(cine::parse_model_mode("dual"), cine::ConfigError);
  EXPECT_THROW(cine::parse_recon_block("admm2"), cine::ConfigError);
}

TEST(ParameterCount, ReferenceModelSize) {
  ModelConfig c;  // admm3, N = 8, width 16, depth 3, 3x3 kernels
  c.nc = 4;
  EXPECT_EQ(cine::parameter_count(cine::zero_model<float>(c)), 311202u);
}

TEST(ParameterCount, MatchesClosedFormAcrossShapes) {
  for (auto mode : {ModelMode::Multichannel, ModelMode::SingleChannel}) {
    for (auto block : {ReconBlock::Admm3, ReconBlock::D5C5}) {
      for (std::size_t nc : {1u, 3u}) {
        ModelConfig c = tiny_config(mode, block, nc);
        c.width = 5;
        c.depth = 3;
        c.kernel = 5;
        const std::size_t w = c.width, d = c.depth, k = c.kernel;
        const std::size_t per_stack =
            block == ReconBlock::Admm3
                ? c.iterations * (conv_params(4, 2, w, d, k) + conv_params(6, 2, w, d, k) + conv_params(2, 2, w, d, k) + 1)
                : c.cascades * conv_params(2, 2, w, c.cascade_depth, k);
        const std::size_t expected = mode == ModelMode::Multichannel
                                         ? nc * per_stack + conv_params(2 * nc, 2, w, d, k)
                                         : per_stack;
        EXPECT_EQ(cine::parameter_count(cine::zero_model<double>(c)), expected);
      }
    }
  }
}

TEST(ParameterNames, AreUniqueAndFollowTheLayout) {
  const auto p = cine::zero_model<float>(tiny_config(ModelMode::Multichannel, ReconBlock::Admm3, 2));
  std::vector<std::string> names;
  cine::for_each_parameter<float>(p, [&](const std::string& n, const Tensor<float>&) { names.push_back(n); });
  EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), names.size());
  EXPECT_EQ(names.front(), "coil0/block0/gamma/conv0.w");
  EXPECT_NE(std::find(names.begin(), names.end(), "coil1/block1/eta/scale.w"), names.end());
  EXPECT_EQ(names.back(), "combine/block0/net/conv1.b");

  const auto s = cine::zero_model<float>(tiny_config(ModelMode::SingleChannel, ReconBlock::D5C5, 2));
  std::vector<std::string> single;
  cine::for_each_parameter<float>(s, [&](const std::string& n, const Tensor<float>&) { single.push_back(n); });
  EXPECT_EQ(single.front(), "single/cascade0/cnn/conv0.w");
  for (const auto& n : single) EXPECT_EQ(n.find("combine"), std::string::npos);
}

TEST(AdmmBlock, MatchesStraightLineOracle) {
  const std::size_t n = 8;
  auto p = cine::zero_model<double>(tiny_config(ModelMode::SingleChannel, ReconBlock::Admm3, 1));
  randomize(p, 1);
  const auto& block = p.stacks[0].blocks[0];
  const auto mask_plane = cine::make_gaussian_random_mask(2, n, 1, 2, 3).plane<double>(0, n);
  const auto mask = std::make_shared<const Tensor<double>>(mask_plane);
  const auto m = oracle::apply_plane(oracle::random_tensor({2, n, n}, 4), mask_plane);
  const auto d = oracle::random_tensor({2, n, n}, 5);
  const auto z = oracle::random_tensor({2, n, n}, 6);
  const auto beta = oracle::random_tensor({2, n, n}, 7);

  const auto ed = oracle::apply_plane(oracle::dft2_channels(d), mask_plane);
  const auto alpha = run_net(oracle::concat({ed, m}), block.gamma);
  const auto eh_alpha = oracle::dft2_channels(oracle::apply_plane(alpha, mask_plane), true);
  const auto d1 = run_net(oracle::concat({d, oracle::sub(z, beta), eh_alpha}), block.pi);
  const auto z1 = run_net(oracle::add(d1, beta), block.lambda);
  Tensor<double> beta1 = beta;
  for (std::size_t i = 0; i < beta1.size(); ++i) beta1[i] += block.eta[0] * (d1[i] - z1[i]);

  Graph<double> g;
  const cine::AdmmState<double> s0{g.constant(d), g.constant(z), g.constant(beta)};
  const auto s1 = cine::admm_block_forward(g, s0, g.constant(m), mask, block);
  EXPECT_LT(oracle::max_abs_diff(g.value(s1.d), d1), 1e-12);
  EXPECT_LT(oracle::max_abs_diff(g.value(s1.z), z1), 1e-12);
  EXPECT_LT(oracle::max_abs_diff(g.value(s1.beta), beta1), 1e-12);
}

TEST(ZeroModel, SingleChannelReducesToZeroFilledCombinedImage) {
  for (auto block : {ReconBlock::Admm3, ReconBlock::D5C5}) {
    const auto f = random_frame(3, 8, 8);
    const auto cfg = tiny_config(ModelMode::SingleChannel, block, 3);
    const auto input = cine::make_model_input<double>(f.kspace, 0, f.mask, cfg, &f.csm);
    const auto out = cine::reconstruct(cine::zero_model<double>(cfg), input);
    // Oracle: combine coil images, re-mask the combined k-space, inverse transform.
    const auto coils = cine::ifft2(cine::ComplexTensor<double>(f.kspace.real.reshaped({3, 8, 8}),
                                                               f.kspace.imag.reshaped({3, 8, 8})));
    const auto combined = cine::combine_coils(coils, f.csm);
    const auto k = oracle::apply_plane(oracle::as_channels(oracle::dft2(combined)), f.mask.plane<double>(0, 8));
    const auto expected = oracle::dft2(oracle::as_complex(k), true);
    EXPECT_LT(oracle::max_abs_diff(out, expected), 1e-12) << cine::to_string(block);
  }
}

TEST(ZeroModel, MultichannelStacksReturnPerCoilZeroFilledImages) {
  const auto f = random_frame(2, 8, 9);
  const auto cfg = tiny_config(ModelMode::Multichannel, ReconBlock::Admm3, 2);
  const auto input = cine::make_model_input<double>(f.kspace, 0, f.mask, cfg, nullptr);
  Graph<double> g;
  std::vector<cine::CoilOutput<double>> coils;
  const NodeId out = cine::model_forward(g, input, cine::zero_model<double>(cfg), &coils);
  ASSERT_EQ(coils.size(), 2u);
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_LT(oracle::max_abs_diff(g.value(coils[c].image), oracle::dft2_channels(input.kspace[c], true)), 1e-12);
  }
  for (double v : g.value(out).values()) EXPECT_EQ(v, 0.0);
}

TEST(DataConsistency, SampledKSpaceEqualsMeasurementBitwise) {
  for (auto block : {ReconBlock::Admm3, ReconBlock::D5C5}) {
    const auto f = random_frame(2, 8, 10);
    const auto cfg = tiny_config(ModelMode::Multichannel, block, 2);
    auto p = cine::zero_model<float>(cfg);
    randomize(p, 11);
    const auto input = cine::make_model_input<float>(f.kspace, 0, f.mask, cfg, nullptr);
    Graph<float> g;
    std::vector<cine::CoilOutput<float>> coils;
    cine::model_forward(g, input, p, &coils);
    std::size_t sampled = 0;
    for (std::size_t c = 0; c < 2; ++c) {
      const auto& k = g.value(coils[c].kspace);
      for (std::size_t i = 0; i < k.size(); ++i) {
        if ((*input.mask)[i % 64] == 0.0f) continue;
        EXPECT_EQ(k[i], input.kspace[c][i]);
        ++sampled;
      }
    }
    EXPECT_GT(sampled, 0u);
  }
}

TEST(DataConsistency, FiniteLambdaBlendsPredictionAndMeasurement) {
  const std::size_t n = 4;
  const auto plane = cine::make_uniform_interleaved_mask(2, n, 1, 0).plane<double>(0, n);
  const auto mask = std::make_shared<const Tensor<double>>(plane);
  const auto pred = oracle::random_tensor({2, n, n}, 12);
  const auto meas = oracle::apply_plane(oracle::random_tensor({2, n, n}, 13), plane);
  Graph<double> g;
  const auto& out = g.value(cine::dc_layer(g, g.constant(pred), g.constant(meas), mask, 3.0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double expected = plane[i % (n * n)] == 1.0 ? (pred[i] + 3.0 * meas[i]) / 4.0 : pred[i];
    EXPECT_NEAR(out[i], expected, 1e-15);
  }
}

TEST(Multichannel, PermutingCoilsWithTheirStacksLeavesOutputUnchanged) {
  const std::size_t nc = 3;
  const auto f = random_frame(nc, 8, 14);
  const auto cfg = tiny_config(ModelMode::Multichannel, ReconBlock::Admm3, nc);
  auto p = cine::zero_model<double>(cfg);
  randomize(p, 15);
  const std::size_t perm[nc] = {2, 0, 1};

  auto input = cine::make_model_input<double>(f.kspace, 0, f.mask, cfg, nullptr);
  auto permuted_input = input;
  auto q = p;
  for (std::size_t s = 0; s < nc; ++s) {
    permuted_input.kspace[s] = input.kspace[perm[s]];
    q.stacks[s] = p.stacks[perm[s]];
  }
  // The first combine layer sees channels (re, im) per stack; move its input channels the same way.
  auto& w = q.combine.layers[0].weight;
  const auto& w0 = p.combine.layers[0].weight;
  for (std::size_t o = 0; o < w.dim(0); ++o) {
    for (std::size_t s = 0; s < nc; ++s) {
      for (std::size_t part = 0; part < 2; ++part) {
        for (std::size_t i = 0; i < 9; ++i) {
          w[((o * 2 * nc) + 2 * s + part) * 9 + i] = w0[((o * 2 * nc) + 2 * perm[s] + part) * 9 + i];
        }
      }
    }
  }
  EXPECT_LT(oracle::max_abs_diff(cine::reconstruct(p, input), cine::reconstruct(q, permuted_input)), 1e-12);
}

TEST(ModelInput, RejectsCoilCountMismatchAndMissingMaps) {
  const auto f = random_frame(2, 8, 16);
  EXPECT_THROW(cine::make_model_input<float>(f.kspace, 0, f.mask,
                                             tiny_config(ModelMode::Multichannel, ReconBlock::Admm3, 3), nullptr),
               cine::ConfigError);
  EXPECT_THROW(cine::make_model_input<float>(f.kspace, 0, f.mask,
                                             tiny_config(ModelMode::SingleChannel, ReconBlock::Admm3, 2), nullptr),
               cine::ConfigError);
  EXPECT_THROW(cine::make_model_input<float>(f.kspace, 1, f.mask,
                                             tiny_config(ModelMode::Multichannel, ReconBlock::Admm3, 2), nullptr),
               cine::DimensionError);
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  const auto dir = std::filesystem::path(testing::TempDir()) / "cine_network_ckpt";
  std::filesystem::remove_all(dir);
  auto p = cine::zero_model<float>(tiny_config(ModelMode::Multichannel, ReconBlock::Admm3, 2));
  randomize(p, 17);
  cine::KeyValues extra;
  extra.set("train.best_epoch", "3");
  cine::save_parameters(dir, p, extra);
  const auto back = cine::load_parameters<float>(dir);
  EXPECT_EQ(back.config, p.config);
  std::vector<Tensor<float>> a, b;
  cine::for_each_parameter<float>(p, [&](const std::string&, const Tensor<float>& t) { a.push_back(t); });
  cine::for_each_parameter<float>(back, [&](const std::string&, const Tensor<float>& t) { b.push_back(t); });
  EXPECT_EQ(a, b);
  const auto manifest = cine::read_key_values(dir / "manifest.txt");
  EXPECT_EQ(manifest.get("train.best_epoch"), "3");
  EXPECT_EQ(manifest.get("parameters"), std::to_string(cine::parameter_count(p)));
  EXPECT_TRUE(std::filesystem::exists(dir / "coil1/block0/eta/scale.w.tns"));
}

TEST(Checkpoint, ShapeMismatchAndMissingManifestAreIoErrors) {
  const auto dir = std::filesystem::path(testing::TempDir()) / "cine_network_ckpt_bad";
  std::filesystem::remove_all(dir);
  const auto p = cine::zero_model<double>(tiny_config(ModelMode::SingleChannel, ReconBlock::Admm3, 1));
  cine::save_parameters(dir, p);
  cine::write_tns(dir / "single/block0/pi/conv0.w.tns", Tensor<double>({3, 6, 3, 1}));
  EXPECT_THROW(cine::load_parameters<double>(dir), cine::IoError);
  EXPECT_THROW(cine::load_parameters<double>(dir / "nothing"), cine::IoError);
}

TEST(CastModel, DoubleFloatDoublePreservesFloatValues) {
  auto p = cine::zero_model<float>(tiny_config(ModelMode::Multichannel, ReconBlock::D5C5, 2));
  randomize(p, 18);
  const auto back = cine::cast_model<float>(cine::cast_model<double>(p));
  std::vector<Tensor<float>> a, b;
  cine::for_each_parameter<float>(p, [&](const std::string&, const Tensor<float>& t) { a.push_back(t); });
  cine::for_each_parameter<float>(back, [&](const std::string&, const Tensor<float>& t) { b.push_back(t); });
  EXPECT_EQ(a, b);
}

TEST(ModelGradient, TinyMultichannelModelMatchesFiniteDifferences) {
  const auto r = oracle::tiny_model_gradient_check(19);
  EXPECT_GT(r.checked, r.tensors * 3);
  EXPECT_LT(r.worst, 1e-4) << r.worst_name;
}
