// tests/model_test.cc

// Copyright 2026  The vocart Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "vocart/errors.h"
#include "vocart/model.h"
#include "vocart/rng.h"

namespace vocart {
namespace {

// Small enough to finite-difference every parameter.
ModelConfig MicroConfig() {
  ModelConfig c;
  c.input_length = 240;
  c.sinc_filters = 3;
  c.sinc_kernel = 9;
  c.block_channels = {3, 4};
  c.blocks_per_group = {1, 2};
  c.gru_hidden = 4;
  c.embedding_dim = 5;
  c.num_vocoder_classes = 3;
  c.seed = 7;
  return c;
}

Batch RandomBatch(size_t n, size_t len, uint64_t seed) {
  Batch b(n, len);
  Rng rng(seed);
  for (double &v : b.data) v = rng.Uniform(-1.0, 1.0);
  return b;
}

Rows RandomRows(size_t r, size_t c, Rng &rng) {
  Rows out(r, c);
  for (double &v : out.data) v = rng.Uniform(-1.0, 1.0);
  return out;
}

// Scalar probe: sum of logits weighted by fixed random coefficients.
double Probe(const ModelOutput &o, const Rows &wb, const Rows &wv) {
  double s = 0.0;
  for (size_t i = 0; i < wb.data.size(); ++i) s += wb.data[i] * o.binary.data[i];
  for (size_t i = 0; i < wv.data.size(); ++i) s += wv.data[i] * o.vocoder.data[i];
  return s;
}

bool GradClose(double analytic, double numeric) {
  const double tol =
      std::max(1e-3 * std::max(std::abs(analytic), std::abs(numeric)), 1e-5);
  return std::abs(analytic - numeric) <= tol;
}

TEST(ModelConfigTest, TinySequenceLength) {
  // (16000 - 129 + 1) / 3 = 5290, then four pools by 3.
  ModelConfig c = ModelConfig::Tiny();
  long t = 5290;
  for (int i = 0; i < 4; ++i) t /= 3;
  EXPECT_EQ(c.SequenceLength(), t);
  EXPECT_EQ(c.sinc_filters, 4);
  EXPECT_EQ(c.block_channels, (std::vector<int>{4, 8}));
  EXPECT_EQ(c.gru_hidden, 16);
  EXPECT_EQ(c.embedding_dim, 16);
  EXPECT_EQ(c.input_length, 16000);
}

TEST(ModelConfigTest, RejectsTwoClasses) {
  ModelConfig c = ModelConfig::Tiny(2);
  EXPECT_THROW(DetectorModel m(c), ArgumentError);
}

TEST(ModelConfigTest, RejectsKernelLongerThanInput) {
  ModelConfig c = MicroConfig();
  c.input_length = 5;
  EXPECT_THROW(DetectorModel m(c), ArgumentError);
}

TEST(ModelInitTest, SameSeedSameParameters) {
  DetectorModel a(MicroConfig()), b(MicroConfig());
  ASSERT_EQ(a.parameters().size(), b.parameters().size());
  for (size_t i = 0; i < a.parameters().size(); ++i) {
    EXPECT_EQ(a.parameters()[i].name, b.parameters()[i].name);
    EXPECT_EQ(a.parameters()[i].value, b.parameters()[i].value);
  }
  ModelConfig c = MicroConfig();
  c.seed = 8;
  DetectorModel d(c);
  EXPECT_NE(a.param("block0.0.conv1.weight").value, d.param("block0.0.conv1.weight").value);
}

TEST(ModelInitTest, SincCenterTapIsTwiceBandwidth) {
  DetectorModel m(ModelConfig::Tiny());
  const Parameter &low = m.param("sinc.low");
  const Parameter &band = m.param("sinc.band");
  for (int f = 0; f < 4; ++f) {
    std::vector<double> h = m.SincFilter(f);
    const double f1 = std::abs(low.value[f]);
    const double f2 = f1 + std::abs(band.value[f]);
    EXPECT_NEAR(h[h.size() / 2], 2.0 * (f2 - f1), 1e-15);
  }
}

TEST(ModelInitTest, SincCutoffsAreMelSpaced) {
  ModelConfig c = ModelConfig::Tiny();
  DetectorModel m(c);
  const Parameter &low = m.param("sinc.low");
  const Parameter &band = m.param("sinc.band");
  const double nyq_mel = 2595.0 * std::log10(1.0 + (c.sample_rate / 2.0) / 700.0);
  auto mel_to_norm = [&](double mel) {
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0) / c.sample_rate;
  };
  for (int f = 0; f < c.sinc_filters; ++f) {
    EXPECT_NEAR(low.value[f], mel_to_norm(nyq_mel * f / c.sinc_filters), 1e-12);
    EXPECT_NEAR(low.value[f] + band.value[f],
                mel_to_norm(nyq_mel * (f + 1) / c.sinc_filters), 1e-12);
  }
  EXPECT_NEAR(low.value[c.sinc_filters - 1] + band.value[c.sinc_filters - 1],
              0.5, 1e-12);
}

TEST(ModelInitTest, SincFilterMatchesWindowedIdealBandPass) {
  ModelConfig c = MicroConfig();
  DetectorModel m(c);
  const double f1 = m.param("sinc.low").value[1];
  const double f2 = f1 + m.param("sinc.band").value[1];
  std::vector<double> h = m.SincFilter(1);
  const int K = c.sinc_kernel, M = K / 2;
  for (int i = 0; i < K; ++i) {
    const int n = i - M;
    // Ideal band-pass impulse response via integration of the passband.
    double ideal = 0.0;
    const int steps = 20000;
    for (int s = 0; s < steps; ++s) {
      const double f = f1 + (f2 - f1) * (s + 0.5) / steps;
      ideal += 2.0 * std::cos(2.0 * std::numbers::pi * f * n) * (f2 - f1) / steps;
    }
    const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (K - 1));
    EXPECT_NEAR(h[i], w * ideal, 1e-8) << "tap " << i;
  }
}

TEST(ModelInitTest, ParameterGroupsByHead) {
  DetectorModel m(MicroConfig());
  size_t b = 0, v = 0, r = 0;
  for (const auto &p : m.parameters()) {
    switch (p.group()) {
      case ParamGroup::kBinaryHead: ++b; break;
      case ParamGroup::kVocoderHead: ++v; break;
      case ParamGroup::kExtractor: ++r; break;
    }
  }
  EXPECT_EQ(b, 2u);
  EXPECT_EQ(v, 2u);
  EXPECT_GT(r, 10u);
  EXPECT_EQ(m.param("binary_head.weight").shape, (std::vector<size_t>{1, 5}));
  EXPECT_EQ(m.param("vocoder_head.weight").shape, (std::vector<size_t>{3, 5}));
}

TEST(ModelForwardTest, OutputShapes) {
  DetectorModel m(ModelConfig::Tiny());
  Batch x = RandomBatch(4, 16000, 1);
  Rows e = m.ExtractFeatures(x);
  EXPECT_EQ(e.rows, 4u);
  EXPECT_EQ(e.cols, 16u);
  ModelOutput o = m.Forward(x);
  EXPECT_EQ(o.binary.rows, 4u);
  EXPECT_EQ(o.binary.cols, 1u);
  EXPECT_EQ(o.vocoder.rows, 4u);
  EXPECT_EQ(o.vocoder.cols, 3u);
  for (double v : o.binary.data) EXPECT_TRUE(std::isfinite(v));
  for (double v : o.vocoder.data) EXPECT_TRUE(std::isfinite(v));
}

TEST(ModelForwardTest, ZeroInputGivesFiniteEmbedding) {
  DetectorModel m(ModelConfig::Tiny());
  Batch x(2, 16000);
  Rows e = m.ExtractFeatures(x);
  for (double v : e.data) EXPECT_TRUE(std::isfinite(v));
  ForwardTape tape;
  ModelOutput o = m.ForwardTrain(x, tape, false);
  for (double v : o.binary.data) EXPECT_TRUE(std::isfinite(v));
}

TEST(ModelForwardTest, WrongLengthIsShapeError) {
  DetectorModel m(ModelConfig::Tiny());
  EXPECT_THROW(m.ExtractFeatures(RandomBatch(2, 15999, 1)), ShapeError);
}

TEST(ModelForwardTest, NanInputIsArgumentError) {
  DetectorModel m(MicroConfig());
  Batch x = RandomBatch(2, 240, 1);
  x.data[17] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(m.ExtractFeatures(x), ArgumentError);
}

TEST(ModelForwardTest, HeadShapeMismatchIsShapeError) {
  DetectorModel m(MicroConfig());
  EXPECT_THROW(m.BinaryLogits(Rows(2, 4)), ShapeError);
  EXPECT_THROW(m.VocoderLogits(Rows(2, 6)), ShapeError);
}

TEST(ModelForwardTest, BatchIndependenceInEvalMode) {
  DetectorModel m(ModelConfig::Tiny());
  Batch x = RandomBatch(8, 16000, 3);
  Rows all = m.ExtractFeatures(x);
  Batch one(1, 16000);
  std::copy(x.row(5).begin(), x.row(5).end(), one.data.begin());
  Rows single = m.ExtractFeatures(one);
  for (size_t k = 0; k < all.cols; ++k)
    EXPECT_NEAR(single.at(0, k), all.at(5, k), 1e-5);
}

TEST(ModelForwardTest, PermutationEquivariance) {
  DetectorModel m(MicroConfig());
  Batch x = RandomBatch(4, 240, 9);
  const std::vector<size_t> perm = {2, 0, 3, 1};
  Batch px(4, 240);
  for (size_t i = 0; i < 4; ++i)
    std::copy(x.row(perm[i]).begin(), x.row(perm[i]).end(), px.row(i).begin());
  ModelOutput a = m.Forward(x), b = m.Forward(px);
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(b.binary.at(i, 0), a.binary.at(perm[i], 0));
    for (size_t c = 0; c < 3; ++c)
      EXPECT_EQ(b.vocoder.at(i, c), a.vocoder.at(perm[i], c));
  }
}

TEST(ModelForwardTest, ForwardIsCompositionAndRepeatable) {
  DetectorModel m(ModelConfig::Tiny());
  Batch x = RandomBatch(3, 16000, 4);
  ModelOutput o1 = m.Forward(x), o2 = m.Forward(x);
  EXPECT_EQ(o1.binary.data, o2.binary.data);
  EXPECT_EQ(o1.vocoder.data, o2.vocoder.data);
  Rows e = m.ExtractFeatures(x);
  Rows b = m.BinaryLogits(e), v = m.VocoderLogits(e);
  for (size_t i = 0; i < b.data.size(); ++i)
    EXPECT_NEAR(o1.binary.data[i], b.data[i], 1e-6);
  for (size_t i = 0; i < v.data.size(); ++i)
    EXPECT_NEAR(o1.vocoder.data[i], v.data[i], 1e-6);
}

TEST(ModelHeadTest, ZeroHeadsGiveHalfAndUniform) {
  DetectorModel m(MicroConfig());
  for (const char *n : {"binary_head.weight", "binary_head.bias",
                        "vocoder_head.weight", "vocoder_head.bias"})
    std::fill(m.param(n).value.begin(), m.param(n).value.end(), 0.0);
  Rows e = m.ExtractFeatures(RandomBatch(2, 240, 5));
  Rows b = m.BinaryLogits(e);
  EXPECT_EQ(b.at(0, 0), 0.0);
  EXPECT_EQ(Sigmoid(b.at(1, 0)), 0.5);
  Rows p = Softmax(m.VocoderLogits(e));
  for (double v : p.data) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(ModelHeadTest, LogitMovesAlongWeightByNormSquared) {
  DetectorModel m(MicroConfig());
  Rng rng(11);
  Rows e = RandomRows(1, 5, rng);
  const std::vector<double> &w = m.param("binary_head.weight").value;
  double norm2 = 0.0;
  for (double v : w) norm2 += v * v;
  const double delta = 0.37;
  Rows moved = e;
  for (size_t k = 0; k < 5; ++k) moved.at(0, k) += delta * w[k];
  EXPECT_NEAR(m.BinaryLogits(moved).at(0, 0) - m.BinaryLogits(e).at(0, 0),
              delta * norm2, 1e-12);
}

TEST(ModelHeadTest, SoftmaxRowsSumToOne) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    Rows l = RandomRows(4, 7, rng);
    for (double &v : l.data) v *= 50.0;
    Rows p = Softmax(l);
    for (size_t r = 0; r < 4; ++r) {
      double s = 0.0;
      for (double v : p.row(r)) s += v;
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(ModelHeadTest, SigmoidIsStableAtExtremes) {
  EXPECT_EQ(Sigmoid(0.0), 0.5);
  EXPECT_EQ(Sigmoid(1000.0), 1.0);
  EXPECT_EQ(Sigmoid(-1000.0), 0.0);
  EXPECT_NEAR(Sigmoid(2.0), 1.0 / (1.0 + std::exp(-2.0)), 1e-16);
}

TEST(ModelGradientTest, EveryParameterMatchesFiniteDifference) {
  DetectorModel m(MicroConfig());
  Batch x = RandomBatch(3, 240, 21);
  Rng rng(22);
  Rows wb = RandomRows(3, 1, rng), wv = RandomRows(3, 3, rng);

  ForwardTape tape;
  m.ZeroGrad();
  m.ForwardTrain(x, tape, false);
  m.Backward(tape, wb, wv);

  const double h = 1e-6;
  int checked = 0, failed = 0;
  for (auto &p : m.parameters()) {
    for (size_t i = 0; i < p.size(); ++i) {
      const double orig = p.value[i];
      ForwardTape t;
      p.value[i] = orig + h;
      const double up = Probe(m.ForwardTrain(x, t, false), wb, wv);
      p.value[i] = orig - h;
      const double dn = Probe(m.ForwardTrain(x, t, false), wb, wv);
      p.value[i] = orig;
      const double numeric = (up - dn) / (2 * h);
      ++checked;
      if (!GradClose(p.grad[i], numeric)) {
        ++failed;
        ADD_FAILURE() << p.name << "[" << i << "] analytic " << p.grad[i]
                      << " numeric " << numeric;
      }
    }
  }
  EXPECT_EQ(failed, 0);
  EXPECT_EQ(static_cast<size_t>(checked), m.NumParameters());
}

TEST(ModelGradientTest, HeadsAreSeparated) {
  DetectorModel m(MicroConfig());
  Batch x = RandomBatch(2, 240, 31);
  Rng rng(32);
  Rows wb = RandomRows(2, 1, rng), wv = RandomRows(2, 3, rng);
  ForwardTape tape;
  m.ForwardTrain(x, tape, false);

  m.ZeroGrad();
  m.Backward(tape, wb, Rows(2, 3));
  for (const auto &p : m.parameters())
    if (p.group() == ParamGroup::kVocoderHead) {
      for (double g : p.grad) EXPECT_EQ(g, 0.0) << p.name;
    }

  m.ZeroGrad();
  m.Backward(tape, Rows(2, 1), wv);
  for (const auto &p : m.parameters())
    if (p.group() == ParamGroup::kBinaryHead) {
      for (double g : p.grad) EXPECT_EQ(g, 0.0) << p.name;
    }
}

TEST(ModelGradientTest, BothHeadsReachTheExtractor) {
  DetectorModel m(MicroConfig());
  Batch x = RandomBatch(2, 240, 41);
  Rng rng(42);
  Rows wb = RandomRows(2, 1, rng), wv = RandomRows(2, 3, rng);
  ForwardTape tape;
  m.ForwardTrain(x, tape, false);
  auto extractor_grad = [&](const Rows &db, const Rows &dv) {
    m.ZeroGrad();
    m.Backward(tape, db, dv);
    return m.param("embed.weight").grad;
  };
  const auto both = extractor_grad(wb, wv);
  EXPECT_NE(both, extractor_grad(wb, Rows(2, 3)));
  EXPECT_NE(both, extractor_grad(Rows(2, 1), wv));
}

TEST(ModelGradientTest, EmptyVocoderGradientSkipsHead) {
  DetectorModel m(MicroConfig());
  Batch x = RandomBatch(2, 240, 51);
  Rng rng(52);
  Rows wb = RandomRows(2, 1, rng);
  ForwardTape tape;
  m.ForwardTrain(x, tape, false);
  m.ZeroGrad();
  m.Backward(tape, wb, Rows(2, 3));
  std::vector<std::vector<double>> zeros;
  for (const auto &p : m.parameters()) zeros.push_back(p.grad);
  m.ZeroGrad();
  m.Backward(tape, wb, Rows());
  for (size_t i = 0; i < zeros.size(); ++i)
    EXPECT_EQ(m.parameters()[i].grad, zeros[i]) << m.parameters()[i].name;
}

TEST(ModelTrainModeTest, RunningStatsMoveOnlyWhenAsked) {
  DetectorModel m(MicroConfig());
  Batch x = RandomBatch(2, 240, 61);
  const auto before = m.buffers();
  ForwardTape tape;
  m.ForwardTrain(x, tape, false);
  for (size_t i = 0; i < before.size(); ++i)
    EXPECT_EQ(m.buffers()[i].value, before[i].value);
  m.ForwardTrain(x, tape, true);
  bool moved = false;
  for (size_t i = 0; i < before.size(); ++i)
    moved |= m.buffers()[i].value != before[i].value;
  EXPECT_TRUE(moved);
}

TEST(ModelCopyTest, CopyIsIndependent) {
  DetectorModel a(MicroConfig());
  DetectorModel b = a;
  Batch x = RandomBatch(2, 240, 71);
  EXPECT_EQ(a.Forward(x).binary.data, b.Forward(x).binary.data);
  b.param("binary_head.bias").value[0] += 1.0;
  EXPECT_NE(a.Forward(x).binary.data, b.Forward(x).binary.data);
}

}  // namespace
}  // namespace vocart
