#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "model_fixtures.hpp"
#include "tspulse/adapt.hpp"
#include "tspulse/error.hpp"
#include "tspulse/rng.hpp"

using namespace tspulse;
using tsptest::random_batch;
using tsptest::toy_config;

namespace {

// Two classes: sines and squares with random frequency, phase, amplitude.
LabeledSet sine_vs_square(std::size_t n, std::size_t len, std::size_t C, std::uint64_t seed) {
  Rng rng(seed);
  LabeledSet d;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % 2;
    Series s(len, C);
    for (std::size_t c = 0; c < C; ++c) {
      const double f = uniform(rng, 2.0, 5.0), ph = uniform(rng, 0.0, 6.28), a = uniform(rng, 0.5, 2.0);
      for (std::size_t t = 0; t < len; ++t) {
        const double v = std::sin(2.0 * std::numbers::pi * f * double(t) / double(len) + ph);
        s.at(t, c) = a * (label == 0 ? v : (v >= 0 ? 1.0 : -1.0)) + 0.05 * normal(rng);
      }
    }
    d.series.push_back(std::move(s));
    d.labels.push_back(label);
  }
  return d;
}

}  // namespace

TEST(ChannelMixers, IdentityInitKeepsOutputs) {
  ModelConfig cfg = toy_config();
  Model m = init_model(cfg, 2);
  Model mixed = m;
  insert_channel_mixers(mixed, 3);
  EXPECT_EQ(mixed.mixer_channels, 3u);
  EXPECT_NO_THROW(check_params(mixed));
  for (std::uint64_t s = 0; s < 5; ++s) {
    Batch b = random_batch(cfg, 2, 3, 100 + s);
    Inference a = infer(m, b), c = infer(mixed, b);
    EXPECT_LT(max_abs_diff(a.y, c.y), 1e-12);
    EXPECT_LT(max_abs_diff(a.reg_e, c.reg_e), 1e-12);
    EXPECT_LT(max_abs_diff(a.pred, c.pred), 1e-12);
  }
}

TEST(ChannelMixers, SingleChannelIsInert) {
  ModelConfig cfg = toy_config();
  Model m = init_model(cfg, 2), mixed = m;
  insert_channel_mixers(mixed, 1);
  EXPECT_EQ(mixed.params.at("decoder.0.chan.w").shape(), (Shape{1, 1}));
  Batch b = random_batch(cfg, 3, 1, 5);
  EXPECT_LT(max_abs_diff(infer(m, b).y, infer(mixed, b).y), 1e-12);
}

TEST(ChannelMixers, ChannelMismatchAndNoDecoder) {
  Model m = init_model(toy_config(), 2);
  insert_channel_mixers(m, 3);
  EXPECT_THROW(infer(m, random_batch(m.cfg, 1, 2, 1)), ConfigError);
  EXPECT_THROW(insert_channel_mixers(m, 3), ConfigError);
  Model bare = init_model(toy_config(64, 1, 0), 2);
  EXPECT_THROW(insert_channel_mixers(bare, 2), ConfigError);
}

TEST(ChannelMixers, TrainStepMovesOutputs) {
  ModelConfig cfg = toy_config();
  Model m = init_model(cfg, 2);
  insert_channel_mixers(m, 2);
  Batch b = random_batch(cfg, 2, 1, 9);
  // Two strongly correlated channels.
  Tensor x(Shape{2, 2, cfg.context});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t t = 0; t < cfg.context; ++t) {
      x[(i * 2 + 0) * cfg.context + t] = b.x[i * cfg.context + t];
      x[(i * 2 + 1) * cfg.context + t] = 0.9 * b.x[i * cfg.context + t] + 0.1;
    }
  b.x = x;
  b.future = Tensor();
  const Tensor before = infer(m, b).y;
  Tape t(true, 1);
  Bound p(t, m.params, [](const std::string& n) { return n.find(".chan.") != std::string::npos; });
  ForwardResult r = forward(p, cfg, b);
  t.backward(ad::mse(r.out.y, t.constant(b.x)));
  ParamMap g = p.grads();
  ASSERT_EQ(g.size(), 2u);
  AdamState st;
  st.lr = 1e-2;
  adam_step(m.params, g, st);
  EXPECT_GT(max_abs_diff(before, infer(m, b).y), 1e-6);
}

TEST(ExpandChannels, FactorOneAndTwo) {
  Series x(4, 3);
  for (std::size_t i = 0; i < x.values.size(); ++i) x.values[i] = double(i);
  EXPECT_EQ(expand_channels(x, 1).values, x.values);
  Series y = expand_channels(x, 2);
  ASSERT_EQ(y.channels, 6u);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(y.at(t, c), x.at(t, c));
      EXPECT_EQ(y.at(t, c + 3), x.at(t, c));
    }
  EXPECT_THROW(expand_channels(x, 0), ArgumentError);
}

TEST(Interpolate, IdentityRampAndLimits) {
  Series ramp(144, 1);
  for (std::size_t t = 0; t < 144; ++t) ramp.at(t, 0) = double(t);
  EXPECT_EQ(interpolate_length(ramp, 144).values, ramp.values);
  Series up = interpolate_length(ramp, 512);
  ASSERT_EQ(up.length, 512u);
  EXPECT_EQ(up.at(0, 0), 0.0);
  EXPECT_EQ(up.at(511, 0), 143.0);
  double dev = 0.0;
  for (std::size_t t = 0; t < 512; ++t) dev = std::max(dev, std::abs(up.at(t, 0) - 143.0 * double(t) / 511.0));
  EXPECT_LT(dev, 1e-9);

  Series racket(30, 6);
  for (auto& v : racket.values) v = 1.5;
  Series r = interpolate_length(racket, 512);
  EXPECT_EQ(r.length, 512u);
  EXPECT_EQ(r.channels, 6u);
  EXPECT_THROW(interpolate_length(Series(20, 1), 512), CapabilityError);
  EXPECT_THROW(interpolate_length(Series(512 * 21, 1), 512), CapabilityError);
}

TEST(TsLens, FlattenWidthAndBiasOnly) {
  ModelConfig cfg;  // defaults: K = 136
  ClassifierHead h = init_head(cfg, HeadKind::tslens, 3, 1, 4, 1);
  EXPECT_EQ(h.flatten_dim(cfg), 408u);
  EXPECT_EQ(h.params.at("head.out.w").shape(), (Shape{408, 4}));

  ModelConfig small = toy_config();
  ClassifierHead z = init_head(small, HeadKind::tslens, 2, 2, 3, 1);
  z.params.at("head.proj.w") = Tensor(Shape{small.d_model, 2}, 0.0);
  z.params.at("head.proj.b") = Tensor(Shape{2}, 0.0);
  Tape t(false, 0, false);
  Bound hp(t, z.params);
  Var e = t.constant(tsptest::random_tensor({2, 2, small.tokens(), small.d_model}, 4));
  Var logits = head_logits(hp, small, z, e);
  ASSERT_EQ(logits.shape(), (Shape{2, 3}));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(logits.value()[i * 3 + k], z.params.at("head.out.b")[k]);
  Var wrong = t.constant(Tensor(Shape{1, 3, small.tokens(), small.d_model}));
  EXPECT_THROW(head_logits(hp, small, z, wrong), ConfigError);
}

TEST(TsLens, EveryViewReachesLogits) {
  ModelConfig cfg = toy_config();
  ClassifierHead h = init_head(cfg, HeadKind::tslens, 1, 1, 2, 3);
  Tape t(false, 0, false);
  Bound hp(t, h.params);
  Tensor e = tsptest::random_tensor({1, 1, cfg.tokens(), cfg.d_model}, 5);
  const Tensor base = head_logits(hp, cfg, h, t.constant(e)).value();
  const std::size_t N = cfg.patches();
  const std::pair<std::size_t, std::size_t> views[] = {{0, N}, {N, 2 * N}, {2 * N, cfg.tokens()}};
  for (const auto& [lo, hi] : views) {
    Tensor z = e;
    for (std::size_t k = lo; k < hi; ++k)
      for (std::size_t d = 0; d < cfg.d_model; ++d) z[k * cfg.d_model + d] = 0.0;
    EXPECT_GT(max_abs_diff(base, head_logits(hp, cfg, h, t.constant(z)).value()), 1e-9) << lo;
  }
}

TEST(Split, StratifiedTenPercent) {
  LabeledSet d = sine_vs_square(40, 16, 1, 1);
  auto [tr, va] = stratified_split(d, 0.1, 7);
  EXPECT_EQ(tr.size() + va.size(), 40u);
  EXPECT_EQ(va.size(), 4u);
  std::size_t ones = 0;
  for (auto l : va.labels) ones += l;
  EXPECT_EQ(ones, 2u);
  auto [tr2, va2] = stratified_split(d, 0.1, 7);
  EXPECT_EQ(va2.labels, va.labels);
  EXPECT_EQ(va2.series[0].values, va.series[0].values);
}

TEST(Finetune, SineVersusSquare) {
  ModelConfig cfg = toy_config();
  Model m = init_model(cfg, 11);
  LabeledSet train = sine_vs_square(400, 64, 1, 2), test = sine_vs_square(40, 64, 1, 3);
  FinetuneConfig fc;
  fc.epochs = 20;
  fc.batch_size = 8;
  fc.lr = 3e-3;
  fc.seed = 1;
  FinetuneResult r = finetune_classifier(train, m, fc);
  EXPECT_LE(r.history.size(), 20u);
  const double acc = accuracy(r.classifier, test);
  std::cout << "tslens accuracy " << acc << " after " << r.history.size() << " epochs\n";
  EXPECT_GE(acc, 0.95);
  // Backbone frozen.
  for (const auto& [n, t] : m.params)
    if (n.rfind("decoder.", 0) != 0) EXPECT_TRUE(tsptest::same(t, r.classifier.model.params.at(n))) << n;
}

TEST(Finetune, AblationArmsRun) {
  ModelConfig cfg = toy_config();
  Model m = init_model(cfg, 11);
  LabeledSet train = sine_vs_square(40, 48, 2, 4), test = sine_vs_square(20, 48, 2, 5);
  FinetuneConfig fc;
  fc.epochs = 4;
  fc.batch_size = 8;
  fc.seed = 2;
  for (HeadKind kind : {HeadKind::tslens, HeadKind::avg_pool})
    for (std::size_t expand : {1u, 2u}) {
      fc.head = kind;
      fc.channel_expansion = expand;
      fc.mask_ratio = expand == 1 ? std::optional<double>(0.3) : std::nullopt;
      FinetuneResult r = finetune_classifier(train, m, fc);
      const double acc = accuracy(r.classifier, test);
      std::cout << (kind == HeadKind::tslens ? "tslens" : "avg-pool") << " expansion " << expand
                << " accuracy " << acc << "\n";
      EXPECT_GE(acc, 0.0);
      EXPECT_EQ(r.classifier.model.mixer_channels, 2 * expand);
    }
  fc.activation = HeadActivation::sigmoid;
  fc.channel_expansion = 1;
  EXPECT_NO_THROW(finetune_classifier(train, m, fc));
}

TEST(Finetune, Errors) {
  Model m = init_model(toy_config(), 11);
  LabeledSet d = sine_vs_square(6, 64, 1, 2);
  for (auto& l : d.labels) l = 1;
  EXPECT_THROW(finetune_classifier(d, m, FinetuneConfig{}), ArgumentError);
  FinetuneConfig bad;
  bad.channel_expansion = 3;
  EXPECT_THROW(bad.validate(), ArgumentError);
  EXPECT_THROW(parse_head_kind("mean"), ArgumentError);
}
