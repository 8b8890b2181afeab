#include <cmath>

#include <gtest/gtest.h>

#include "gpstruct/error.hpp"
#include "gpstruct/predict.hpp"
#include "oracles.hpp"

namespace gpstruct {
namespace {

KernelConfig se(double gamma) {
  KernelConfig k;
  k.input_kernel = InputKernel::kSquaredExponential;
  k.gamma = gamma;
  return k;
}

Corpus with_alphabet(const Corpus& c, std::size_t labels) {
  std::vector<std::string> alphabet;
  for (std::size_t y = 0; y < labels; ++y) {
    alphabet.push_back("y" + std::to_string(y));
  }
  return Corpus(c.sequences(), alphabet, c.feature_dim());
}

SampleStore store_of(std::vector<Eigen::VectorXd> fs, const KernelConfig& cfg) {
  SampleStore s;
  std::uint64_t it = 0;
  for (auto& f : fs) {
    s.samples.push_back(Sample{++it, std::move(f), cfg});
  }
  return s;
}

TEST(PredictiveConditional, MatchesDenseOracle) {
  testing::Gen gen(1);
  for (int rep = 0; rep < 25; ++rep) {
    const int labels = gen.uniform_int(2, 3);
    const Corpus train = gen.corpus(gen.uniform_int(1, 3), 4, labels, 3);
    const Corpus test = with_alphabet(gen.corpus(gen.uniform_int(1, 2), 3, labels, 3),
                                      static_cast<std::size_t>(labels));
    KernelConfig cfg = gen.coin() ? KernelConfig{} : se(gen.uniform(0.3, 3.0));
    cfg.h_p = gen.uniform(0.2, 2.0);
    const GramBlocks g = assemble_gram(train, cfg);
    const Eigen::VectorXd f = gen.vector(g.dim(), 1.0);

    const PredictiveGaussian pg = predictive_conditional(g, f, train, test, true);
    const auto oracle = testing::dense_conditional(train, test, cfg, f);
    const Eigen::VectorXd mean = pg.mean_latents().head(static_cast<Eigen::Index>(
        pg.layout.n_unary()));
    EXPECT_LE(testing::max_rel_diff(mean, oracle.mean), 1e-8);

    const Eigen::MatrixXd& lc = *pg.cov_chol;
    EXPECT_TRUE(lc.isLowerTriangular());
    EXPECT_GE(lc.diagonal().minCoeff(), 0.0);
    const Eigen::MatrixXd block = lc * lc.transpose();
    const auto q = block.rows();
    for (Eigen::Index a = 0; a < labels; ++a) {
      for (Eigen::Index b = 0; b < labels; ++b) {
        const Eigen::MatrixXd expected =
            a == b ? block : Eigen::MatrixXd::Zero(q, q).eval();
        EXPECT_LE(testing::max_rel_diff(oracle.cov.block(a * q, b * q, q, q), expected), 1e-8);
      }
    }
    // Pairwise test latents are the training pairwise latents.
    EXPECT_EQ(pg.mean_latents().tail(labels * labels), f.tail(labels * labels));
  }
}

TEST(PredictiveConditional, InterpolatesTrainingPositions) {
  testing::Gen gen(2);
  const Corpus train = gen.corpus(2, 4, 2, 3);
  KernelConfig cfg = se(1.0);
  cfg.jitter = 0.0;
  const GramBlocks g = assemble_gram(train, cfg);
  const Eigen::VectorXd f = gen.vector(g.dim(), 1.0);
  const PredictiveGaussian pg = predictive_conditional(g, f, train, train, false);
  EXPECT_LE((pg.mean_latents() - f).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(PredictiveConditional, OrthogonalTestFeaturesGiveZeroMean) {
  std::vector<TokenSequence> tr(1);
  tr[0].features = {FeatureVector({0}, {1.0}, 4), FeatureVector({1}, {2.0}, 4)};
  tr[0].labels = std::vector<Label>{0, 1};
  std::vector<TokenSequence> te(1);
  te[0].features = {FeatureVector({2}, {1.0}, 4), FeatureVector({3}, {-1.0}, 4)};
  const Corpus train(tr, {"a", "b"}, 4);
  const Corpus test(te, {"a", "b"}, 4);
  const GramBlocks g = assemble_gram(train, KernelConfig{});
  testing::Gen gen(3);
  const PredictiveGaussian pg =
      predictive_conditional(g, gen.vector(g.dim(), 1.0), train, test, false);
  EXPECT_TRUE(pg.mean_unary.isZero(0.0));
  EXPECT_FALSE(pg.cov_chol.has_value());
}

TEST(PredictiveConditional, RejectsIncompatibleTest) {
  testing::Gen gen(4);
  const Corpus train = gen.corpus(2, 3, 2, 3);
  const GramBlocks g = assemble_gram(train, KernelConfig{});
  const Eigen::VectorXd f = Eigen::VectorXd::Zero(g.dim());
  EXPECT_THROW(predictive_conditional(g, f, train, gen.corpus(1, 2, 2, 4), false), Error);
  EXPECT_THROW(predictive_conditional(g, f, train, gen.corpus(1, 2, 3, 3), false), Error);
  EXPECT_THROW(predictive_conditional(g, Eigen::VectorXd::Zero(3), train, train, false), Error);
}

TEST(MarginalAccumulator, ArithmeticMean) {
  MarginalAccumulator acc;
  Eigen::MatrixXd a(1, 2);
  a << 0.9, 0.1;
  Eigen::MatrixXd b(1, 2);
  b << 0.5, 0.5;
  acc.add({a});
  acc.add({b});
  EXPECT_EQ(acc.count(), 2u);
  const auto m = acc.mean();
  EXPECT_NEAR(m[0](0, 0), 0.7, 1e-15);
  EXPECT_NEAR(m[0](0, 1), 0.3, 1e-15);
  EXPECT_EQ(decode_hamming(m[0]), std::vector<Label>{0});
  // Sample std of {0.9, 0.5} is 0.2 sqrt(2); its standard error divides by sqrt(2).
  EXPECT_NEAR(acc.standard_error()[0](0, 0), 0.2, 1e-12);
  EXPECT_THROW(acc.add({a, b}), Error);
}

TEST(PredictBma, SingleSampleSingleNode) {
  testing::Gen gen(5);
  const Corpus train = gen.corpus(2, 3, 3, 3);
  const Corpus test = with_alphabet(gen.corpus(1, 1, 3, 3), 3);
  ASSERT_EQ(test.total_positions(), 1u);
  const KernelConfig cfg = se(1.0);
  const GramBlocks g = assemble_gram(train, cfg);
  const Eigen::VectorXd f = gen.vector(g.dim(), 1.0);
  const PredictionResult r = predict_bma(store_of({f}, cfg), train, test, PredictOptions{});
  const PredictiveGaussian pg = predictive_conditional(g, f, train, test, false);
  const Eigen::ArrayXd e = pg.mean_unary.row(0).array().exp();
  for (Eigen::Index y = 0; y < 3; ++y) {
    EXPECT_NEAR(r.marginals[0](0, y), e[y] / e.sum(), 1e-12);
  }
  EXPECT_EQ(r.n_f_samples, 1u);
}

TEST(PredictBma, AveragesAreConvexCombinations) {
  testing::Gen gen(6);
  const Corpus train = gen.corpus(3, 4, 3, 3);
  const Corpus test = with_alphabet(gen.corpus(2, 4, 3, 3), 3);
  const KernelConfig cfg = se(2.0);
  const GramBlocks g = assemble_gram(train, cfg);
  std::vector<Eigen::VectorXd> fs;
  for (int i = 0; i < 5; ++i) {
    fs.push_back(gen.vector(g.dim(), 2.0));
  }
  const PredictionResult r = predict_bma(store_of(fs, cfg), train, test, PredictOptions{});
  for (std::size_t n = 0; n < test.size(); ++n) {
    Eigen::MatrixXd lo = Eigen::MatrixXd::Constant(r.marginals[n].rows(), 3, 2.0);
    Eigen::MatrixXd hi = Eigen::MatrixXd::Constant(r.marginals[n].rows(), 3, -1.0);
    for (const auto& f : fs) {
      const auto pg = predictive_conditional(g, f, train, test, false);
      const auto off = static_cast<Eigen::Index>(pg.layout.offset(n));
      const auto len = static_cast<Eigen::Index>(pg.layout.length(n));
      const Eigen::MatrixXd m =
          marginals(ChainPotentials{pg.mean_unary.middleRows(off, len), pg.pairwise}).node;
      lo = lo.cwiseMin(m);
      hi = hi.cwiseMax(m);
    }
    for (Eigen::Index t = 0; t < r.marginals[n].rows(); ++t) {
      EXPECT_NEAR(r.marginals[n].row(t).sum(), 1.0, 1e-8);
    }
    EXPECT_TRUE((r.marginals[n].array() >= lo.array() - 1e-12).all());
    EXPECT_TRUE((r.marginals[n].array() <= hi.array() + 1e-12).all());
  }
}

TEST(PredictBma, EqualSamplesEqualSingleSample) {
  testing::Gen gen(7);
  const Corpus train = gen.corpus(3, 4, 2, 3);
  const Corpus test = with_alphabet(gen.corpus(3, 4, 2, 3), 2);
  const KernelConfig cfg;
  const Eigen::VectorXd f = gen.vector(assemble_gram(train, cfg).dim(), 1.0);
  const PredictionResult one = predict_bma(store_of({f}, cfg), train, test, PredictOptions{});
  const PredictionResult many =
      predict_bma(store_of({f, f, f, f}, cfg), train, test, PredictOptions{});
  EXPECT_EQ(one.labels, many.labels);
  for (std::size_t n = 0; n < test.size(); ++n) {
    EXPECT_LE((one.marginals[n] - many.marginals[n]).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(PredictBma, ZeroCovarianceSamplingEqualsMap) {
  testing::Gen gen(8);
  const Corpus train = gen.corpus(3, 4, 3, 3);
  const Corpus test = with_alphabet(gen.corpus(2, 4, 3, 3), 3);
  const KernelConfig cfg = se(1.0);
  const auto dim = assemble_gram(train, cfg).dim();
  const SampleStore s = store_of({gen.vector(dim, 1.0), gen.vector(dim, 1.0)}, cfg);
  PredictOptions map;
  PredictOptions sampled;
  sampled.scheme = PredictScheme::kFstarSample;
  sampled.n_fstar = 4;
  sampled.zero_predictive_cov = true;
  const PredictionResult a = predict_bma(s, train, test, map);
  const PredictionResult b = predict_bma(s, train, test, sampled);
  EXPECT_EQ(a.labels, b.labels);
  for (std::size_t n = 0; n < test.size(); ++n) {
    EXPECT_LE((a.marginals[n] - b.marginals[n]).cwiseAbs().maxCoeff(), 1e-14);
  }
  EXPECT_EQ(b.n_fstar_samples, 4u);
}

TEST(PredictBma, GramCacheDoesNotChangePredictions) {
  testing::Gen gen(9);
  const Corpus train = gen.corpus(3, 4, 2, 3);
  const Corpus test = with_alphabet(gen.corpus(2, 4, 2, 3), 2);
  KernelConfig a = se(1.0);
  KernelConfig b = se(2.5);
  const auto dim = assemble_gram(train, a).dim();
  SampleStore s = store_of({gen.vector(dim, 1.0), gen.vector(dim, 1.0), gen.vector(dim, 1.0)}, a);
  s.samples[2].config = b;
  for (const auto scheme : {PredictScheme::kFstarMap, PredictScheme::kFstarSample}) {
    PredictOptions cached;
    cached.scheme = scheme;
    cached.n_fstar = 3;
    cached.seed = 11;
    PredictOptions rebuilt = cached;
    rebuilt.cache_gram = false;
    const PredictionResult x = predict_bma(s, train, test, cached);
    const PredictionResult y = predict_bma(s, train, test, rebuilt);
    EXPECT_EQ(x.labels, y.labels);
    for (std::size_t n = 0; n < test.size(); ++n) {
      EXPECT_EQ(x.marginals[n], y.marginals[n]);
    }
  }
}

TEST(PredictBma, ZeroOneDecodingAndValidation) {
  testing::Gen gen(10);
  const Corpus train = gen.corpus(3, 4, 3, 3);
  const Corpus test = with_alphabet(gen.corpus(2, 5, 3, 3), 3);
  const KernelConfig cfg;
  const Eigen::VectorXd f = gen.vector(assemble_gram(train, cfg).dim(), 1.0);
  PredictOptions opts;
  opts.loss = DecodeLoss::kZeroOne;
  const PredictionResult r = predict_bma(store_of({f}, cfg), train, test, opts);
  // One sample: the decoder is Viterbi on log marginals plus the pairwise table.
  const auto pg = predictive_conditional(assemble_gram(train, cfg), f, train, test, false);
  for (std::size_t n = 0; n < test.size(); ++n) {
    const Eigen::MatrixXd logm = r.marginals[n].array().log().matrix();
    EXPECT_EQ(r.labels[n], viterbi(ChainPotentials{logm, pg.pairwise}));
  }
  PredictOptions bad;
  bad.scheme = PredictScheme::kFstarSample;
  bad.n_fstar = 0;
  EXPECT_THROW(predict_bma(store_of({f}, cfg), train, test, bad), Error);
  EXPECT_THROW(predict_bma(SampleStore{}, train, test, PredictOptions{}), Error);
}

TEST(ErrorRate, Counting) {
  std::vector<TokenSequence> seqs(2);
  for (int n = 0; n < 2; ++n) {
    for (int t = 0; t < 5; ++t) {
      seqs[static_cast<std::size_t>(n)].features.push_back(FeatureVector({0}, {1.0}, 1));
    }
    seqs[static_cast<std::size_t>(n)].labels = std::vector<Label>(5, 0);
  }
  const Corpus gold(seqs, {"a", "b"}, 1);
  std::vector<std::vector<Label>> pred(2, std::vector<Label>(5, 0));
  EXPECT_EQ(error_rate(pred, gold).hamming, 0.0);
  EXPECT_EQ(error_rate(pred, gold).zero_one, 0.0);
  pred[1][3] = 1;
  EXPECT_DOUBLE_EQ(error_rate(pred, gold).hamming, 0.1);
  EXPECT_DOUBLE_EQ(error_rate(pred, gold).zero_one, 0.5);
  const std::vector<std::vector<Label>> all_wrong(2, std::vector<Label>(5, 1));
  EXPECT_EQ(error_rate(all_wrong, gold).hamming, 1.0);
  EXPECT_EQ(error_rate(all_wrong, gold).zero_one, 1.0);
  pred[0].pop_back();
  EXPECT_THROW(error_rate(pred, gold), Error);
}

}  // namespace
}  // namespace gpstruct
