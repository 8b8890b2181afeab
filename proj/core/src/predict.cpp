#include "gpstruct/predict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gpstruct/error.hpp"
#include "gpstruct/random.hpp"

namespace gpstruct {

std::string to_string(PredictScheme scheme) {
  return scheme == PredictScheme::kFstarMap ? "fstar-map" : "fstar-sample";
}

std::string to_string(DecodeLoss loss) {
  return loss == DecodeLoss::kHamming ? "hamming" : "zero-one";
}

PredictScheme parse_predict_scheme(const std::string& name) {
  if (name == "fstar-map" || name == "fstar_map") {
    return PredictScheme::kFstarMap;
  }
  if (name == "fstar-sample" || name == "fstar_sample") {
    return PredictScheme::kFstarSample;
  }
  throw Error(ErrorCode::kConfig,
              "unknown scheme '" + name + "' (expected fstar-map or fstar-sample)");
}

DecodeLoss parse_decode_loss(const std::string& name) {
  if (name == "hamming") {
    return DecodeLoss::kHamming;
  }
  if (name == "zero-one" || name == "zero_one") {
    return DecodeLoss::kZeroOne;
  }
  throw Error(ErrorCode::kConfig, "unknown loss '" + name + "' (expected hamming or zero-one)");
}

Eigen::VectorXd PredictiveGaussian::latents(const Eigen::MatrixXd& unary) const {
  Eigen::VectorXd f(static_cast<Eigen::Index>(layout.total()));
  Eigen::Map<Eigen::MatrixXd>(f.data(), unary.rows(), unary.cols()) = unary;
  const auto l = pairwise.rows();
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      f.data() + layout.n_unary(), l, l) = pairwise;
  return f;
}

namespace {

// Per-hyperparameter quantities shared by every f sample drawn under them.
struct ConditionalCache {
  KernelConfig config;
  std::optional<GramBlocks> gram;
  Eigen::MatrixXd weights;                  // Kx^{-1} Kx*, P x P*
  std::optional<Eigen::MatrixXd> cov_chol;  // P* x P*
};

ConditionalCache build_cache(GramBlocks gram, const Corpus& train, const Corpus& test,
                             bool want_cov) {
  ConditionalCache c;
  c.config = gram.config();
  const Eigen::MatrixXd cross = input_cross_gram(train, test, c.config);
  const auto chol = gram.kx_chol().triangularView<Eigen::Lower>();
  Eigen::MatrixXd v = chol.solve(cross);  // L^{-1} Kx*
  c.weights = chol.transpose().solve(v);
  if (want_cov) {
    Eigen::MatrixXd cov = input_gram(test, c.config);
    cov.noalias() -= v.transpose() * v;
    cov = 0.5 * (cov + cov.transpose());
    cov.diagonal().array() += c.config.jitter;
    auto factor = try_cholesky(cov);
    if (!factor) {
      throw FactorizationError("predictive covariance is not positive definite");
    }
    c.cov_chol = std::move(*factor);
  }
  c.gram = std::move(gram);
  return c;
}

PredictiveGaussian conditional_from_cache(const ConditionalCache& c, const Eigen::VectorXd& f,
                                          const Corpus& test) {
  const LatentLayout& train_layout = c.gram->layout();
  if (static_cast<std::size_t>(f.size()) != train_layout.total()) {
    throw Error(ErrorCode::kData, "latent vector does not match the training layout");
  }
  const auto p = static_cast<Eigen::Index>(train_layout.num_positions());
  const auto l = static_cast<Eigen::Index>(train_layout.num_labels());
  PredictiveGaussian g{LatentLayout(test), {}, {}, c.cov_chol};
  const Eigen::Map<const Eigen::MatrixXd> f_unary(f.data(), p, l);
  g.mean_unary.noalias() = c.weights.transpose() * f_unary;
  g.pairwise = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                              Eigen::RowMajor>>(
      f.data() + train_layout.n_unary(), l, l);
  return g;
}

void check_compatible(const Corpus& train, const Corpus& test) {
  if (train.label_alphabet() != test.label_alphabet()) {
    throw Error(ErrorCode::kData, "test corpus label alphabet differs from training");
  }
  if (train.feature_dim() != test.feature_dim()) {
    throw Error(ErrorCode::kData, "test feature dim " + std::to_string(test.feature_dim()) +
                                      " != training dim " + std::to_string(train.feature_dim()));
  }
}

ChainPotentials test_potentials(const PredictiveGaussian& g, const Eigen::MatrixXd& unary,
                                std::size_t n) {
  const auto off = static_cast<Eigen::Index>(g.layout.offset(n));
  const auto len = static_cast<Eigen::Index>(g.layout.length(n));
  return ChainPotentials{unary.middleRows(off, len), g.pairwise};
}

}  // namespace

PredictiveGaussian predictive_conditional(const GramBlocks& gram, const Eigen::VectorXd& f,
                                          const Corpus& train, const Corpus& test,
                                          bool want_cov) {
  check_compatible(train, test);
  if (!(gram.layout() == LatentLayout(train))) {
    throw Error(ErrorCode::kData, "Gram blocks were not built from this training corpus");
  }
  const ConditionalCache cache = build_cache(gram, train, test, want_cov);
  return conditional_from_cache(cache, f, test);
}

// ---------------------------------------------------------------------------

void MarginalAccumulator::add(const std::vector<Eigen::MatrixXd>& node_marginals) {
  if (count_ == 0) {
    sum_.clear();
    sum_sq_.clear();
    for (const auto& m : node_marginals) {
      sum_.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
      sum_sq_.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
    }
  }
  if (node_marginals.size() != sum_.size()) {
    throw Error(ErrorCode::kData, "marginal tables disagree in sequence count");
  }
  for (std::size_t n = 0; n < sum_.size(); ++n) {
    sum_[n] += node_marginals[n];
    sum_sq_[n] += node_marginals[n].cwiseProduct(node_marginals[n]);
  }
  ++count_;
}

std::vector<Eigen::MatrixXd> MarginalAccumulator::mean() const {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(sum_.size());
  for (const auto& s : sum_) {
    out.push_back(s / static_cast<double>(count_));
  }
  return out;
}

std::vector<Eigen::MatrixXd> MarginalAccumulator::standard_error() const {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(sum_.size());
  const auto n = static_cast<double>(count_);
  for (std::size_t k = 0; k < sum_.size(); ++k) {
    if (count_ < 2) {
      out.push_back(Eigen::MatrixXd::Zero(sum_[k].rows(), sum_[k].cols()));
      continue;
    }
    const Eigen::ArrayXXd m = sum_[k].array() / n;
    const Eigen::ArrayXXd var = ((sum_sq_[k].array() / n - m * m) * n / (n - 1.0)).max(0.0);
    out.push_back((var / n).sqrt().matrix());
  }
  return out;
}

std::vector<Label> decode_hamming(const Eigen::MatrixXd& node_marginals) {
  std::vector<Label> out(static_cast<std::size_t>(node_marginals.rows()));
  for (Eigen::Index t = 0; t < node_marginals.rows(); ++t) {
    Eigen::Index best = 0;
    node_marginals.row(t).maxCoeff(&best);
    out[static_cast<std::size_t>(t)] = static_cast<Label>(best);
  }
  return out;
}

PredictionResult predict_bma(const SampleStore& store, const Corpus& train, const Corpus& test,
                             const PredictOptions& options) {
  if (store.samples.empty()) {
    throw Error(ErrorCode::kData, "sample store is empty");
  }
  const bool sampling = options.scheme == PredictScheme::kFstarSample;
  if (sampling && options.n_fstar < 1) {
    throw Error(ErrorCode::kConfig, "fstar-sample needs n_fstar >= 1");
  }
  check_compatible(train, test);
  const LatentLayout test_layout(test);
  const auto l = static_cast<Eigen::Index>(train.num_labels());
  const auto p_test = static_cast<Eigen::Index>(test_layout.num_positions());
  const int draws = sampling ? options.n_fstar : 1;

  Rng rng(options.seed);
  MarginalAccumulator acc;
  Eigen::MatrixXd pairwise_sum = Eigen::MatrixXd::Zero(l, l);
  std::optional<ConditionalCache> cache;
  std::vector<Eigen::MatrixXd> node(test.size());

  for (const Sample& sample : store.samples) {
    if (!cache || !options.cache_gram || !(cache->config == sample.config)) {
      cache = build_cache(assemble_gram(train, sample.config), train, test, sampling);
    }
    const PredictiveGaussian g = conditional_from_cache(*cache, sample.f, test);
    pairwise_sum += g.pairwise;
    for (int d = 0; d < draws; ++d) {
      Eigen::MatrixXd unary = g.mean_unary;
      if (sampling) {
        const Eigen::MatrixXd z = Eigen::Map<const Eigen::MatrixXd>(
            rng.normal_vector(p_test * l).data(), p_test, l);
        if (!options.zero_predictive_cov) {
          unary.noalias() += g.cov_chol->triangularView<Eigen::Lower>() * z;
        }
      }
      for (std::size_t n = 0; n < test.size(); ++n) {
        node[n] = marginals(test_potentials(g, unary, n)).node;
      }
      acc.add(node);
    }
  }

  PredictionResult result;
  result.marginals = acc.mean();
  result.marginal_stderr = acc.standard_error();
  result.n_f_samples = store.samples.size();
  result.n_fstar_samples = static_cast<std::size_t>(draws);
  const Eigen::MatrixXd pairwise_mean = pairwise_sum / static_cast<double>(store.samples.size());
  result.labels.reserve(test.size());
  for (const auto& m : result.marginals) {
    if (options.loss == DecodeLoss::kHamming) {
      result.labels.push_back(decode_hamming(m));
    } else {
      const Eigen::MatrixXd log_m =
          m.array().max(std::numeric_limits<double>::min()).log().matrix();
      result.labels.push_back(viterbi(ChainPotentials{log_m, pairwise_mean}));
    }
  }
  return result;
}

ErrorRates error_rate(const std::vector<std::vector<Label>>& predicted, const Corpus& gold) {
  if (predicted.size() != gold.size()) {
    throw Error(ErrorCode::kData, "prediction has " + std::to_string(predicted.size()) +
                                      " sequences, gold has " + std::to_string(gold.size()));
  }
  std::size_t wrong_positions = 0;
  std::size_t wrong_sequences = 0;
  std::size_t positions = 0;
  for (std::size_t n = 0; n < gold.size(); ++n) {
    const auto& truth = gold.sequence(n).labels;
    if (!truth) {
      throw Error(ErrorCode::kData, "gold sequence " + std::to_string(n) + " has no labels");
    }
    if (truth->size() != predicted[n].size()) {
      throw Error(ErrorCode::kData, "sequence " + std::to_string(n) + ": predicted length " +
                                        std::to_string(predicted[n].size()) + " != gold length " +
                                        std::to_string(truth->size()));
    }
    std::size_t wrong = 0;
    for (std::size_t t = 0; t < truth->size(); ++t) {
      wrong += (*truth)[t] != predicted[n][t] ? 1 : 0;
    }
    wrong_positions += wrong;
    wrong_sequences += wrong > 0 ? 1 : 0;
    positions += truth->size();
  }
  return ErrorRates{static_cast<double>(wrong_positions) / static_cast<double>(positions),
                    static_cast<double>(wrong_sequences) / static_cast<double>(gold.size())};
}

}  // namespace gpstruct
