#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gpstruct/chain.hpp"
#include "gpstruct/corpus.hpp"
#include "gpstruct/kernels.hpp"
#include "gpstruct/sampler.hpp"

namespace gpstruct {

enum class PredictScheme { kFstarMap, kFstarSample };
enum class DecodeLoss { kHamming, kZeroOne };

std::string to_string(PredictScheme scheme);
std::string to_string(DecodeLoss loss);
PredictScheme parse_predict_scheme(const std::string& name);
DecodeLoss parse_decode_loss(const std::string& name);

/// Distribution of the test unary latents given one training sample f.
/// Label blocks are independent and share one covariance.
struct PredictiveGaussian {
  LatentLayout layout;                      // test layout
  Eigen::MatrixXd mean_unary;               // P* x |L|, column y = label block y
  Eigen::MatrixXd pairwise;                 // |L| x |L|, copied from f
  std::optional<Eigen::MatrixXd> cov_chol;  // P* x P*, lower

  /// Latent vector in test layout order built from the given unary blocks.
  [[nodiscard]] Eigen::VectorXd latents(const Eigen::MatrixXd& unary) const;
  [[nodiscard]] Eigen::VectorXd mean_latents() const { return latents(mean_unary); }
};

/// Gaussian conditional of the test latents given training latents f:
/// mean_y = Kx*^T Kx^{-1} f_y per label block; covariance
/// Kx** - Kx*^T Kx^{-1} Kx* + jitter * I when `want_cov`. Test pairwise
/// latents are the tied training ones. Throws FactorizationError when the
/// predictive covariance cannot be factorized.
PredictiveGaussian predictive_conditional(const GramBlocks& gram, const Eigen::VectorXd& f,
                                          const Corpus& train, const Corpus& test, bool want_cov);

/// Running uniform average of per-sequence node marginals.
class MarginalAccumulator {
 public:
  void add(const std::vector<Eigen::MatrixXd>& node_marginals);
  [[nodiscard]] std::size_t count() const noexcept { return count_; }
  [[nodiscard]] std::vector<Eigen::MatrixXd> mean() const;
  /// Standard error of the mean, from the sample variance of the added
  /// tables (zero when fewer than two were added).
  [[nodiscard]] std::vector<Eigen::MatrixXd> standard_error() const;

 private:
  std::size_t count_ = 0;
  std::vector<Eigen::MatrixXd> sum_;
  std::vector<Eigen::MatrixXd> sum_sq_;
};

/// Micro-label-wise most probable labels.
std::vector<Label> decode_hamming(const Eigen::MatrixXd& node_marginals);

struct PredictOptions {
  PredictScheme scheme = PredictScheme::kFstarMap;
  int n_fstar = 1;
  DecodeLoss loss = DecodeLoss::kHamming;
  std::uint64_t seed = 0;
  /// Reuse the Gram factor across consecutive samples with equal
  /// hyperparameters.
  bool cache_gram = true;
  /// Replace the predictive covariance factor with zero (testing hook).
  bool zero_predictive_cov = false;
};

struct PredictionResult {
  std::vector<std::vector<Label>> labels;
  std::vector<Eigen::MatrixXd> marginals;         // per sequence, T x |L|
  std::vector<Eigen::MatrixXd> marginal_stderr;   // Monte Carlo standard errors
  std::size_t n_f_samples = 0;
  std::size_t n_fstar_samples = 0;  // per f sample
};

/// Bayesian model averaging over the stored f samples (and, for
/// kFstarSample, over n_fstar predictive draws per f). Hamming decoding takes
/// the per-position argmax of the averaged marginals; zero-one decoding runs
/// Viterbi on log averaged marginals plus the averaged pairwise table.
PredictionResult predict_bma(const SampleStore& store, const Corpus& train, const Corpus& test,
                             const PredictOptions& options);

struct ErrorRates {
  double hamming = 0.0;
  double zero_one = 0.0;
};

/// Fraction of wrong micro-labels and fraction of sequences with any error.
ErrorRates error_rate(const std::vector<std::vector<Label>>& predicted, const Corpus& gold);

}  // namespace gpstruct
