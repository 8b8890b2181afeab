#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gpstruct/corpus.hpp"
#include "gpstruct/error.hpp"
#include "gpstruct/kernels.hpp"
#include "gpstruct/random.hpp"

namespace gpstruct {

enum class HyperSampling { kOff, kPriorWhitening };

std::string to_string(HyperSampling mode);
HyperSampling parse_hyper_sampling(const std::string& name);

/// Gamma(shape, scale) hyperpriors, density proportional to
/// x^(shape-1) exp(-x / scale). h_p is scaled first: h_p / hp_factor ~ Gamma.
struct HyperPrior {
  double hp_factor = 1e-4;
  double hp_shape = 1.0;
  double hp_scale = 2.0;
  double gamma_shape = 1.0;
  double gamma_scale = 2.0;

  friend bool operator==(const HyperPrior&, const HyperPrior&) = default;
};

/// Log density of Gamma(shape, scale) at x; -inf for x <= 0.
double log_gamma_density(double x, double shape, double scale);

struct ChainConfig {
  std::uint64_t n_iterations = 0;
  std::uint64_t hyper_every = 1000;
  std::uint64_t thin = 1000;
  double burn_in_fraction = 1.0 / 3.0;
  HyperSampling hyper_sampling = HyperSampling::kOff;
  double hyper_proposal_scale = 0.1;
  std::uint64_t seed = 0;
  HyperPrior hyperprior;
  /// Recompute the data log-likelihood after every transition and throw if
  /// the cached value drifted by more than 1e-8. Slow; meant for tests.
  bool verify_cache = false;

  void validate() const;
  friend bool operator==(const ChainConfig&, const ChainConfig&) = default;
};

struct SamplerState {
  Eigen::VectorXd f;
  KernelConfig config;
  double log_lik = 0.0;
  std::uint64_t iteration = 0;
  std::uint64_t hyper_attempts = 0;
  std::uint64_t hyper_accepts = 0;
  Rng rng;
};

struct Sample {
  std::uint64_t iteration = 0;
  Eigen::VectorXd f;
  /// Hyperparameters in force when f was recorded.
  KernelConfig config;
};

struct SampleStore {
  std::vector<Sample> samples;
  SamplerState final_state;
  std::uint64_t thin = 1;
  HyperSampling hyper_sampling = HyperSampling::kOff;
  /// Identifies the training corpus the chain was run on; 0 when unset.
  std::uint64_t data_fingerprint = 0;
};

using LogLikelihood = std::function<double(const Eigen::VectorXd&)>;

/// Anything that maps white noise to a zero-mean Gaussian and back.
template <typename P>
concept FactoredPrior = requires(const P& prior, const Eigen::VectorXd& v) {
  { prior.color(v) } -> std::convertible_to<Eigen::VectorXd>;
  { prior.whiten(v) } -> std::convertible_to<Eigen::VectorXd>;
};

// ---------------------------------------------------------------------------
// Generic transitions

struct EssResult {
  Eigen::VectorXd f;
  double log_lik = 0.0;
  double threshold = 0.0;
  int shrinks = 0;
};

inline constexpr int kMaxEssShrinks = 1000;

/// One elliptical slice sampling transition for N(0, K) x exp(log_lik(f)),
/// given a prior draw `nu` ~ N(0, K). Draws the slice height, then the
/// angle; `initial_angle`, when set, replaces the first angle draw.
/// Throws Error(kNumeric) after kMaxEssShrinks bracket shrinks.
EssResult elliptical_slice(const Eigen::VectorXd& f, double log_lik, const Eigen::VectorXd& nu,
                           const LogLikelihood& log_likelihood, Rng& rng,
                           std::optional<double> initial_angle = std::nullopt);

/// Stand-in likelihood for a proposal whose prior cannot be factorized.
inline constexpr double kRejectedLogLikelihood = -1e10;

template <typename Prior>
struct HyperStepResult {
  bool accepted = false;
  std::vector<double> hypers;
  Eigen::VectorXd f;
  double log_lik = 0.0;
  double log_accept_ratio = 0.0;
  /// The proposal's prior when accepted.
  std::optional<Prior> prior;
};

/// Metropolis-Hastings on positive hyperparameters with the latent vector
/// held fixed in whitened coordinates (f = L_h nu). Proposals are
/// independent log-normal random walks. `build_prior` returns nullopt when
/// the proposal's covariance cannot be factorized; such proposals are scored
/// with kRejectedLogLikelihood.
template <FactoredPrior Prior, typename BuildPrior, typename LogHyperPrior>
HyperStepResult<Prior> whitened_hyper_step(
    const Eigen::VectorXd& f, double log_lik, const std::vector<double>& hypers,
    const Prior& current, BuildPrior&& build_prior, LogHyperPrior&& log_hyperprior,
    const LogLikelihood& log_likelihood, double proposal_scale, Rng& rng,
    const std::optional<std::vector<double>>& forced_proposal = std::nullopt) {
  std::vector<double> proposal(hypers.size());
  for (std::size_t i = 0; i < hypers.size(); ++i) {
    const double step = proposal_scale * rng.normal();
    proposal[i] = hypers[i] * std::exp(step);
  }
  if (forced_proposal) {
    if (forced_proposal->size() != hypers.size()) {
      throw Error(ErrorCode::kConfig, "forced proposal has the wrong number of hyperparameters");
    }
    proposal = *forced_proposal;
  }
  const double log_u = std::log(rng.uniform_open());

  const Eigen::VectorXd nu = current.whiten(f);
  std::optional<Prior> proposed_prior = build_prior(proposal);
  Eigen::VectorXd proposed_f;
  double proposed_log_lik = kRejectedLogLikelihood;
  if (proposed_prior) {
    proposed_f = proposed_prior->color(nu);
    proposed_log_lik = proposed_f.allFinite() ? log_likelihood(proposed_f) : kRejectedLogLikelihood;
    if (!std::isfinite(proposed_log_lik)) {
      proposed_log_lik = kRejectedLogLikelihood;
    }
  }

  // Log-normal walk: q(h | h') / q(h' | h) = prod h' / h.
  double log_jacobian = 0.0;
  for (std::size_t i = 0; i < hypers.size(); ++i) {
    log_jacobian += std::log(proposal[i]) - std::log(hypers[i]);
  }
  const double log_prior_ratio = log_hyperprior(proposal) - log_hyperprior(hypers);
  double log_ratio = (proposed_log_lik - log_lik) + log_prior_ratio + log_jacobian;
  if (std::isnan(log_ratio)) {
    log_ratio = -std::numeric_limits<double>::infinity();
  }

  HyperStepResult<Prior> result;
  result.log_accept_ratio = log_ratio;
  if (proposed_prior && log_u < log_ratio) {
    result.accepted = true;
    result.hypers = std::move(proposal);
    result.f = std::move(proposed_f);
    result.log_lik = proposed_log_lik;
    result.prior = std::move(proposed_prior);
  } else {
    result.hypers = hypers;
    result.f = f;
    result.log_lik = log_lik;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Structured model

/// Sum of per-sequence structured-softmax log-likelihoods, accumulated in
/// sequence order. Requires a labeled corpus.
double total_log_likelihood(const Eigen::VectorXd& f, const Corpus& corpus,
                            const LatentLayout& layout);

/// f ~ N(0, K) by coloring standard normal noise blockwise.
Eigen::VectorXd sample_prior(const GramBlocks& gram, Rng& rng);

/// One ESS transition on the training posterior.
SamplerState ess_step(SamplerState state, const GramBlocks& gram, const Corpus& corpus);

/// Hyperparameters sampled for a kernel: h_p, plus gamma for the SE kernel.
std::vector<double> active_hyperparameters(const KernelConfig& config);
KernelConfig with_hyperparameters(KernelConfig config, const std::vector<double>& hypers);
double log_hyperprior_density(const KernelConfig& config, const HyperPrior& prior);

struct HyperStepOutcome {
  SamplerState state;
  GramBlocks gram;
  bool accepted = false;
};

/// Prior-whitened MH update of the kernel hyperparameters. On rejection the
/// returned state keeps f, config and log_lik, and `gram` is the input gram.
HyperStepOutcome hyper_step(SamplerState state, const GramBlocks& gram, const Corpus& corpus,
                            const HyperPrior& prior, double proposal_scale,
                            const std::optional<KernelConfig>& forced_proposal = std::nullopt);

struct ChainCallbacks {
  /// Called after each recorded sample with the store so far.
  std::function<void(const SampleStore&)> on_sample;
};

/// Runs ESS from f = 0 for ccfg.n_iterations steps, with a hyperparameter
/// update after every hyper_every-th step when enabled, recording every
/// thin-th state.
SampleStore run_chain(const Corpus& corpus, const KernelConfig& kcfg, const ChainConfig& ccfg,
                      const ChainCallbacks& callbacks = {});

/// Continues a stored chain until ccfg.n_iterations total steps. The result
/// is identical to an uninterrupted run with the same configuration.
SampleStore resume_chain(SampleStore store, const Corpus& corpus, const ChainConfig& ccfg,
                         const ChainCallbacks& callbacks = {});

/// Drops the first ceil(fraction * count) samples.
SampleStore burn_in_filter(const SampleStore& store, double fraction);

}  // namespace gpstruct
