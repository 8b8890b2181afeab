#include "gpstruct/sampler.hpp"

#include <cmath>
#include <numbers>

#include "gpstruct/chain.hpp"

namespace gpstruct {

std::string to_string(HyperSampling mode) {
  return mode == HyperSampling::kOff ? "off" : "prior-whitening";
}

HyperSampling parse_hyper_sampling(const std::string& name) {
  if (name == "off") {
    return HyperSampling::kOff;
  }
  if (name == "prior-whitening" || name == "prior_whitening") {
    return HyperSampling::kPriorWhitening;
  }
  throw Error(ErrorCode::kConfig,
              "unknown hyperparameter sampling mode '" + name + "' (expected off or prior-whitening)");
}

double log_gamma_density(double x, double shape, double scale) {
  if (!(x > 0.0)) {
    return -std::numeric_limits<double>::infinity();
  }
  return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) - shape * std::log(scale);
}

void ChainConfig::validate() const {
  if (thin < 1) {
    throw Error(ErrorCode::kConfig, "thin must be >= 1");
  }
  if (hyper_every < 1) {
    throw Error(ErrorCode::kConfig, "hyper_every must be >= 1");
  }
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
    throw Error(ErrorCode::kConfig, "burn-in fraction must lie in [0, 1)");
  }
  if (!(hyper_proposal_scale > 0.0) || !std::isfinite(hyper_proposal_scale)) {
    throw Error(ErrorCode::kConfig, "hyperparameter proposal scale must be positive");
  }
  const HyperPrior& h = hyperprior;
  if (!(h.hp_factor > 0.0 && h.hp_shape > 0.0 && h.hp_scale > 0.0 && h.gamma_shape > 0.0 &&
        h.gamma_scale > 0.0)) {
    throw Error(ErrorCode::kConfig, "hyperprior parameters must be positive");
  }
}

// ---------------------------------------------------------------------------

EssResult elliptical_slice(const Eigen::VectorXd& f, double log_lik, const Eigen::VectorXd& nu,
                           const LogLikelihood& log_likelihood, Rng& rng,
                           std::optional<double> initial_angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  EssResult out;
  out.threshold = log_lik + std::log(rng.uniform_open());
  double theta = initial_angle ? *initial_angle : kTwoPi * rng.uniform();
  double lo = theta - kTwoPi;
  double hi = theta;
  while (true) {
    out.f = f * std::cos(theta) + nu * std::sin(theta);
    out.log_lik = log_likelihood(out.f);
    if (out.log_lik > out.threshold) {
      return out;
    }
    if (theta < 0.0) {
      lo = theta;
    } else {
      hi = theta;
    }
    if (++out.shrinks > kMaxEssShrinks) {
      throw Error(ErrorCode::kNumeric, "elliptical slice sampling: bracket shrank " +
                                           std::to_string(kMaxEssShrinks) +
                                           " times without acceptance");
    }
    theta = lo + (hi - lo) * rng.uniform();
  }
}

// ---------------------------------------------------------------------------

double total_log_likelihood(const Eigen::VectorXd& f, const Corpus& corpus,
                            const LatentLayout& layout) {
  double sum = 0.0;
  for (std::size_t n = 0; n < corpus.size(); ++n) {
    const auto& labels = corpus.sequence(n).labels;
    if (!labels) {
      throw Error(ErrorCode::kData, "training likelihood needs labeled sequences");
    }
    sum += sequence_log_likelihood(potentials_from_latents(f, layout, n), *labels);
  }
  return sum;
}

Eigen::VectorXd sample_prior(const GramBlocks& gram, Rng& rng) {
  return gram.color(rng.normal_vector(gram.dim()));
}

SamplerState ess_step(SamplerState state, const GramBlocks& gram, const Corpus& corpus) {
  const LatentLayout& layout = gram.layout();
  const Eigen::VectorXd nu = sample_prior(gram, state.rng);
  EssResult r = elliptical_slice(
      state.f, state.log_lik, nu,
      [&](const Eigen::VectorXd& f) { return total_log_likelihood(f, corpus, layout); },
      state.rng);
  state.f = std::move(r.f);
  state.log_lik = r.log_lik;
  ++state.iteration;
  return state;
}

std::vector<double> active_hyperparameters(const KernelConfig& config) {
  if (config.input_kernel == InputKernel::kSquaredExponential) {
    return {config.h_p, config.gamma};
  }
  return {config.h_p};
}

KernelConfig with_hyperparameters(KernelConfig config, const std::vector<double>& hypers) {
  const std::size_t expected = active_hyperparameters(config).size();
  if (hypers.size() != expected) {
    throw Error(ErrorCode::kConfig, "expected " + std::to_string(expected) + " hyperparameters");
  }
  config.h_p = hypers[0];
  if (expected == 2) {
    config.gamma = hypers[1];
  }
  return config;
}

double log_hyperprior_density(const KernelConfig& config, const HyperPrior& prior) {
  double lp = log_gamma_density(config.h_p / prior.hp_factor, prior.hp_shape, prior.hp_scale) -
              std::log(prior.hp_factor);
  if (config.input_kernel == InputKernel::kSquaredExponential) {
    lp += log_gamma_density(config.gamma, prior.gamma_shape, prior.gamma_scale);
  }
  return lp;
}

HyperStepOutcome hyper_step(SamplerState state, const GramBlocks& gram, const Corpus& corpus,
                            const HyperPrior& prior, double proposal_scale,
                            const std::optional<KernelConfig>& forced_proposal) {
  const KernelConfig base = state.config;
  std::optional<std::vector<double>> forced;
  if (forced_proposal) {
    forced = active_hyperparameters(*forced_proposal);
  }
  auto result = whitened_hyper_step(
      state.f, state.log_lik, active_hyperparameters(base), gram,
      [&](const std::vector<double>& h) {
        return try_assemble_gram(corpus, with_hyperparameters(base, h));
      },
      [&](const std::vector<double>& h) {
        return log_hyperprior_density(with_hyperparameters(base, h), prior);
      },
      [&](const Eigen::VectorXd& f) { return total_log_likelihood(f, corpus, gram.layout()); },
      proposal_scale, state.rng, forced);

  ++state.hyper_attempts;
  if (!result.accepted) {
    return HyperStepOutcome{std::move(state), gram, false};
  }
  ++state.hyper_accepts;
  state.config = with_hyperparameters(base, result.hypers);
  state.f = std::move(result.f);
  state.log_lik = result.log_lik;
  return HyperStepOutcome{std::move(state), std::move(*result.prior), true};
}

// ---------------------------------------------------------------------------

namespace {

void check_cache(const SamplerState& state, const Corpus& corpus, const LatentLayout& layout) {
  const double fresh = total_log_likelihood(state.f, corpus, layout);
  if (std::abs(fresh - state.log_lik) > 1e-8 * std::max(1.0, std::abs(fresh))) {
    throw Error(ErrorCode::kNumeric, "cached log-likelihood drifted from recomputed value");
  }
}

}  // namespace

SampleStore run_chain(const Corpus& corpus, const KernelConfig& kcfg, const ChainConfig& ccfg,
                      const ChainCallbacks& callbacks) {
  ccfg.validate();
  kcfg.validate();
  if (!corpus.labeled()) {
    throw Error(ErrorCode::kData, "training corpus must be labeled");
  }
  const LatentLayout layout(corpus);
  SampleStore store;
  store.thin = ccfg.thin;
  store.hyper_sampling = ccfg.hyper_sampling;
  SamplerState& s = store.final_state;
  s.f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.total()));
  s.config = kcfg;
  s.log_lik = total_log_likelihood(s.f, corpus, layout);
  s.iteration = 0;
  s.rng = Rng(ccfg.seed);
  return resume_chain(std::move(store), corpus, ccfg, callbacks);
}

SampleStore resume_chain(SampleStore store, const Corpus& corpus, const ChainConfig& ccfg,
                         const ChainCallbacks& callbacks) {
  ccfg.validate();
  if (store.thin != ccfg.thin || store.hyper_sampling != ccfg.hyper_sampling) {
    throw Error(ErrorCode::kConfig, "chain configuration differs from the stored chain");
  }
  const LatentLayout layout(corpus);
  if (static_cast<std::size_t>(store.final_state.f.size()) != layout.total()) {
    throw Error(ErrorCode::kData, "stored latent vector does not match the training corpus");
  }
  GramBlocks gram = assemble_gram(corpus, store.final_state.config);
  SamplerState state = std::move(store.final_state);

  while (state.iteration < ccfg.n_iterations) {
    state = ess_step(std::move(state), gram, corpus);
    if (ccfg.verify_cache) {
      check_cache(state, corpus, layout);
    }
    if (ccfg.hyper_sampling == HyperSampling::kPriorWhitening &&
        state.iteration % ccfg.hyper_every == 0) {
      HyperStepOutcome h = hyper_step(std::move(state), gram, corpus, ccfg.hyperprior,
                                      ccfg.hyper_proposal_scale);
      state = std::move(h.state);
      if (h.accepted) {
        gram = std::move(h.gram);
      }
      if (ccfg.verify_cache) {
        check_cache(state, corpus, layout);
      }
    }
    if (state.iteration % ccfg.thin == 0) {
      store.samples.push_back(Sample{state.iteration, state.f, state.config});
      if (callbacks.on_sample) {
        store.final_state = state;
        callbacks.on_sample(store);
      }
    }
  }
  store.final_state = std::move(state);
  return store;
}

SampleStore burn_in_filter(const SampleStore& store, double fraction) {
  if (store.samples.empty()) {
    throw Error(ErrorCode::kData, "sample store is empty");
  }
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::kConfig, "burn-in fraction must lie in [0, 1)");
  }
  // The relative slack keeps e.g. (1/3) * 9 from rounding up to 4.
  const double raw = fraction * static_cast<double>(store.samples.size());
  const auto drop = static_cast<std::size_t>(std::ceil(raw * (1.0 - 1e-12)));
  SampleStore out;
  out.samples.assign(store.samples.begin() + static_cast<std::ptrdiff_t>(drop),
                     store.samples.end());
  out.final_state = store.final_state;
  out.thin = store.thin;
  out.hyper_sampling = store.hyper_sampling;
  out.data_fingerprint = store.data_fingerprint;
  return out;
}

}  // namespace gpstruct
