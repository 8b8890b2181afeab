#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "cli/run_config.hpp"
#include "gpstruct/corpus.hpp"

namespace gpstruct::cli {

/// Row-stochastic transition matrix from its textual form. Throws
/// Error(kConfig) for malformed text or rows that are not distributions.
Eigen::MatrixXd parse_transition_matrix(const std::string& text, int labels);

struct SynthData {
  Corpus train;
  Corpus test;
};

/// Label sequences from a Markov chain (uniform initial label) with
/// label-dependent noisy features. Deterministic given `seed`.
SynthData generate_synthetic(const SynthSpec& spec, std::uint64_t seed);

}  // namespace gpstruct::cli
