#include "cli/synth.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "gpstruct/error.hpp"
#include "gpstruct/random.hpp"

namespace gpstruct::cli {

namespace {

[[noreturn]] void bad_matrix(const std::string& why) {
  throw Error(ErrorCode::kConfig, "invalid stochastic matrix: " + why);
}

double parse_probability(const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    bad_matrix("'" + text + "' is not a number");
  }
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream is(text);
  while (std::getline(is, part, sep)) {
    parts.push_back(part);
  }
  return parts;
}

Label draw_label(const Eigen::RowVectorXd& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (Eigen::Index y = 0; y < probs.size(); ++y) {
    acc += probs[y];
    if (u < acc) {
      return static_cast<Label>(y);
    }
  }
  // Round-off in the row sum; fall back to the last label with mass.
  for (Eigen::Index y = probs.size() - 1; y >= 0; --y) {
    if (probs[y] > 0.0) {
      return static_cast<Label>(y);
    }
  }
  return 0;
}

}  // namespace

Eigen::MatrixXd parse_transition_matrix(const std::string& text, int labels) {
  if (labels < 2) {
    throw Error(ErrorCode::kConfig, "synthetic data needs at least 2 labels");
  }
  const Eigen::Index l = labels;
  Eigen::MatrixXd m(l, l);
  if (text == "uniform") {
    m.setConstant(1.0 / static_cast<double>(l));
  } else if (text.rfind("sticky:", 0) == 0) {
    const double p = parse_probability(text.substr(7));
    if (!(p >= 0.0 && p <= 1.0)) {
      bad_matrix("sticky probability must lie in [0, 1]");
    }
    m.setConstant((1.0 - p) / static_cast<double>(l - 1));
    m.diagonal().setConstant(p);
  } else {
    const auto rows = split(text, ';');
    if (static_cast<Eigen::Index>(rows.size()) != l) {
      bad_matrix("expected " + std::to_string(l) + " rows");
    }
    for (Eigen::Index i = 0; i < l; ++i) {
      const auto cols = split(rows[static_cast<std::size_t>(i)], ',');
      if (static_cast<Eigen::Index>(cols.size()) != l) {
        bad_matrix("row " + std::to_string(i) + " needs " + std::to_string(l) + " entries");
      }
      for (Eigen::Index j = 0; j < l; ++j) {
        m(i, j) = parse_probability(cols[static_cast<std::size_t>(j)]);
      }
    }
  }
  for (Eigen::Index i = 0; i < l; ++i) {
    if ((m.row(i).array() < 0.0).any() || !m.row(i).allFinite()) {
      bad_matrix("negative or non-finite entry in row " + std::to_string(i));
    }
    if (std::abs(m.row(i).sum() - 1.0) > 1e-9) {
      bad_matrix("row " + std::to_string(i) + " sums to " + std::to_string(m.row(i).sum()));
    }
  }
  return m;
}

SynthData generate_synthetic(const SynthSpec& spec, std::uint64_t seed) {
  const Eigen::MatrixXd transitions = parse_transition_matrix(spec.transitions, spec.labels);
  if (spec.features != "onehot" && spec.features != "gaussian") {
    throw Error(ErrorCode::kConfig, "synth.features must be onehot or gaussian");
  }
  if (spec.length < 1 || (spec.length_max != 0 && spec.length_max < spec.length)) {
    throw Error(ErrorCode::kConfig, "synthetic lengths must satisfy 1 <= length <= length_max");
  }
  if (spec.n_train < 1 || spec.n_test < 1) {
    throw Error(ErrorCode::kConfig, "synthetic train and test sizes must be >= 1");
  }
  if (!(spec.noise >= 0.0) || !std::isfinite(spec.signal)) {
    throw Error(ErrorCode::kConfig, "synthetic noise must be >= 0 and signal finite");
  }

  const auto l = static_cast<std::size_t>(spec.labels);
  const std::size_t dim = l + spec.noise_dims;
  Rng rng(seed);

  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(l),
                                                static_cast<Eigen::Index>(dim));
  if (spec.features == "onehot") {
    for (std::size_t y = 0; y < l; ++y) {
      means(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(y)) = 1.0;
    }
  } else {
    for (Eigen::Index y = 0; y < means.rows(); ++y) {
      means.row(y) = rng.normal_vector(means.cols()).transpose();
    }
  }
  means *= spec.signal;

  const Eigen::RowVectorXd initial =
      Eigen::RowVectorXd::Constant(static_cast<Eigen::Index>(l), 1.0 / static_cast<double>(l));
  const std::size_t max_len = spec.length_max == 0 ? spec.length : spec.length_max;

  auto make_sequences = [&](std::size_t count) {
    std::vector<TokenSequence> seqs;
    seqs.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
      const std::size_t len = spec.length + rng.uniform_index(max_len - spec.length + 1);
      TokenSequence seq;
      std::vector<Label> labels;
      Label y = draw_label(initial, rng);
      for (std::size_t t = 0; t < len; ++t) {
        if (t > 0) {
          y = draw_label(transitions.row(y), rng);
        }
        Eigen::VectorXd x = means.row(y).transpose();
        if (spec.noise > 0.0) {
          x += spec.noise * rng.normal_vector(static_cast<Eigen::Index>(dim));
        }
        seq.features.push_back(
            FeatureVector::from_dense(std::span<const double>(x.data(), dim)));
        labels.push_back(y);
      }
      seq.labels = std::move(labels);
      seqs.push_back(std::move(seq));
    }
    return seqs;
  };

  std::vector<std::string> alphabet;
  for (std::size_t y = 0; y < l; ++y) {
    alphabet.push_back("L" + std::to_string(y));
  }
  auto train = make_sequences(spec.n_train);
  auto test = make_sequences(spec.n_test);
  return SynthData{Corpus(std::move(train), alphabet, dim), Corpus(std::move(test), alphabet, dim)};
}

}  // namespace gpstruct::cli
