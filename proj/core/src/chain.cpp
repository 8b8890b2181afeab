#include "gpstruct/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gpstruct/error.hpp"

namespace gpstruct {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// alpha(t, y): log-sum of scores of all prefixes ending in y at t.
Eigen::MatrixXd forward(const ChainPotentials& pots) {
  const auto t_len = pots.unary.rows();
  const auto l = pots.unary.cols();
  Eigen::MatrixXd alpha(t_len, l);
  alpha.row(0) = pots.unary.row(0);
  std::vector<double> terms(static_cast<std::size_t>(l));
  for (Eigen::Index t = 1; t < t_len; ++t) {
    for (Eigen::Index y = 0; y < l; ++y) {
      for (Eigen::Index yp = 0; yp < l; ++yp) {
        terms[static_cast<std::size_t>(yp)] = alpha(t - 1, yp) + pots.pairwise(yp, y);
      }
      alpha(t, y) = pots.unary(t, y) + log_sum_exp(terms);
    }
  }
  return alpha;
}

// beta(t, y): log-sum of scores of all suffixes after t given y at t.
Eigen::MatrixXd backward(const ChainPotentials& pots) {
  const auto t_len = pots.unary.rows();
  const auto l = pots.unary.cols();
  Eigen::MatrixXd beta(t_len, l);
  beta.row(t_len - 1).setZero();
  std::vector<double> terms(static_cast<std::size_t>(l));
  for (Eigen::Index t = t_len - 2; t >= 0; --t) {
    for (Eigen::Index y = 0; y < l; ++y) {
      for (Eigen::Index yn = 0; yn < l; ++yn) {
        terms[static_cast<std::size_t>(yn)] =
            pots.pairwise(y, yn) + pots.unary(t + 1, yn) + beta(t + 1, yn);
      }
      beta(t, y) = log_sum_exp(terms);
    }
  }
  return beta;
}

void check_labels(const ChainPotentials& pots, std::span<const Label> labels) {
  if (labels.size() != pots.length()) {
    throw Error(ErrorCode::kData, "label sequence length " + std::to_string(labels.size()) +
                                      " != chain length " + std::to_string(pots.length()));
  }
  const auto l = static_cast<Label>(pots.num_labels());
  for (Label y : labels) {
    if (y < 0 || y >= l) {
      throw Error(ErrorCode::kData, "label id " + std::to_string(y) + " out of range");
    }
  }
}

}  // namespace

void ChainPotentials::validate() const {
  if (unary.rows() < 1) {
    throw Error(ErrorCode::kData, "chain potentials need T >= 1");
  }
  if (pairwise.rows() != unary.cols() || pairwise.cols() != unary.cols()) {
    throw Error(ErrorCode::kData, "pairwise table must be |L| x |L|");
  }
  if (!unary.allFinite() || !pairwise.allFinite()) {
    throw Error(ErrorCode::kNumeric, "chain potentials must be finite");
  }
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) {
    return kNegInf;
  }
  const double m = *std::max_element(values.begin(), values.end());
  if (m == kNegInf) {
    return kNegInf;
  }
  double sum = 0.0;
  for (double v : values) {
    sum += std::exp(v - m);
  }
  return m + std::log(sum);
}

ChainPotentials potentials_from_latents(const Eigen::VectorXd& f, const LatentLayout& layout,
                                        std::size_t sequence_index) {
  if (static_cast<std::size_t>(f.size()) != layout.total()) {
    throw Error(ErrorCode::kData, "latent vector size does not match layout");
  }
  if (sequence_index >= layout.num_sequences()) {
    throw Error(ErrorCode::kData, "sequence index " + std::to_string(sequence_index) +
                                      " out of range");
  }
  const auto t_len = static_cast<Eigen::Index>(layout.length(sequence_index));
  const auto l = static_cast<Eigen::Index>(layout.num_labels());
  const auto p = static_cast<Eigen::Index>(layout.num_positions());
  const auto off = static_cast<Eigen::Index>(layout.offset(sequence_index));

  ChainPotentials pots;
  pots.unary.resize(t_len, l);
  for (Eigen::Index y = 0; y < l; ++y) {
    pots.unary.col(y) = f.segment(y * p + off, t_len);
  }
  // Row-major |L| x |L| in the latent vector.
  pots.pairwise = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                 Eigen::RowMajor>>(
      f.data() + layout.n_unary(), l, l);
  return pots;
}

double joint_score(const ChainPotentials& pots, std::span<const Label> labels) {
  check_labels(pots, labels);
  double s = 0.0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    s += pots.unary(static_cast<Eigen::Index>(t), labels[t]);
    if (t + 1 < labels.size()) {
      s += pots.pairwise(labels[t], labels[t + 1]);
    }
  }
  return s;
}

double log_partition(const ChainPotentials& pots) {
  // Rolling forward vector; the full table is only needed for marginals.
  const auto t_len = pots.unary.rows();
  const auto l = pots.unary.cols();
  Eigen::VectorXd alpha = pots.unary.row(0).transpose();
  Eigen::VectorXd next(l);
  std::vector<double> terms(static_cast<std::size_t>(l));
  for (Eigen::Index t = 1; t < t_len; ++t) {
    for (Eigen::Index y = 0; y < l; ++y) {
      for (Eigen::Index yp = 0; yp < l; ++yp) {
        terms[static_cast<std::size_t>(yp)] = alpha[yp] + pots.pairwise(yp, y);
      }
      next[y] = pots.unary(t, y) + log_sum_exp(terms);
    }
    alpha.swap(next);
  }
  return log_sum_exp(std::span<const double>(alpha.data(), static_cast<std::size_t>(l)));
}

double sequence_log_likelihood(const ChainPotentials& pots, std::span<const Label> labels) {
  return joint_score(pots, labels) - log_partition(pots);
}

MarginalTables marginals(const ChainPotentials& pots) {
  const auto t_len = pots.unary.rows();
  const auto l = pots.unary.cols();
  const Eigen::MatrixXd alpha = forward(pots);
  const Eigen::MatrixXd beta = backward(pots);
  const Eigen::VectorXd last = alpha.row(t_len - 1).transpose();
  const double log_z =
      log_sum_exp(std::span<const double>(last.data(), static_cast<std::size_t>(l)));

  MarginalTables out;
  out.node = (alpha + beta).array() - log_z;
  out.node = out.node.array().exp();
  out.edge.reserve(static_cast<std::size_t>(std::max<Eigen::Index>(t_len - 1, 0)));
  for (Eigen::Index t = 0; t + 1 < t_len; ++t) {
    Eigen::MatrixXd e(l, l);
    for (Eigen::Index y = 0; y < l; ++y) {
      for (Eigen::Index yn = 0; yn < l; ++yn) {
        e(y, yn) = std::exp(alpha(t, y) + pots.pairwise(y, yn) + pots.unary(t + 1, yn) +
                            beta(t + 1, yn) - log_z);
      }
    }
    out.edge.push_back(std::move(e));
  }
  return out;
}

std::vector<Label> viterbi(const ChainPotentials& pots) {
  const auto t_len = pots.unary.rows();
  const auto l = pots.unary.cols();
  Eigen::MatrixXd delta(t_len, l);
  Eigen::Matrix<Label, Eigen::Dynamic, Eigen::Dynamic> back(t_len, l);
  delta.row(0) = pots.unary.row(0);
  for (Eigen::Index t = 1; t < t_len; ++t) {
    for (Eigen::Index y = 0; y < l; ++y) {
      Label best = 0;
      double best_score = delta(t - 1, 0) + pots.pairwise(0, y);
      for (Eigen::Index yp = 1; yp < l; ++yp) {
        const double s = delta(t - 1, yp) + pots.pairwise(yp, y);
        if (s > best_score) {
          best_score = s;
          best = static_cast<Label>(yp);
        }
      }
      delta(t, y) = pots.unary(t, y) + best_score;
      back(t, y) = best;
    }
  }
  std::vector<Label> path(static_cast<std::size_t>(t_len));
  Label best = 0;
  for (Eigen::Index y = 1; y < l; ++y) {
    if (delta(t_len - 1, y) > delta(t_len - 1, best)) {
      best = static_cast<Label>(y);
    }
  }
  path.back() = best;
  for (Eigen::Index t = t_len - 1; t > 0; --t) {
    path[static_cast<std::size_t>(t - 1)] = back(t, path[static_cast<std::size_t>(t)]);
  }
  return path;
}

BruteForceResult brute_force(const ChainPotentials& pots, std::size_t max_configurations) {
  pots.validate();
  const std::size_t t_len = pots.length();
  const std::size_t l = pots.num_labels();
  std::size_t count = 1;
  for (std::size_t t = 0; t < t_len; ++t) {
    if (count > max_configurations / l) {
      throw Error(ErrorCode::kConfig, "brute force enumeration exceeds " +
                                          std::to_string(max_configurations) + " sequences");
    }
    count *= l;
  }

  std::vector<double> scores(count);
  std::vector<Label> labels(t_len, 0);
  BruteForceResult out;
  out.max_score = kNegInf;
  for (std::size_t c = 0; c < count; ++c) {
    // Odometer order with position 0 as the most significant digit, so the
    // first maximizer met is lexicographically smallest.
    std::size_t code = c;
    for (std::size_t t = t_len; t-- > 0;) {
      labels[t] = static_cast<Label>(code % l);
      code /= l;
    }
    scores[c] = joint_score(pots, labels);
    if (scores[c] > out.max_score) {
      out.max_score = scores[c];
      out.argmax = labels;
    }
  }
  out.log_partition = log_sum_exp(scores);

  const auto ti = static_cast<Eigen::Index>(t_len);
  const auto li = static_cast<Eigen::Index>(l);
  out.marginals.node = Eigen::MatrixXd::Zero(ti, li);
  out.marginals.edge.assign(t_len > 0 ? t_len - 1 : 0, Eigen::MatrixXd::Zero(li, li));
  for (std::size_t c = 0; c < count; ++c) {
    std::size_t code = c;
    for (std::size_t t = t_len; t-- > 0;) {
      labels[t] = static_cast<Label>(code % l);
      code /= l;
    }
    const double p = std::exp(scores[c] - out.log_partition);
    for (std::size_t t = 0; t < t_len; ++t) {
      out.marginals.node(static_cast<Eigen::Index>(t), labels[t]) += p;
      if (t + 1 < t_len) {
        out.marginals.edge[t](labels[t], labels[t + 1]) += p;
      }
    }
  }
  return out;
}

}  // namespace gpstruct
