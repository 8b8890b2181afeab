#include "gpstruct/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "gpstruct/error.hpp"
#include "gpstruct/random.hpp"

namespace gpstruct {

namespace {

[[noreturn]] void data_error(const std::string& message) {
  throw Error(ErrorCode::kData, message);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
      ++i;
    }
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
      ++i;
    }
    if (i > start) {
      fields.push_back(line.substr(start, i - start));
    }
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// FeatureVector

FeatureVector::FeatureVector(std::vector<std::uint32_t> indices, std::vector<double> values,
                             std::size_t dim)
    : dim_(dim) {
  if (indices.size() != values.size()) {
    data_error("feature vector: index/value count mismatch");
  }
  std::vector<std::size_t> order(indices.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return indices[a] < indices[b]; });
  indices_.reserve(indices.size());
  values_.reserve(values.size());
  for (std::size_t k : order) {
    if (indices[k] >= dim) {
      data_error("feature index " + std::to_string(indices[k]) + " >= dim " + std::to_string(dim));
    }
    if (!indices_.empty() && indices_.back() == indices[k]) {
      data_error("duplicate feature index " + std::to_string(indices[k]));
    }
    if (!std::isfinite(values[k])) {
      data_error("non-finite feature value at index " + std::to_string(indices[k]));
    }
    indices_.push_back(indices[k]);
    values_.push_back(values[k]);
  }
}

FeatureVector FeatureVector::from_dense(std::span<const double> dense) {
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) {
      idx.push_back(static_cast<std::uint32_t>(i));
      val.push_back(dense[i]);
    }
  }
  return FeatureVector(std::move(idx), std::move(val), dense.size());
}

bool FeatureVector::is_binary() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 1.0; });
}

double FeatureVector::dot(const FeatureVector& other) const {
  if (dim_ != other.dim_) {
    data_error("feature dimension mismatch: " + std::to_string(dim_) + " vs " +
               std::to_string(other.dim_));
  }
  double sum = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < indices_.size() && j < other.indices_.size()) {
    if (indices_[i] == other.indices_[j]) {
      sum += values_[i++] * other.values_[j++];
    } else if (indices_[i] < other.indices_[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return sum;
}

double FeatureVector::squared_distance(const FeatureVector& other) const {
  if (dim_ != other.dim_) {
    data_error("feature dimension mismatch: " + std::to_string(dim_) + " vs " +
               std::to_string(other.dim_));
  }
  // Merge walk; avoids the cancellation of |x|^2 + |y|^2 - 2<x,y>.
  double sum = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < indices_.size() || j < other.indices_.size()) {
    double d = 0.0;
    if (j == other.indices_.size() || (i < indices_.size() && indices_[i] < other.indices_[j])) {
      d = values_[i++];
    } else if (i == indices_.size() || other.indices_[j] < indices_[i]) {
      d = -other.values_[j++];
    } else {
      d = values_[i++] - other.values_[j++];
    }
    sum += d * d;
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Corpus

Corpus::Corpus(std::vector<TokenSequence> sequences, std::vector<std::string> label_alphabet,
               std::size_t feature_dim)
    : sequences_(std::move(sequences)),
      label_alphabet_(std::move(label_alphabet)),
      feature_dim_(feature_dim) {
  if (sequences_.empty()) {
    data_error("no sequences");
  }
  if (label_alphabet_.size() < 2) {
    data_error("label alphabet needs at least 2 labels, got " +
               std::to_string(label_alphabet_.size()));
  }
  const Label n_labels = static_cast<Label>(label_alphabet_.size());
  for (std::size_t n = 0; n < sequences_.size(); ++n) {
    const TokenSequence& seq = sequences_[n];
    if (seq.features.empty()) {
      data_error("sequence " + std::to_string(n) + " is empty");
    }
    for (const FeatureVector& x : seq.features) {
      if (x.dim() != feature_dim_) {
        data_error("sequence " + std::to_string(n) + ": feature dim " + std::to_string(x.dim()) +
                   " != corpus dim " + std::to_string(feature_dim_));
      }
    }
    if (seq.labels) {
      if (seq.labels->size() != seq.features.size()) {
        data_error("sequence " + std::to_string(n) + ": label count != token count");
      }
      for (Label y : *seq.labels) {
        if (y < 0 || y >= n_labels) {
          data_error("sequence " + std::to_string(n) + ": label id " + std::to_string(y) +
                     " out of range");
        }
      }
    }
    total_positions_ += seq.features.size();
  }
}

bool Corpus::labeled() const noexcept {
  return std::all_of(sequences_.begin(), sequences_.end(),
                     [](const TokenSequence& s) { return s.labels.has_value(); });
}

bool Corpus::is_binary() const noexcept {
  for (const auto& seq : sequences_) {
    for (const auto& x : seq.features) {
      if (!x.is_binary()) {
        return false;
      }
    }
  }
  return true;
}

std::vector<const FeatureVector*> Corpus::positions() const {
  std::vector<const FeatureVector*> out;
  out.reserve(total_positions_);
  for (const auto& seq : sequences_) {
    for (const auto& x : seq.features) {
      out.push_back(&x);
    }
  }
  return out;
}

Corpus Corpus::subset(std::span<const std::size_t> indices) const {
  std::vector<TokenSequence> picked;
  picked.reserve(indices.size());
  for (std::size_t i : indices) {
    picked.push_back(sequences_.at(i));
  }
  return Corpus(std::move(picked), label_alphabet_, feature_dim_);
}

Corpus Corpus::without_labels() const {
  std::vector<TokenSequence> copy = sequences_;
  for (auto& seq : copy) {
    seq.labels.reset();
  }
  return Corpus(std::move(copy), label_alphabet_, feature_dim_);
}

// ---------------------------------------------------------------------------
// Text format

Corpus parse_corpus(std::istream& in, const ParseOptions& options) {
  struct RawToken {
    std::vector<std::uint32_t> idx;
    std::vector<double> val;
    std::string label;
  };
  std::vector<std::vector<RawToken>> raw;
  std::vector<RawToken> current;
  std::optional<std::size_t> header_dim;
  std::optional<std::vector<std::string>> header_labels;
  std::size_t max_index_plus_one = 0;

  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    data_error("line " + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty()) {
      if (!current.empty()) {
        raw.push_back(std::move(current));
        current.clear();
      }
      continue;
    }
    if (fields[0].front() == '#') {
      if (fields[0] == "#dim") {
        std::size_t d = 0;
        if (fields.size() != 2 || !parse_number(fields[1], d)) {
          fail("malformed #dim header");
        }
        header_dim = d;
      } else if (fields[0] == "#labels") {
        header_labels.emplace(fields.begin() + 1, fields.end());
      }
      continue;
    }

    RawToken tok;
    std::size_t n_feature_fields = fields.size();
    if (options.labeled) {
      tok.label = std::string(fields.back());
      if (tok.label.find(':') != std::string::npos) {
        fail("missing label field");
      }
      --n_feature_fields;
    }
    for (std::size_t k = 0; k < n_feature_fields; ++k) {
      const std::string_view f = fields[k];
      const auto colon = f.find(':');
      std::uint32_t idx = 0;
      double val = 0.0;
      if (colon == std::string_view::npos || !parse_number(f.substr(0, colon), idx) ||
          !parse_number(f.substr(colon + 1), val)) {
        fail("malformed feature '" + std::string(f) + "'");
      }
      if (!std::isfinite(val)) {
        fail("non-finite feature value");
      }
      max_index_plus_one = std::max<std::size_t>(max_index_plus_one, std::size_t{idx} + 1);
      tok.idx.push_back(idx);
      tok.val.push_back(val);
    }
    current.push_back(std::move(tok));
  }
  if (!current.empty()) {
    raw.push_back(std::move(current));
  }
  if (raw.empty()) {
    data_error("no sequences");
  }

  std::size_t dim = max_index_plus_one;
  if (header_dim) {
    if (options.feature_dim && *options.feature_dim != *header_dim) {
      data_error("#dim " + std::to_string(*header_dim) + " disagrees with expected dim " +
                 std::to_string(*options.feature_dim));
    }
    dim = *header_dim;
  } else if (options.feature_dim) {
    dim = *options.feature_dim;
  }
  if (max_index_plus_one > dim) {
    data_error("feature index " + std::to_string(max_index_plus_one - 1) + " >= declared dim " +
               std::to_string(dim));
  }

  std::vector<std::string> alphabet;
  bool alphabet_fixed = false;
  if (options.label_alphabet) {
    alphabet = *options.label_alphabet;
    alphabet_fixed = true;
    if (header_labels && *header_labels != alphabet) {
      data_error("#labels header disagrees with the expected label alphabet");
    }
  } else if (header_labels) {
    alphabet = *header_labels;
    alphabet_fixed = true;
  }
  std::unordered_map<std::string, Label> label_ids;
  for (std::size_t i = 0; i < alphabet.size(); ++i) {
    label_ids.emplace(alphabet[i], static_cast<Label>(i));
  }

  std::vector<TokenSequence> sequences;
  sequences.reserve(raw.size());
  for (auto& tokens : raw) {
    TokenSequence seq;
    std::vector<Label> labels;
    for (auto& tok : tokens) {
      seq.features.emplace_back(std::move(tok.idx), std::move(tok.val), dim);
      if (options.labeled) {
        auto it = label_ids.find(tok.label);
        if (it == label_ids.end()) {
          if (alphabet_fixed) {
            data_error("unknown label '" + tok.label + "'");
          }
          it = label_ids.emplace(tok.label, static_cast<Label>(alphabet.size())).first;
          alphabet.push_back(tok.label);
        }
        labels.push_back(it->second);
      }
    }
    if (options.labeled) {
      seq.labels = std::move(labels);
    }
    sequences.push_back(std::move(seq));
  }
  return Corpus(std::move(sequences), std::move(alphabet), dim);
}

Corpus read_corpus_file(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open data file '" + path + "'");
  }
  try {
    return parse_corpus(in, options);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void serialize_corpus(const Corpus& corpus, std::ostream& out) {
  out << "#dim " << corpus.feature_dim() << '\n';
  out << "#labels";
  for (const auto& name : corpus.label_alphabet()) {
    out << ' ' << name;
  }
  out << '\n';
  for (const auto& seq : corpus.sequences()) {
    for (std::size_t t = 0; t < seq.length(); ++t) {
      const FeatureVector& x = seq.features[t];
      std::string line;
      for (std::size_t k = 0; k < x.nnz(); ++k) {
        if (!line.empty()) {
          line += ' ';
        }
        line += std::to_string(x.indices()[k]);
        line += ':';
        line += format_double(x.values()[k]);
      }
      if (seq.labels) {
        if (!line.empty()) {
          line += ' ';
        }
        line += corpus.label_alphabet()[static_cast<std::size_t>((*seq.labels)[t])];
      } else if (line.empty()) {
        throw Error(ErrorCode::kData, "cannot write a featureless token without a label");
      }
      out << line << '\n';
    }
    out << '\n';
  }
}

void write_corpus_file(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write data file '" + path + "'");
  }
  serialize_corpus(corpus, out);
}

// ---------------------------------------------------------------------------
// Splits and statistics

std::vector<ExperimentSplit> split_experiments(const Corpus& corpus, int n_splits,
                                               std::size_t train_size, std::size_t test_size,
                                               std::uint64_t seed) {
  if (n_splits < 1) {
    throw Error(ErrorCode::kConfig, "n_splits must be >= 1");
  }
  if (train_size < 1 || test_size < 1) {
    throw Error(ErrorCode::kConfig, "train and test sizes must be >= 1");
  }
  const std::size_t needed = static_cast<std::size_t>(n_splits) * train_size + test_size;
  if (needed > corpus.size()) {
    throw Error(ErrorCode::kData, "insufficient data: need " + std::to_string(needed) +
                                      " sequences, corpus has " + std::to_string(corpus.size()));
  }

  // Fisher-Yates with our own generator so the permutation is stable across
  // standard library implementations.
  std::vector<std::size_t> perm(corpus.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
  }

  const auto pool_begin = perm.begin() + static_cast<std::ptrdiff_t>(n_splits * train_size);
  const std::vector<std::size_t> pool(pool_begin, perm.end());

  std::vector<ExperimentSplit> splits;
  splits.reserve(static_cast<std::size_t>(n_splits));
  for (int s = 0; s < n_splits; ++s) {
    const auto first = perm.begin() + static_cast<std::ptrdiff_t>(s * train_size);
    std::vector<std::size_t> train_idx(first, first + static_cast<std::ptrdiff_t>(train_size));

    const std::uint64_t split_seed = seed + static_cast<std::uint64_t>(s);
    std::vector<std::size_t> candidates = pool;
    Rng test_rng(split_seed);
    for (std::size_t i = 0; i < test_size; ++i) {
      const std::size_t j = i + test_rng.uniform_index(candidates.size() - i);
      std::swap(candidates[i], candidates[j]);
    }
    std::vector<std::size_t> test_idx(candidates.begin(),
                                      candidates.begin() + static_cast<std::ptrdiff_t>(test_size));

    Corpus train = corpus.subset(train_idx);
    Corpus test = corpus.subset(test_idx);
    splits.push_back(ExperimentSplit{std::move(train), std::move(test), s, split_seed,
                                     std::move(train_idx), std::move(test_idx)});
  }
  return splits;
}

double median_pairwise_distance(const Corpus& corpus, std::size_t max_pairs, std::uint64_t seed) {
  const auto xs = corpus.positions();
  const std::size_t n = xs.size();
  if (n < 2) {
    throw Error(ErrorCode::kData, "median distance needs at least 2 positions");
  }
  const std::size_t n_pairs = n * (n - 1) / 2;
  std::vector<double> d;
  if (max_pairs == 0 || n_pairs <= max_pairs) {
    d.reserve(n_pairs);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        d.push_back(xs[i]->squared_distance(*xs[j]));
      }
    }
  } else {
    Rng rng(seed);
    d.reserve(max_pairs);
    while (d.size() < max_pairs) {
      const std::size_t i = rng.uniform_index(n);
      const std::size_t j = rng.uniform_index(n);
      if (i != j) {
        d.push_back(xs[i]->squared_distance(*xs[j]));
      }
    }
  }
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  const double upper = d[mid];
  if (d.size() % 2 == 1) {
    return upper;
  }
  const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace gpstruct
