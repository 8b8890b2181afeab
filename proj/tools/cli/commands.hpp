#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cli/run_config.hpp"
#include "gpstruct/corpus.hpp"
#include "gpstruct/predict.hpp"
#include "gpstruct/sampler.hpp"

namespace gpstruct::cli {

struct SplitMetrics {
  std::string task;
  int split_id = 0;
  double hamming_error = 0.0;
  double zero_one_error = 0.0;
  /// Posterior samples averaged at prediction time; 0 when unknown.
  std::size_t n_samples = 0;
  std::uint64_t iterations = 0;
  double runtime_seconds = 0.0;
};

struct MetricsReport {
  std::string task;
  std::vector<SplitMetrics> splits;
  double mean_hamming = 0.0;
  double std_hamming = 0.0;
  double mean_zero_one = 0.0;
  double std_zero_one = 0.0;
  double runtime_seconds = 0.0;
};

/// Mean and sample standard deviation (n - 1 denominator; 0 for one value).
std::pair<double, double> mean_and_std(const std::vector<double>& values);

MetricsReport summarize(std::string task, std::vector<SplitMetrics> splits);

/// Writes metrics.json and metrics.txt (both free of timings) and
/// timing.json into `dir`.
void write_metrics(const MetricsReport& report, const std::string& dir);

/// Labels of a prediction or gold file: the last field of every token line,
/// with blank lines separating sequences and '#' lines skipped.
std::vector<std::vector<std::string>> read_label_file(const std::string& path);

/// Hamming and zero-one error of `predicted` against `gold`. Throws
/// Error(kData) naming the first sequence whose lengths differ.
ErrorRates compare_labels(const std::vector<std::vector<std::string>>& predicted,
                          const std::vector<std::vector<std::string>>& gold);

// Corpus-level building blocks shared by the file commands and experiment.

/// Returns `config.kernel` with gamma resolved against `train` if requested.
KernelConfig resolve_kernel(const RunConfig& config, const Corpus& train);

/// Runs (or with `resume`, continues from out/checkpoint.gps) the chain and
/// writes config.json, train.log, checkpoint.gps and store.gps under `out`.
SampleStore train_corpus(const RunConfig& config, const Corpus& train, const std::string& out,
                         bool resume = false);

/// Burn-in, BMA prediction, predictions.txt, predict.log and optionally
/// marginals.tsv under `out`.
PredictionResult predict_corpus(const RunConfig& config, const SampleStore& store,
                                const Corpus& train, const Corpus& test, const std::string& out);

// Commands.

SampleStore cmd_train(const RunConfig& config, bool resume = false);
PredictionResult cmd_predict(const RunConfig& config);
MetricsReport cmd_evaluate(const std::vector<std::string>& pred_paths,
                           const std::vector<std::string>& gold_paths, const std::string& task,
                           const std::string& out_dir);
MetricsReport cmd_experiment(const RunConfig& config);
void cmd_synth(const RunConfig& config);

}  // namespace gpstruct::cli
