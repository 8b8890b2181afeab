#include "cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "cli/synth.hpp"
#include "gpstruct/error.hpp"
#include "gpstruct/store_io.hpp"

namespace gpstruct::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, "cannot create output directory '" + dir + "'");
  }
}

std::ofstream open_output(const std::string& path,
                          std::ios::openmode mode = std::ios::out | std::ios::trunc) {
  std::ofstream out(path, mode);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  }
  return out;
}

std::string format(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

Corpus load_train(const RunConfig& config) {
  if (config.train_path.empty()) {
    throw Error(ErrorCode::kConfig, "no training data given (set --data or data.train)");
  }
  return read_corpus_file(config.train_path);
}

Corpus load_test(const RunConfig& config, const Corpus& train) {
  if (config.test_path.empty()) {
    throw Error(ErrorCode::kConfig, "no test data given (set --test or data.test)");
  }
  ParseOptions opts;
  opts.label_alphabet = train.label_alphabet();
  opts.feature_dim = train.feature_dim();
  opts.labeled = config.test_labeled;
  return read_corpus_file(config.test_path, opts);
}

std::string describe(const KernelConfig& k) {
  std::string s = format("hp %.6g", k.h_p);
  if (k.input_kernel == InputKernel::kSquaredExponential) {
    s += format(" gamma %.6g", k.gamma);
  }
  return s;
}

std::string progress_line(const SamplerState& s) {
  return format("iter %llu loglik %.6f ", static_cast<unsigned long long>(s.iteration), s.log_lik) +
         describe(s.config) +
         format(" hyper_accept %llu/%llu", static_cast<unsigned long long>(s.hyper_accepts),
                static_cast<unsigned long long>(s.hyper_attempts));
}

void write_predictions(const std::vector<std::vector<Label>>& labels, const Corpus& test,
                       const std::string& path) {
  auto out = open_output(path);
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (n > 0) {
      out << '\n';
    }
    for (const Label y : labels[n]) {
      out << test.label_alphabet()[static_cast<std::size_t>(y)] << '\n';
    }
  }
}

void write_marginals(const PredictionResult& result, const Corpus& test, const std::string& path) {
  auto out = open_output(path);
  out << "sequence\tposition";
  for (const auto& name : test.label_alphabet()) {
    out << '\t' << name;
  }
  out << '\n';
  for (std::size_t n = 0; n < result.marginals.size(); ++n) {
    const auto& m = result.marginals[n];
    for (Eigen::Index t = 0; t < m.rows(); ++t) {
      out << n << '\t' << t;
      for (Eigen::Index y = 0; y < m.cols(); ++y) {
        out << '\t' << format("%.10f", m(t, y));
      }
      out << '\n';
    }
  }
}

json split_json(const SplitMetrics& s) {
  return json{{"task", s.task},
              {"split_id", s.split_id},
              {"hamming_error", s.hamming_error},
              {"zero_one_error", s.zero_one_error},
              {"n_samples", s.n_samples},
              {"iterations", s.iterations}};
}

SplitMetrics evaluate_split(const RunConfig& config, const PredictionResult& result,
                            const Corpus& test, int split_id) {
  const ErrorRates rates = error_rate(result.labels, test);
  SplitMetrics m;
  m.task = config.task;
  m.split_id = split_id;
  m.hamming_error = rates.hamming;
  m.zero_one_error = rates.zero_one;
  m.n_samples = result.n_f_samples;
  m.iterations = config.chain.n_iterations;
  return m;
}

}  // namespace

std::pair<double, double> mean_and_std(const std::vector<double>& values) {
  if (values.empty()) {
    return {0.0, 0.0};
  }
  const auto n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) {
    return {mean, 0.0};
  }
  double ss = 0.0;
  for (const double v : values) {
    ss += (v - mean) * (v - mean);
  }
  return {mean, std::sqrt(ss / (n - 1.0))};
}

MetricsReport summarize(std::string task, std::vector<SplitMetrics> splits) {
  MetricsReport r;
  r.task = std::move(task);
  std::vector<double> ham;
  std::vector<double> zo;
  for (const auto& s : splits) {
    ham.push_back(s.hamming_error);
    zo.push_back(s.zero_one_error);
    r.runtime_seconds += s.runtime_seconds;
  }
  std::tie(r.mean_hamming, r.std_hamming) = mean_and_std(ham);
  std::tie(r.mean_zero_one, r.std_zero_one) = mean_and_std(zo);
  r.splits = std::move(splits);
  return r;
}

void write_metrics(const MetricsReport& report, const std::string& dir) {
  ensure_dir(dir);
  json splits = json::array();
  json timing_splits = json::array();
  for (const auto& s : report.splits) {
    splits.push_back(split_json(s));
    timing_splits.push_back({{"split_id", s.split_id}, {"runtime_seconds", s.runtime_seconds}});
  }
  const json doc{{"task", report.task},
                 {"n_splits", report.splits.size()},
                 {"splits", splits},
                 {"mean", {{"hamming_error", report.mean_hamming},
                           {"zero_one_error", report.mean_zero_one}}},
                 {"std", {{"hamming_error", report.std_hamming},
                          {"zero_one_error", report.std_zero_one}}}};
  open_output(join(dir, "metrics.json")) << doc.dump(2) << '\n';

  auto txt = open_output(join(dir, "metrics.txt"));
  txt << "task " << report.task << '\n';
  for (const auto& s : report.splits) {
    txt << format("split %d  hamming %.4f  zero-one %.4f  samples %zu  iterations %llu\n",
                  s.split_id, s.hamming_error, s.zero_one_error, s.n_samples,
                  static_cast<unsigned long long>(s.iterations));
  }
  txt << format("hamming  %.4f +/- %.4f\n", report.mean_hamming, report.std_hamming);
  txt << format("zero-one %.4f +/- %.4f\n", report.mean_zero_one, report.std_zero_one);

  const json timing{{"task", report.task},
                    {"runtime_seconds", report.runtime_seconds},
                    {"splits", timing_splits}};
  open_output(join(dir, "timing.json")) << timing.dump(2) << '\n';
}

std::vector<std::vector<std::string>> read_label_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open label file '" + path + "'");
  }
  std::vector<std::vector<std::string>> seqs;
  std::vector<std::string> current;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string field;
    std::string last;
    while (fields >> field) {
      last = field;
    }
    if (last.empty()) {
      if (!current.empty()) {
        seqs.push_back(std::move(current));
        current.clear();
      }
      continue;
    }
    if (line.find_first_not_of(" \t") != std::string::npos &&
        line[line.find_first_not_of(" \t")] == '#') {
      continue;
    }
    current.push_back(last);
  }
  if (!current.empty()) {
    seqs.push_back(std::move(current));
  }
  return seqs;
}

ErrorRates compare_labels(const std::vector<std::vector<std::string>>& predicted,
                          const std::vector<std::vector<std::string>>& gold) {
  if (predicted.size() != gold.size()) {
    throw Error(ErrorCode::kData, "prediction has " + std::to_string(predicted.size()) +
                                      " sequences, gold has " + std::to_string(gold.size()));
  }
  if (gold.empty()) {
    throw Error(ErrorCode::kData, "no sequences to evaluate");
  }
  std::size_t wrong_positions = 0;
  std::size_t wrong_sequences = 0;
  std::size_t positions = 0;
  for (std::size_t n = 0; n < gold.size(); ++n) {
    if (predicted[n].size() != gold[n].size()) {
      throw Error(ErrorCode::kData, "sequence " + std::to_string(n) + ": predicted length " +
                                        std::to_string(predicted[n].size()) +
                                        " != gold length " + std::to_string(gold[n].size()));
    }
    std::size_t wrong = 0;
    for (std::size_t t = 0; t < gold[n].size(); ++t) {
      wrong += predicted[n][t] != gold[n][t] ? 1 : 0;
    }
    wrong_positions += wrong;
    wrong_sequences += wrong > 0 ? 1 : 0;
    positions += gold[n].size();
  }
  return ErrorRates{static_cast<double>(wrong_positions) / static_cast<double>(positions),
                    static_cast<double>(wrong_sequences) / static_cast<double>(gold.size())};
}

KernelConfig resolve_kernel(const RunConfig& config, const Corpus& train) {
  KernelConfig k = config.kernel;
  if (config.gamma_median) {
    k.gamma = median_pairwise_distance(train, config.median_max_pairs, config.seed);
    if (!(k.gamma > 0.0)) {
      throw Error(ErrorCode::kData, "median pairwise distance is zero; set gamma explicitly");
    }
  }
  k.validate();
  return k;
}

SampleStore train_corpus(const RunConfig& config, const Corpus& train, const std::string& out,
                         bool resume) {
  if (!train.labeled()) {
    throw Error(ErrorCode::kData, "training data must be labeled");
  }
  ChainConfig chain = config.chain;
  chain.seed = config.seed;
  chain.validate();
  ensure_dir(out);

  const std::string checkpoint = join(out, "checkpoint.gps");
  const std::string store_path = config.store_path.empty() ? join(out, "store.gps")
                                                           : config.store_path;
  const std::uint64_t fingerprint = corpus_fingerprint(train);
  const bool resuming = resume && fs::exists(checkpoint);

  write_config_file(config, join(out, "config.json"));
  auto log = open_output(join(out, "train.log"),
                         resuming ? std::ios::out | std::ios::app : std::ios::out | std::ios::trunc);

  ChainCallbacks callbacks;
  callbacks.on_sample = [&](const SampleStore& partial) {
    SampleStore tagged = partial;
    tagged.data_fingerprint = fingerprint;
    save_store_file(tagged, checkpoint);
    log << progress_line(partial.final_state) << '\n';
  };

  SampleStore store;
  if (resuming) {
    SampleStore previous = load_store_file(checkpoint);
    if (previous.data_fingerprint != fingerprint) {
      throw Error(ErrorCode::kFormat, "checkpoint '" + checkpoint + "' was built from other data");
    }
    log << format("resume from iteration %llu\n",
                  static_cast<unsigned long long>(previous.final_state.iteration));
    store = resume_chain(std::move(previous), train, chain, callbacks);
  } else {
    const KernelConfig kernel = resolve_kernel(config, train);
    log << format("train sequences %zu positions %zu labels %zu dim %zu kernel %s ", train.size(),
                  train.total_positions(), train.num_labels(), train.feature_dim(),
                  to_string(kernel.input_kernel).c_str())
        << describe(kernel)
        << format(" iterations %llu thin %llu hypers %s seed %llu\n",
                  static_cast<unsigned long long>(chain.n_iterations),
                  static_cast<unsigned long long>(chain.thin),
                  to_string(chain.hyper_sampling).c_str(),
                  static_cast<unsigned long long>(chain.seed));
    store = run_chain(train, kernel, chain, callbacks);
  }
  store.data_fingerprint = fingerprint;
  log << format("done: %zu samples\n", store.samples.size());
  save_store_file(store, store_path);
  return store;
}

PredictionResult predict_corpus(const RunConfig& config, const SampleStore& store,
                                const Corpus& train, const Corpus& test, const std::string& out) {
  if (store.data_fingerprint != 0 && store.data_fingerprint != corpus_fingerprint(train)) {
    throw Error(ErrorCode::kFormat, "sample store was trained on different data");
  }
  ensure_dir(out);
  const SampleStore kept = burn_in_filter(store, config.chain.burn_in_fraction);
  if (kept.samples.empty()) {
    throw Error(ErrorCode::kData, "burn-in leaves no samples out of " +
                                      std::to_string(store.samples.size()));
  }
  const std::string retained = format("burn-in %.6g: retained %zu of %zu samples",
                                      config.chain.burn_in_fraction, kept.samples.size(),
                                      store.samples.size());
  auto log = open_output(join(out, "predict.log"));
  log << retained << '\n';

  PredictOptions opts;
  opts.scheme = config.scheme;
  opts.n_fstar = config.n_fstar;
  opts.loss = config.loss;
  opts.seed = config.seed;
  PredictionResult result = predict_bma(kept, train, test, opts);
  log << format("scheme %s n_fstar %zu loss %s\n", to_string(opts.scheme).c_str(),
                result.n_fstar_samples, to_string(opts.loss).c_str());

  write_predictions(result.labels, test, join(out, "predictions.txt"));
  if (config.write_marginals) {
    write_marginals(result, test, join(out, "marginals.tsv"));
  }
  return result;
}

SampleStore cmd_train(const RunConfig& config, bool resume) {
  const Corpus train = load_train(config);
  SampleStore store = train_corpus(config, train, config.out_dir, resume);
  std::cout << "trained " << store.samples.size() << " samples, final "
            << progress_line(store.final_state) << '\n';
  return store;
}

PredictionResult cmd_predict(const RunConfig& config) {
  const Corpus train = load_train(config);
  const Corpus test = load_test(config, train);
  const std::string store_path = config.store_path.empty() ? join(config.out_dir, "store.gps")
                                                           : config.store_path;
  const SampleStore store = load_store_file(store_path);
  PredictionResult result = predict_corpus(config, store, train, test, config.out_dir);
  std::cout << "predicted " << test.size() << " sequences from " << result.n_f_samples
            << " retained samples\n";
  if (test.labeled()) {
    const ErrorRates rates = error_rate(result.labels, test);
    std::cout << format("hamming %.4f zero-one %.4f\n", rates.hamming, rates.zero_one);
  }
  return result;
}

MetricsReport cmd_evaluate(const std::vector<std::string>& pred_paths,
                           const std::vector<std::string>& gold_paths, const std::string& task,
                           const std::string& out_dir) {
  if (pred_paths.empty() || pred_paths.size() != gold_paths.size()) {
    throw Error(ErrorCode::kConfig, "evaluate needs matching numbers of --pred and --gold files");
  }
  std::vector<SplitMetrics> splits;
  for (std::size_t i = 0; i < pred_paths.size(); ++i) {
    ErrorRates rates;
    try {
      rates = compare_labels(read_label_file(pred_paths[i]), read_label_file(gold_paths[i]));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kData) {
        throw;
      }
      throw Error(ErrorCode::kData, pred_paths[i] + ": " + e.what());
    }
    SplitMetrics m;
    m.task = task;
    m.split_id = static_cast<int>(i);
    m.hamming_error = rates.hamming;
    m.zero_one_error = rates.zero_one;
    splits.push_back(m);
  }
  MetricsReport report = summarize(task, std::move(splits));
  write_metrics(report, out_dir);
  std::cout << format("hamming %.4f +/- %.4f  zero-one %.4f +/- %.4f\n", report.mean_hamming,
                      report.std_hamming, report.mean_zero_one, report.std_zero_one);
  return report;
}

MetricsReport cmd_experiment(const RunConfig& config) {
  const Corpus corpus = load_train(config);
  if (config.n_splits < 1) {
    throw Error(ErrorCode::kConfig, "experiment needs at least one split");
  }
  const auto n_splits = static_cast<std::size_t>(config.n_splits);
  const std::size_t train_size =
      config.train_size != 0 ? config.train_size : corpus.size() / (n_splits + 1);
  const std::size_t test_size =
      config.test_size != 0 ? config.test_size
                            : (corpus.size() > n_splits * train_size
                                   ? corpus.size() - n_splits * train_size
                                   : 0);
  if (train_size == 0 || test_size == 0) {
    throw Error(ErrorCode::kData, "corpus of " + std::to_string(corpus.size()) +
                                      " sequences is too small for " +
                                      std::to_string(n_splits) + " splits");
  }
  const auto splits = split_experiments(corpus, config.n_splits, train_size, test_size,
                                        config.seed);
  ensure_dir(config.out_dir);
  write_config_file(config, join(config.out_dir, "config.json"));

  std::vector<SplitMetrics> results;
  for (const ExperimentSplit& split : splits) {
    const auto start = Clock::now();
    const std::string dir = join(config.out_dir, "split_" + std::to_string(split.split_id));
    ensure_dir(dir);
    write_corpus_file(split.train, join(dir, "train.txt"));
    write_corpus_file(split.test, join(dir, "test.txt"));

    RunConfig split_config = config;
    split_config.seed = config.seed + static_cast<std::uint64_t>(split.split_id);
    split_config.train_path = join(dir, "train.txt");
    split_config.test_path = join(dir, "test.txt");
    split_config.store_path.clear();
    split_config.out_dir = dir;

    const SampleStore store = train_corpus(split_config, split.train, dir);
    const PredictionResult result = predict_corpus(split_config, store, split.train, split.test, dir);
    SplitMetrics m = evaluate_split(split_config, result, split.test, split.split_id);
    m.runtime_seconds = seconds_since(start);
    write_metrics(summarize(config.task, {m}), dir);
    std::cout << format("split %d hamming %.4f zero-one %.4f\n", m.split_id, m.hamming_error,
                        m.zero_one_error);
    results.push_back(m);
  }
  MetricsReport report = summarize(config.task, std::move(results));
  write_metrics(report, config.out_dir);
  std::cout << format("%s: hamming %.4f +/- %.4f  zero-one %.4f +/- %.4f\n", config.task.c_str(),
                      report.mean_hamming, report.std_hamming, report.mean_zero_one,
                      report.std_zero_one);
  return report;
}

void cmd_synth(const RunConfig& config) {
  const SynthData data = generate_synthetic(config.synth, config.seed);
  ensure_dir(config.out_dir);
  write_config_file(config, join(config.out_dir, "config.json"));
  write_corpus_file(data.train, join(config.out_dir, "train.txt"));
  write_corpus_file(data.test, join(config.out_dir, "test.txt"));
  std::cout << "wrote " << data.train.size() << " training and " << data.test.size()
            << " test sequences to " << config.out_dir << '\n';
}

}  // namespace gpstruct::cli
