#include "cli/run_config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "gpstruct/error.hpp"

namespace gpstruct::cli {

namespace {

using json = nlohmann::json;

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorCode::kConfig, message);
}

template <typename T>
T as(const json& value, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, std::size_t>) {
      if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<long long>() >= 0)) {
        config_error("config key '" + key + "' must be a non-negative integer");
      }
    }
    return value.get<T>();
  } catch (const json::exception&) {
    config_error("config key '" + key + "' has the wrong type");
  }
}

using Setter = std::function<void(RunConfig&, const json&, const std::string&)>;

template <typename T, typename Get>
Setter set(Get get) {
  return [get](RunConfig& c, const json& v, const std::string& key) { get(c) = as<T>(v, key); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"data.train", set<std::string>([](RunConfig& c) -> auto& { return c.train_path; })},
      {"data.test", set<std::string>([](RunConfig& c) -> auto& { return c.test_path; })},
      {"data.test_labeled", set<bool>([](RunConfig& c) -> auto& { return c.test_labeled; })},
      {"store", set<std::string>([](RunConfig& c) -> auto& { return c.store_path; })},
      {"out", set<std::string>([](RunConfig& c) -> auto& { return c.out_dir; })},
      {"seed", set<std::uint64_t>([](RunConfig& c) -> auto& { return c.seed; })},
      {"kernel.type",
       [](RunConfig& c, const json& v, const std::string& k) {
         c.kernel.input_kernel = parse_input_kernel(as<std::string>(v, k));
       }},
      {"kernel.gamma",
       [](RunConfig& c, const json& v, const std::string& k) {
         if (v.is_string()) {
           if (v.get<std::string>() != "median") {
             config_error("kernel.gamma must be a number or \"median\"");
           }
           c.gamma_median = true;
         } else {
           c.gamma_median = false;
           c.kernel.gamma = as<double>(v, k);
         }
       }},
      {"kernel.hp", set<double>([](RunConfig& c) -> auto& { return c.kernel.h_p; })},
      {"kernel.jitter", set<double>([](RunConfig& c) -> auto& { return c.kernel.jitter; })},
      {"kernel.median_max_pairs",
       set<std::size_t>([](RunConfig& c) -> auto& { return c.median_max_pairs; })},
      {"chain.iterations",
       set<std::uint64_t>([](RunConfig& c) -> auto& { return c.chain.n_iterations; })},
      {"chain.thin", set<std::uint64_t>([](RunConfig& c) -> auto& { return c.chain.thin; })},
      {"chain.hyper_every",
       set<std::uint64_t>([](RunConfig& c) -> auto& { return c.chain.hyper_every; })},
      {"chain.burn_in", set<double>([](RunConfig& c) -> auto& { return c.chain.burn_in_fraction; })},
      {"chain.sample_hypers",
       [](RunConfig& c, const json& v, const std::string& k) {
         c.chain.hyper_sampling = parse_hyper_sampling(as<std::string>(v, k));
       }},
      {"chain.proposal_scale",
       set<double>([](RunConfig& c) -> auto& { return c.chain.hyper_proposal_scale; })},
      {"hyperprior.hp_factor",
       set<double>([](RunConfig& c) -> auto& { return c.chain.hyperprior.hp_factor; })},
      {"hyperprior.hp_shape",
       set<double>([](RunConfig& c) -> auto& { return c.chain.hyperprior.hp_shape; })},
      {"hyperprior.hp_scale",
       set<double>([](RunConfig& c) -> auto& { return c.chain.hyperprior.hp_scale; })},
      {"hyperprior.gamma_shape",
       set<double>([](RunConfig& c) -> auto& { return c.chain.hyperprior.gamma_shape; })},
      {"hyperprior.gamma_scale",
       set<double>([](RunConfig& c) -> auto& { return c.chain.hyperprior.gamma_scale; })},
      {"predict.scheme",
       [](RunConfig& c, const json& v, const std::string& k) {
         c.scheme = parse_predict_scheme(as<std::string>(v, k));
       }},
      {"predict.n_fstar", set<int>([](RunConfig& c) -> auto& { return c.n_fstar; })},
      {"predict.loss",
       [](RunConfig& c, const json& v, const std::string& k) {
         c.loss = parse_decode_loss(as<std::string>(v, k));
       }},
      {"predict.write_marginals",
       set<bool>([](RunConfig& c) -> auto& { return c.write_marginals; })},
      {"experiment.task", set<std::string>([](RunConfig& c) -> auto& { return c.task; })},
      {"experiment.splits", set<int>([](RunConfig& c) -> auto& { return c.n_splits; })},
      {"experiment.train_size", set<std::size_t>([](RunConfig& c) -> auto& { return c.train_size; })},
      {"experiment.test_size", set<std::size_t>([](RunConfig& c) -> auto& { return c.test_size; })},
      {"synth.labels", set<int>([](RunConfig& c) -> auto& { return c.synth.labels; })},
      {"synth.n_train", set<std::size_t>([](RunConfig& c) -> auto& { return c.synth.n_train; })},
      {"synth.n_test", set<std::size_t>([](RunConfig& c) -> auto& { return c.synth.n_test; })},
      {"synth.length", set<std::size_t>([](RunConfig& c) -> auto& { return c.synth.length; })},
      {"synth.length_max",
       set<std::size_t>([](RunConfig& c) -> auto& { return c.synth.length_max; })},
      {"synth.features", set<std::string>([](RunConfig& c) -> auto& { return c.synth.features; })},
      {"synth.signal", set<double>([](RunConfig& c) -> auto& { return c.synth.signal; })},
      {"synth.noise", set<double>([](RunConfig& c) -> auto& { return c.synth.noise; })},
      {"synth.noise_dims",
       set<std::size_t>([](RunConfig& c) -> auto& { return c.synth.noise_dims; })},
      {"synth.transitions",
       set<std::string>([](RunConfig& c) -> auto& { return c.synth.transitions; })},
  };
  return table;
}

}  // namespace

void apply_json(RunConfig& config, const json& doc) {
  if (!doc.is_object()) {
    config_error("config document must be a JSON object");
  }
  for (const auto& [key, value] : doc.items()) {
    const auto it = setters().find(key);
    if (it == setters().end()) {
      config_error("unknown config key '" + key + "'");
    }
    it->second(config, value, key);
  }
}

RunConfig config_from_json(const json& doc) {
  RunConfig config;
  apply_json(config, doc);
  return config;
}

json config_to_json(const RunConfig& c) {
  json j = json::object();
  j["data.train"] = c.train_path;
  j["data.test"] = c.test_path;
  j["data.test_labeled"] = c.test_labeled;
  j["store"] = c.store_path;
  j["out"] = c.out_dir;
  j["seed"] = c.seed;
  j["kernel.type"] = to_string(c.kernel.input_kernel);
  if (c.gamma_median) {
    j["kernel.gamma"] = "median";
  } else {
    j["kernel.gamma"] = c.kernel.gamma;
  }
  j["kernel.hp"] = c.kernel.h_p;
  j["kernel.jitter"] = c.kernel.jitter;
  j["kernel.median_max_pairs"] = c.median_max_pairs;
  j["chain.iterations"] = c.chain.n_iterations;
  j["chain.thin"] = c.chain.thin;
  j["chain.hyper_every"] = c.chain.hyper_every;
  j["chain.burn_in"] = c.chain.burn_in_fraction;
  j["chain.sample_hypers"] = to_string(c.chain.hyper_sampling);
  j["chain.proposal_scale"] = c.chain.hyper_proposal_scale;
  j["hyperprior.hp_factor"] = c.chain.hyperprior.hp_factor;
  j["hyperprior.hp_shape"] = c.chain.hyperprior.hp_shape;
  j["hyperprior.hp_scale"] = c.chain.hyperprior.hp_scale;
  j["hyperprior.gamma_shape"] = c.chain.hyperprior.gamma_shape;
  j["hyperprior.gamma_scale"] = c.chain.hyperprior.gamma_scale;
  j["predict.scheme"] = to_string(c.scheme);
  j["predict.n_fstar"] = c.n_fstar;
  j["predict.loss"] = to_string(c.loss);
  j["predict.write_marginals"] = c.write_marginals;
  j["experiment.task"] = c.task;
  j["experiment.splits"] = c.n_splits;
  j["experiment.train_size"] = c.train_size;
  j["experiment.test_size"] = c.test_size;
  j["synth.labels"] = c.synth.labels;
  j["synth.n_train"] = c.synth.n_train;
  j["synth.n_test"] = c.synth.n_test;
  j["synth.length"] = c.synth.length;
  j["synth.length_max"] = c.synth.length_max;
  j["synth.features"] = c.synth.features;
  j["synth.signal"] = c.synth.signal;
  j["synth.noise"] = c.synth.noise;
  j["synth.noise_dims"] = c.synth.noise_dims;
  j["synth.transitions"] = c.synth.transitions;
  return j;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open config file '" + path + "'");
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    config_error(path + ": " + e.what());
  }
  return config_from_json(doc);
}

void write_config_file(const RunConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  }
  out << config_to_json(config).dump(2) << '\n';
}

}  // namespace gpstruct::cli
