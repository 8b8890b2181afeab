// gpstruct command-line front end.

#include <charconv>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli/commands.hpp"
#include "cli/run_config.hpp"
#include "gpstruct/error.hpp"

namespace {

using gpstruct::Error;
using gpstruct::ErrorCode;
using json = nlohmann::json;

enum class Kind { kString, kInt, kUnsigned, kDouble, kBool, kGamma };

// A command-line flag that overrides one config key.
struct Flag {
  const char* name;
  const char* key;
  Kind kind;
  const char* help;
};

constexpr Flag kCommonFlags[] = {
    {"--seed", "seed", Kind::kUnsigned, "RNG seed"},
    {"--data", "data.train", Kind::kString, "training data file"},
    {"--out", "out", Kind::kString, "output directory"},
};

constexpr Flag kStoreFlags[] = {
    {"--store", "store", Kind::kString, "sample store path (default OUT/store.gps)"},
};

constexpr Flag kTrainFlags[] = {
    {"--iterations", "chain.iterations", Kind::kUnsigned, "total ESS iterations"},
    {"--thin", "chain.thin", Kind::kUnsigned, "record every N-th state"},
    {"--hyper-every", "chain.hyper_every", Kind::kUnsigned, "ESS steps per hyper update"},
    {"--kernel", "kernel.type", Kind::kString, "input kernel: linear or se"},
    {"--gamma", "kernel.gamma", Kind::kGamma, "SE length scale, or 'median'"},
    {"--hp", "kernel.hp", Kind::kDouble, "pairwise prior variance"},
    {"--jitter", "kernel.jitter", Kind::kDouble, "diagonal jitter on the input Gram"},
    {"--sample-hypers", "chain.sample_hypers", Kind::kString, "off or prior-whitening"},
    {"--proposal-scale", "chain.proposal_scale", Kind::kDouble, "log-normal hyper step size"},
};

constexpr Flag kTestFlags[] = {
    {"--test", "data.test", Kind::kString, "test data file"},
};

constexpr Flag kPredictFlags[] = {
    {"--burn-in", "chain.burn_in", Kind::kDouble, "fraction of samples discarded"},
    {"--scheme", "predict.scheme", Kind::kString, "fstar-map or fstar-sample"},
    {"--n-fstar", "predict.n_fstar", Kind::kInt, "test latent draws per sample"},
    {"--loss", "predict.loss", Kind::kString, "hamming or zero-one"},
};

constexpr Flag kExperimentFlags[] = {
    {"--task", "experiment.task", Kind::kString, "task name in reports"},
    {"--splits", "experiment.splits", Kind::kInt, "number of splits"},
    {"--train-size", "experiment.train_size", Kind::kUnsigned, "training sequences per split"},
    {"--test-size", "experiment.test_size", Kind::kUnsigned, "test sequences per split"},
};

constexpr Flag kSynthFlags[] = {
    {"--labels", "synth.labels", Kind::kInt, "number of labels"},
    {"--n-train", "synth.n_train", Kind::kUnsigned, "training sequences"},
    {"--n-test", "synth.n_test", Kind::kUnsigned, "test sequences"},
    {"--length", "synth.length", Kind::kUnsigned, "sequence length (minimum)"},
    {"--length-max", "synth.length_max", Kind::kUnsigned, "maximum length (0 = fixed)"},
    {"--features", "synth.features", Kind::kString, "onehot or gaussian"},
    {"--signal", "synth.signal", Kind::kDouble, "feature signal scale"},
    {"--noise", "synth.noise", Kind::kDouble, "feature noise standard deviation"},
    {"--noise-dims", "synth.noise_dims", Kind::kUnsigned, "extra pure-noise dimensions"},
    {"--transitions", "synth.transitions", Kind::kString, "uniform, sticky:P or rows a,b;c,d"},
};

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return 2;
    case ErrorCode::kIo: return 3;
    case ErrorCode::kData: return 4;
    case ErrorCode::kNumeric: return 5;
    case ErrorCode::kFormat: return 6;
  }
  return 1;
}

json convert(const std::string& text, Kind kind, const std::string& flag) {
  const auto bad = [&] { throw Error(ErrorCode::kConfig, flag + ": invalid value '" + text + "'"); };
  const char* first = text.data();
  const char* last = text.data() + text.size();
  switch (kind) {
    case Kind::kString:
      return text;
    case Kind::kBool:
      return text == "true" || text == "1";
    case Kind::kInt: {
      long long v = 0;
      auto [p, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || p != last) bad();
      return v;
    }
    case Kind::kUnsigned: {
      unsigned long long v = 0;
      auto [p, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || p != last) bad();
      return v;
    }
    case Kind::kGamma:
      if (text == "median") {
        return text;
      }
      [[fallthrough]];
    case Kind::kDouble: {
      double v = 0.0;
      auto [p, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || p != last) bad();
      return v;
    }
  }
  return nullptr;
}

// Collects flag values for one subcommand and turns them into a config
// overlay once parsing is done.
class Overrides {
 public:
  template <std::size_t N>
  void add(CLI::App* app, const Flag (&flags)[N]) {
    for (const Flag& f : flags) {
      auto& slot = values_[f.key];
      app->add_option(f.name, slot.text, f.help);
      slot.flag = &f;
    }
  }

  void add_switch(CLI::App* app, const char* name, const char* key, const char* help) {
    auto& slot = values_[key];
    app->add_flag(name, slot.set_switch, help);
  }

  [[nodiscard]] json overlay() const {
    json doc = json::object();
    for (const auto& [key, slot] : values_) {
      if (slot.flag != nullptr && !slot.text.empty()) {
        doc[key] = convert(slot.text, slot.flag->kind, slot.flag->name);
      } else if (slot.set_switch) {
        doc[key] = true;
      }
    }
    return doc;
  }

 private:
  struct Slot {
    std::string text;
    bool set_switch = false;
    const Flag* flag = nullptr;
  };
  std::map<std::string, Slot> values_;
};

struct Command {
  CLI::App* app = nullptr;
  std::string config_path;
  Overrides overrides;
};

Command& add_command(CLI::App& app, std::map<std::string, Command>& commands, const char* name,
                     const char* description) {
  Command& cmd = commands[name];
  cmd.app = app.add_subcommand(name, description);
  cmd.app->add_option("--config", cmd.config_path, "JSON config file; flags override it");
  cmd.overrides.add(cmd.app, kCommonFlags);
  return cmd;
}

int run(int argc, char** argv) {
  CLI::App app{"GP-prior structured prediction for linear-chain sequence labeling"};
  app.require_subcommand(1);
  std::map<std::string, Command> commands;

  Command& train = add_command(app, commands, "train", "run the sampler and write a sample store");
  train.overrides.add(train.app, kTrainFlags);
  train.overrides.add(train.app, kStoreFlags);
  bool resume = false;
  train.app->add_flag("--resume", resume, "continue from OUT/checkpoint.gps when present");

  Command& predict = add_command(app, commands, "predict", "BMA prediction from a sample store");
  predict.overrides.add(predict.app, kPredictFlags);
  predict.overrides.add(predict.app, kStoreFlags);
  predict.overrides.add(predict.app, kTestFlags);
  predict.overrides.add_switch(predict.app, "--test-unlabeled", "data.test_unlabeled_flag",
                               "test file has no label column");
  predict.overrides.add_switch(predict.app, "--marginals", "predict.write_marginals",
                               "also write marginals.tsv");

  Command& experiment =
      add_command(app, commands, "experiment", "split, train, predict and evaluate");
  experiment.overrides.add(experiment.app, kTrainFlags);
  experiment.overrides.add(experiment.app, kPredictFlags);
  experiment.overrides.add(experiment.app, kExperimentFlags);

  Command& synth = add_command(app, commands, "synth", "generate a synthetic chain task");
  synth.overrides.add(synth.app, kSynthFlags);

  CLI::App* evaluate = app.add_subcommand("evaluate", "error rates of prediction files");
  std::vector<std::string> pred_paths;
  std::vector<std::string> gold_paths;
  std::string eval_out = "out";
  std::string eval_task = "task";
  evaluate->add_option("--pred", pred_paths, "prediction files")->required();
  evaluate->add_option("--gold", gold_paths, "gold label files, one per prediction")->required();
  evaluate->add_option("--out", eval_out, "output directory for metrics");
  evaluate->add_option("--task", eval_task, "task name in reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    throw Error(ErrorCode::kConfig, msg);
  }

  if (evaluate->parsed()) {
    gpstruct::cli::cmd_evaluate(pred_paths, gold_paths, eval_task, eval_out);
    return 0;
  }
  for (auto& [name, cmd] : commands) {
    if (!cmd.app->parsed()) {
      continue;
    }
    json overlay = cmd.overrides.overlay();
    if (overlay.contains("data.test_unlabeled_flag")) {
      overlay.erase("data.test_unlabeled_flag");
      overlay["data.test_labeled"] = false;
    }
    gpstruct::cli::RunConfig config;
    if (!cmd.config_path.empty()) {
      config = gpstruct::cli::load_config_file(cmd.config_path);
    }
    gpstruct::cli::apply_json(config, overlay);
    if (name == "train") {
      gpstruct::cli::cmd_train(config, resume);
    } else if (name == "predict") {
      gpstruct::cli::cmd_predict(config);
    } else if (name == "experiment") {
      gpstruct::cli::cmd_experiment(config);
    } else if (name == "synth") {
      gpstruct::cli::cmd_synth(config);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error " << gpstruct::error_code_name(e.code()) << ": " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error E_INTERNAL: " << e.what() << '\n';
    return 1;
  }
}
