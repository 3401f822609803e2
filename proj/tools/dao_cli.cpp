#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dao/config.hpp"
#include "dao/data.hpp"
#include "dao/error.hpp"
#include "dao/trainer.hpp"
#include "dao/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

void print_report(const dao::MetricReport& report) {
  for (const auto& [key, value] : report.to_key_values()) std::printf("%s=%.10g\n", key.c_str(), value);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dao::FormatError("cannot open " + path.string());
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return bytes.str();
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    values.push_back(std::stod(item, &used));
    if (used != item.size()) throw dao::ConfigError("bad number in list: " + item);
  }
  return values;
}

struct TrainArgs {
  std::string config;
  std::string mode;
  std::optional<double> wc;
  std::optional<std::size_t> lora_rank;
  std::string grad_norm_scope;
  std::string out = "run";
  std::string resume;
  std::vector<std::string> overrides;
};

dao::TrainConfig build_config(const TrainArgs& args) {
  dao::TrainConfig config = args.config.empty() ? dao::TrainConfig{} : dao::load_config(args.config);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw dao::ConfigError("--set expects key=value, got " + kv);
    dao::set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!args.mode.empty()) config.mode = dao::parse_mode(args.mode);
  if (args.wc) {
    config.w_c = *args.wc;
    config.w_r = 1.0 - *args.wc;
  }
  if (args.lora_rank) config.model.lora_rank = *args.lora_rank;
  if (!args.grad_norm_scope.empty()) dao::set_config_value(config, "grad_norm_scope", args.grad_norm_scope);
  config.validate();
  return config;
}

int cmd_train(const TrainArgs& args) {
  dao::RunOptions options;
  options.out_dir = args.out;
  dao::TrainConfig config;
  if (args.resume.empty()) {
    config = build_config(args);
  } else {
    options.resume_from = args.resume;
  }
  const auto result = dao::run(config, options);
  std::printf("steps=%zu\n", result.steps.size());
  print_report(result.final_report);
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& data) {
  auto [trainer, next_epoch] = dao::Trainer::from_checkpoint(read_file(checkpoint));
  (void)next_epoch;
  const auto& config = trainer.config();
  const auto corpus = dao::load_corpus(data);
  const auto tokens =
      dao::tokenize_corpus(corpus, dao::TokenizerOptions{config.model.vocab_size, config.max_len});
  print_report(trainer.evaluate(tokens));
  return kExitOk;
}

int cmd_sweep(const TrainArgs& args, const std::string& wc_list, const std::string& out) {
  dao::TrainConfig config = build_config(args);
  const auto rows = dao::sweep(config, parse_list(wc_list), out);
  std::printf("%-10s %-8s %-12s %-8s\n", "run", "w_c", "mse", "acc");
  for (const auto& row : rows) {
    std::printf("%-10s %-8.4f %-12.6g %-8.4f\n", row.label.c_str(), row.w_c, row.mse, row.acc);
  }
  return kExitOk;
}

int cmd_gen_data(const dao::SynthSpec& spec, const std::string& out) {
  dao::save_corpus(dao::synth_generate(spec), out);
  std::printf("wrote %zu examples to %s\n", spec.n, out.c_str());
  return kExitOk;
}

int cmd_verify(std::size_t trials, std::uint64_t seed) {
  const auto results = dao::run_verification({trials, seed});
  bool ok = true;
  for (const auto& r : results) {
    std::printf("%s %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task sentiment training with dynamic task weighting"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--config", train_args.config, "Config file (key = value)");
  train->add_option("--mode", train_args.mode, "dao | constant | single-task");
  train->add_option("--wc", train_args.wc, "Constant classification weight; w_r = 1 - w_c");
  train->add_option("--lora-rank", train_args.lora_rank, "LoRA rank (0 disables)");
  train->add_option("--grad-norm-scope", train_args.grad_norm_scope, "trunk | all");
  train->add_option("--out", train_args.out, "Output directory")->capture_default_str();
  train->add_option("--resume", train_args.resume, "Resume from a checkpoint file");
  train->add_option("--set", train_args.overrides, "Override a config key (key=value)");

  std::string eval_checkpoint, eval_data;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus");
  eval->add_option("--checkpoint", eval_checkpoint)->required();
  eval->add_option("--data", eval_data)->required();

  TrainArgs sweep_args;
  std::string sweep_wc = "0.05,0.10,0.15,0.20,0.25,0.30", sweep_out = "sweep";
  auto* sweep = app.add_subcommand("sweep", "Constant-weight sweep plus one DAO run");
  sweep->add_option("--config", sweep_args.config, "Config file (key = value)");
  sweep->add_option("--wc", sweep_wc, "Comma-separated w_c values")->capture_default_str();
  sweep->add_option("--out", sweep_out, "Output directory")->capture_default_str();
  sweep->add_option("--set", sweep_args.overrides, "Override a config key (key=value)");

  dao::SynthSpec spec;
  std::vector<double> mix;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic corpus as JSONL");
  gen->add_option("--n", spec.n)->capture_default_str();
  gen->add_option("--mix", mix, "Five class proportions")->expected(5);
  gen->add_option("--noise", spec.noise)->capture_default_str();
  gen->add_option("--seed", spec.seed)->capture_default_str();
  gen->add_option("--out", gen_out)->required();

  std::size_t verify_trials = 100;
  std::uint64_t verify_seed = 42;
  auto* verify = app.add_subcommand("verify", "Run the gradient and invariant checks");
  verify->add_option("--trials", verify_trials)->capture_default_str();
  verify->add_option("--seed", verify_seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_args);
    if (*eval) return cmd_eval(eval_checkpoint, eval_data);
    if (*sweep) return cmd_sweep(sweep_args, sweep_wc, sweep_out);
    if (*gen) {
      if (!mix.empty()) std::copy(mix.begin(), mix.end(), spec.mix.begin());
      return cmd_gen_data(spec, gen_out);
    }
    if (*verify) return cmd_verify(verify_trials, verify_seed);
  } catch (const dao::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const dao::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const dao::DomainError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const dao::Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
