#include "dao/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dao/error.hpp"

namespace dao {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("config key '" + std::string(key) + "': expected a number, got '" + std::string(value) + "'");
  }
  return out;
}

std::uint64_t parse_uint(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("config key '" + std::string(key) + "': expected a non-negative integer, got '" +
                      std::string(value) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true/false, got '" + std::string(value) + "'");
}

std::array<double, 5> parse_mix(std::string_view key, std::string_view value) {
  std::array<double, 5> mix{};
  std::size_t i = 0;
  while (true) {
    const auto comma = value.find(',');
    const auto item = trim(value.substr(0, comma));
    if (i >= mix.size()) throw ConfigError("config key '" + std::string(key) + "': expected 5 proportions");
    mix[i++] = parse_double(key, item);
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  if (i != mix.size()) throw ConfigError("config key '" + std::string(key) + "': expected 5 proportions");
  return mix;
}

}  // namespace

std::string_view to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::dao:
      return "dao";
    case TrainMode::constant:
      return "constant";
    case TrainMode::single_task:
      return "single_task";
  }
  return "dao";
}

TrainMode parse_mode(std::string_view text) {
  if (text == "dao") return TrainMode::dao;
  if (text == "constant") return TrainMode::constant;
  if (text == "single_task" || text == "single-task") return TrainMode::single_task;
  throw ConfigError("unknown mode '" + std::string(text) + "' (expected dao, constant or single_task)");
}

void set_config_value(TrainConfig& c, std::string_view key, std::string_view raw) {
  const auto value = trim(raw);
  if (key == "mode") {
    c.mode = parse_mode(value);
  } else if (key == "single_task_head") {
    if (value == "regression") {
      c.single_task_head = SingleTaskHead::regression;
    } else if (value == "classification") {
      c.single_task_head = SingleTaskHead::classification;
    } else {
      throw ConfigError("single_task_head must be regression or classification");
    }
  } else if (key == "w_r") {
    c.w_r = parse_double(key, value);
  } else if (key == "w_c") {
    c.w_c = parse_double(key, value);
  } else if (key == "epochs") {
    c.epochs = parse_uint(key, value);
  } else if (key == "batch_size") {
    c.batch_size = parse_uint(key, value);
  } else if (key == "base_lr") {
    c.base_lr = parse_double(key, value);
  } else if (key == "eps") {
    c.eps = parse_double(key, value);
  } else if (key == "warmup") {
    c.warmup = parse_uint(key, value);
  } else if (key == "weight_decay") {
    c.weight_decay = parse_double(key, value);
  } else if (key == "grad_norm_scope") {
    if (value == "trunk") {
      c.grad_norm_scope = GradNormScope::trunk;
    } else if (value == "all") {
      c.grad_norm_scope = GradNormScope::all;
    } else {
      throw ConfigError("grad_norm_scope must be trunk or all");
    }
  } else if (key == "vocab_size") {
    c.model.vocab_size = parse_uint(key, value);
  } else if (key == "d_embed") {
    c.model.d_embed = parse_uint(key, value);
  } else if (key == "d_hidden") {
    c.model.d_hidden = parse_uint(key, value);
  } else if (key == "d_mid") {
    c.model.d_mid = parse_uint(key, value);
  } else if (key == "head_dropout") {
    c.model.head_dropout = parse_double(key, value);
  } else if (key == "lora_rank") {
    c.model.lora_rank = parse_uint(key, value);
  } else if (key == "lora_alpha") {
    c.model.lora_alpha = parse_double(key, value);
  } else if (key == "lora_dropout") {
    c.model.lora_dropout = parse_double(key, value);
  } else if (key == "max_len") {
    c.max_len = parse_uint(key, value);
  } else if (key == "dao_hidden") {
    c.dao.hidden = parse_uint(key, value);
  } else if (key == "dao_lr") {
    c.dao.lr = parse_double(key, value);
  } else if (key == "alpha_init") {
    c.dao.alpha_init = parse_double(key, value);
  } else if (key == "beta_init") {
    c.dao.beta_init = parse_double(key, value);
  } else if (key == "alpha_min") {
    c.dao.alpha_min = parse_double(key, value);
  } else if (key == "alpha_max") {
    c.dao.alpha_max = parse_double(key, value);
  } else if (key == "beta_min") {
    c.dao.beta_min = parse_double(key, value);
  } else if (key == "beta_max") {
    c.dao.beta_max = parse_double(key, value);
  } else if (key == "dao_zero_init_output") {
    c.dao.zero_init_output = parse_bool(key, value);
  } else if (key == "seed") {
    c.seed = parse_uint(key, value);
  } else if (key == "split_ratio") {
    c.split_ratio = parse_double(key, value);
  } else if (key == "data") {
    c.data_path = std::string(value);
  } else if (key == "synth_n") {
    c.synth.n = parse_uint(key, value);
  } else if (key == "synth_mix") {
    c.synth.mix = parse_mix(key, value);
  } else if (key == "synth_noise") {
    c.synth.noise = parse_double(key, value);
  } else if (key == "synth_seed") {
    c.synth.seed = parse_uint(key, value);
  } else if (key == "clamp_predictions") {
    c.clamp_predictions = parse_bool(key, value);
  } else if (key == "keep_epoch_checkpoints") {
    c.keep_epoch_checkpoints = parse_bool(key, value);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

TrainConfig parse_config(std::string_view text) {
  TrainConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  config.validate();
  return config;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void TrainConfig::validate() const {
  if (mode == TrainMode::constant) {
    if (w_r < 0.0 || w_c < 0.0 || w_r > 1.0 || w_c > 1.0 || std::abs(w_r + w_c - 1.0) > 1e-9) {
      throw ConfigError("constant mode needs w_r + w_c = 1 with both in [0, 1]");
    }
  }
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(base_lr > 0.0) || !(eps > 0.0) || !(dao.lr > 0.0)) throw ConfigError("learning rates and eps must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split_ratio must lie in (0, 1)");
  if (max_len == 0) throw ConfigError("max_len must be positive");
  if (model.lora_rank > 0 && !(model.lora_dropout >= 0.0 && model.lora_dropout < 1.0)) {
    throw ConfigError("lora_dropout must lie in [0, 1)");
  }
  if (!(model.head_dropout >= 0.0 && model.head_dropout < 1.0)) throw ConfigError("head_dropout must lie in [0, 1)");
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  out << "mode = " << to_string(mode) << '\n';
  out << "single_task_head = " << (single_task_head == SingleTaskHead::regression ? "regression" : "classification")
      << '\n';
  out << "w_r = " << fmt_double(w_r) << '\n';
  out << "w_c = " << fmt_double(w_c) << '\n';
  out << "epochs = " << epochs << '\n';
  out << "batch_size = " << batch_size << '\n';
  out << "base_lr = " << fmt_double(base_lr) << '\n';
  out << "eps = " << fmt_double(eps) << '\n';
  out << "warmup = " << warmup << '\n';
  out << "weight_decay = " << fmt_double(weight_decay) << '\n';
  out << "grad_norm_scope = " << (grad_norm_scope == GradNormScope::trunk ? "trunk" : "all") << '\n';
  out << "vocab_size = " << model.vocab_size << '\n';
  out << "d_embed = " << model.d_embed << '\n';
  out << "d_hidden = " << model.d_hidden << '\n';
  out << "d_mid = " << model.d_mid << '\n';
  out << "head_dropout = " << fmt_double(model.head_dropout) << '\n';
  out << "lora_rank = " << model.lora_rank << '\n';
  out << "lora_alpha = " << fmt_double(model.lora_alpha) << '\n';
  out << "lora_dropout = " << fmt_double(model.lora_dropout) << '\n';
  out << "max_len = " << max_len << '\n';
  out << "dao_hidden = " << dao.hidden << '\n';
  out << "dao_lr = " << fmt_double(dao.lr) << '\n';
  out << "alpha_init = " << fmt_double(dao.alpha_init) << '\n';
  out << "beta_init = " << fmt_double(dao.beta_init) << '\n';
  out << "alpha_min = " << fmt_double(dao.alpha_min) << '\n';
  out << "alpha_max = " << fmt_double(dao.alpha_max) << '\n';
  out << "beta_min = " << fmt_double(dao.beta_min) << '\n';
  out << "beta_max = " << fmt_double(dao.beta_max) << '\n';
  out << "dao_zero_init_output = " << (dao.zero_init_output ? "true" : "false") << '\n';
  out << "seed = " << seed << '\n';
  out << "split_ratio = " << fmt_double(split_ratio) << '\n';
  if (!data_path.empty()) out << "data = " << data_path << '\n';
  out << "synth_n = " << synth.n << '\n';
  out << "synth_mix = ";
  for (std::size_t i = 0; i < synth.mix.size(); ++i) out << (i ? "," : "") << fmt_double(synth.mix[i]);
  out << '\n';
  out << "synth_noise = " << fmt_double(synth.noise) << '\n';
  out << "synth_seed = " << synth.seed << '\n';
  out << "clamp_predictions = " << (clamp_predictions ? "true" : "false") << '\n';
  out << "keep_epoch_checkpoints = " << (keep_epoch_checkpoints ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace dao
