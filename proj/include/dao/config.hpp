#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "dao/controller.hpp"
#include "dao/data.hpp"
#include "dao/model.hpp"

namespace dao {

enum class TrainMode { dao, constant, single_task };
enum class SingleTaskHead { regression, classification };
enum class GradNormScope { trunk, all };

/// Everything needed to reproduce a run. Serialized as flat `key = value`
/// lines (see to_text / parse_config); '#' starts a comment.
struct TrainConfig {
  TrainMode mode = TrainMode::dao;
  SingleTaskHead single_task_head = SingleTaskHead::regression;
  /// Constant-mode task weights; must sum to 1.
  double w_r = 0.9;
  double w_c = 0.1;

  std::size_t epochs = 100;
  std::size_t batch_size = 10;
  double base_lr = 1e-5;
  double eps = 1e-8;
  std::size_t warmup = 100;
  double weight_decay = 0.01;
  GradNormScope grad_norm_scope = GradNormScope::trunk;

  ModelConfig model;
  std::size_t max_len = 512;
  DaoOptions dao;

  std::uint64_t seed = 42;
  double split_ratio = 0.9;

  /// Corpus file; when empty the synthetic generator is used.
  std::string data_path;
  SynthSpec synth;

  /// Clamp predicted scores to [-1, 1] when computing metrics.
  bool clamp_predictions = false;
  /// Keep checkpoint_epoch_<e>.bin for every epoch in addition to checkpoint.bin.
  bool keep_epoch_checkpoints = false;

  /// Throws ConfigError on inconsistent values.
  void validate() const;
  std::string to_text() const;
};

/// Parses `key = value` text, starting from the defaults. Unknown keys and
/// malformed values throw ConfigError.
TrainConfig parse_config(std::string_view text);
TrainConfig load_config(const std::string& path);

/// Applies a single `key`/`value` override.
void set_config_value(TrainConfig& config, std::string_view key, std::string_view value);

std::string_view to_string(TrainMode mode);
TrainMode parse_mode(std::string_view text);

}  // namespace dao
