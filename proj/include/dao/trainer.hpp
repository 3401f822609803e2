#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dao/config.hpp"
#include "dao/controller.hpp"
#include "dao/data.hpp"
#include "dao/metrics.hpp"
#include "dao/model.hpp"
#include "dao/optim.hpp"

namespace dao {

/// One row of the per-batch training log.
struct StepRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  std::size_t step = 0;
  double lambda_r = 1.0;
  double lambda_c = 1.0;
  double w_r = 0.0;
  double w_c = 0.0;
  double loss_r = 0.0;
  double loss_c = 0.0;
  double loss_imb = 0.0;
  double loss_mtl = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double lr = 0.0;
  /// "ok", "lambda_fallback" (both gradient norms vanished) or "aborted".
  std::string status = "ok";
  std::string diagnostic;

  bool aborted() const { return status == "aborted"; }
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  std::size_t aborted = 0;
  double mean_loss_mtl = 0.0;
  double mean_loss_r = 0.0;
  double mean_loss_c = 0.0;
  double mean_w_c = 0.0;
  MetricReport val;
};

/// CSV header of the per-step log.
std::string step_csv_header();
std::string to_csv_row(const StepRecord& record);
std::string epoch_csv_header();
std::string to_csv_row(const EpochRecord& record);

/// Owns the model, the DAO controller, both optimizers and the dropout
/// stream for one training run.
class Trainer {
 public:
  static constexpr std::size_t kMaxConsecutiveAborts = 3;

  Trainer(const TrainConfig& config, std::size_t steps_per_epoch);

  /// Dispatches on the configured mode.
  StepRecord train_step(const Batch& batch);

  /// Gradient-norm balanced, DAO-weighted step with the imbalance loss.
  StepRecord train_step_dao(const Batch& batch);
  /// Fixed-weight step: w_r * L_r + w_c * L_c.
  StepRecord train_step_constant(const Batch& batch, double w_r, double w_c);
  /// Single-head step (regression or classification per config).
  StepRecord train_step_single(const Batch& batch);

  /// Eval-mode metrics over a whole corpus; the predicted class is the logit argmax.
  MetricReport evaluate(const TokenizedCorpus& corpus) const;

  /// Regression predictions and logits for a corpus, in eval mode.
  struct Predictions {
    std::vector<double> scores;
    std::vector<int> classes;
  };
  Predictions predict(const TokenizedCorpus& corpus) const;

  std::string checkpoint(std::size_t next_epoch) const;
  /// Rebuilds a trainer from checkpoint bytes; returns it with the epoch to resume at.
  static std::pair<Trainer, std::size_t> from_checkpoint(std::string_view bytes);

  const TrainConfig& config() const { return config_; }
  SentimentModel& model() { return model_; }
  const SentimentModel& model() const { return model_; }
  DaoController& controller() { return dao_; }
  const DaoController& controller() const { return dao_; }
  const LrSchedule& schedule() const { return schedule_; }
  std::size_t global_step() const { return global_step_; }
  std::size_t consecutive_aborts() const { return consecutive_aborts_; }
  bool should_halt() const { return consecutive_aborts_ >= kMaxConsecutiveAborts; }
  /// Gradient-norm passes, lambda computations, and DAO forward/step calls made so far.
  std::uint64_t dao_computations() const { return dao_computations_; }

 private:
  double grad_norm() const;
  StepRecord begin_record() const;
  StepRecord abort(StepRecord record, const std::string& why);
  void finish(StepRecord& record);

  TrainConfig config_;
  SentimentModel model_;
  DaoController dao_;
  AdamOptimizer optimizer_;
  LrSchedule schedule_;
  Rng dropout_rng_;
  std::size_t steps_per_epoch_;
  std::size_t global_step_ = 0;
  std::size_t consecutive_aborts_ = 0;
  std::uint64_t dao_computations_ = 0;
};

/// 64-bit fingerprint of a store's parameter values (FNV-1a over the bytes).
std::uint64_t parameter_fingerprint(const ParameterStore& params);

struct RunOptions {
  /// Logs and checkpoints go here; nothing is written when empty.
  std::filesystem::path out_dir;
  /// Resume from this checkpoint instead of starting fresh.
  std::optional<std::filesystem::path> resume_from;
  bool write_checkpoints = true;
};

struct RunResult {
  MetricReport final_report;
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  std::uint64_t initial_fingerprint = 0;
  std::uint64_t dao_computations = 0;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
};

/// Loads or generates the corpus and returns the seeded (train, val) split.
std::pair<Corpus, Corpus> prepare_data(const TrainConfig& config);

/// Full training run: epochs x batches steps, evaluation after every epoch,
/// CSV logs (steps.csv, epochs.csv) and checkpoint.bin in the output directory.
/// Throws NumericError after kMaxConsecutiveAborts aborted steps in a row,
/// after flushing the partial logs.
RunResult run(const TrainConfig& config, const RunOptions& options = {});

struct SweepRow {
  std::string label;  // "constant" or "dao"
  double w_c = 0.0;
  double mse = 0.0;
  double acc = 0.0;
  std::uint64_t initial_fingerprint = 0;
};

/// One constant-weight run per w_c (w_r = 1 - w_c) plus one DAO run, all
/// from the same seeds. Writes sweep.csv when an output directory is given.
std::vector<SweepRow> sweep(const TrainConfig& config, const std::vector<double>& wc_values,
                            const std::filesystem::path& out_dir = {});

}  // namespace dao
