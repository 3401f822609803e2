#include "dao/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "dao/binary_io.hpp"
#include "dao/error.hpp"
#include "dao/losses.hpp"

namespace dao {

namespace {

constexpr std::string_view kCheckpointMagic = "DAO1";
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::size_t kEvalBatch = 64;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream indices for derive_seed; the split uses the config seed directly.
enum SeedStream : std::uint64_t { kModelStream = 1, kDaoStream = 2, kDropoutStream = 3, kShuffleStream = 4 };

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sanitize(std::string text) {
  for (auto& c : text) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return text;
}

AdamOptions model_adam_options(const TrainConfig& config) {
  AdamOptions o;
  o.eps = config.eps;
  o.weight_decay = config.weight_decay;
  o.variant = AdamVariant::adamw;
  return o;
}

bool finite(double v) { return std::isfinite(v); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw FormatError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string step_csv_header() {
  return "epoch,batch,step,lambda_r,lambda_c,w_r,w_c,L_r,L_c,L_imb,L_mtl,alpha,beta,lr,status,diagnostic";
}

std::string to_csv_row(const StepRecord& r) {
  std::ostringstream out;
  out << r.epoch << ',' << r.batch << ',' << r.step << ',' << num(r.lambda_r) << ',' << num(r.lambda_c) << ','
      << num(r.w_r) << ',' << num(r.w_c) << ',' << num(r.loss_r) << ',' << num(r.loss_c) << ',' << num(r.loss_imb)
      << ',' << num(r.loss_mtl) << ',' << num(r.alpha) << ',' << num(r.beta) << ',' << num(r.lr) << ',' << r.status
      << ',' << sanitize(r.diagnostic);
  return out.str();
}

std::string epoch_csv_header() {
  return "epoch,steps,aborted,mean_L_mtl,mean_L_r,mean_L_c,mean_w_c,val_mse,val_mae,val_rmse,val_r2,val_acc,"
         "val_weighted_precision,val_weighted_recall,val_weighted_f1";
}

std::string to_csv_row(const EpochRecord& r) {
  std::ostringstream out;
  out << r.epoch << ',' << r.steps << ',' << r.aborted << ',' << num(r.mean_loss_mtl) << ',' << num(r.mean_loss_r)
      << ',' << num(r.mean_loss_c) << ',' << num(r.mean_w_c);
  for (const auto& [key, value] : r.val.to_key_values()) out << ',' << num(value);
  return out.str();
}

// ---- Trainer --------------------------------------------------------------

Trainer::Trainer(const TrainConfig& config, std::size_t steps_per_epoch)
    : config_(config),
      model_(config.model, derive_seed(config.seed, kModelStream)),
      dao_(config.dao, derive_seed(config.seed, kDaoStream)),
      optimizer_(model_adam_options(config)),
      schedule_{config.base_lr, config.warmup, config.epochs * steps_per_epoch},
      dropout_rng_(derive_seed(config.seed, kDropoutStream)),
      steps_per_epoch_(steps_per_epoch) {
  config_.validate();
}

double Trainer::grad_norm() const {
  double sq = 0.0;
  for (const auto& e : model_.params().entries()) {
    if (!e.trainable) continue;
    if (config_.grad_norm_scope == GradNormScope::trunk && !SentimentModel::is_backbone(e.name)) continue;
    for (double g : e.value.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

StepRecord Trainer::begin_record() const {
  StepRecord r;
  r.step = global_step_;
  r.lr = schedule_.lr_at(global_step_);
  return r;
}

StepRecord Trainer::abort(StepRecord record, const std::string& why) {
  record.status = "aborted";
  record.diagnostic = why;
  model_.params().zero_grad();
  dao_.params().zero_grad();
  ++consecutive_aborts_;
  ++global_step_;
  return record;
}

void Trainer::finish(StepRecord& record) {
  consecutive_aborts_ = 0;
  ++global_step_;
  (void)record;
}

StepRecord Trainer::train_step(const Batch& batch) {
  switch (config_.mode) {
    case TrainMode::dao:
      return train_step_dao(batch);
    case TrainMode::constant:
      return train_step_constant(batch, config_.w_r, config_.w_c);
    case TrainMode::single_task:
      return train_step_single(batch);
  }
  throw ConfigError("unknown training mode");
}

StepRecord Trainer::train_step_dao(const Batch& batch) {
  if (batch.size() == 0) throw ContractError("train_step_dao: empty batch");
  StepRecord rec = begin_record();
  auto& params = model_.params();
  params.zero_grad();
  dao_.params().zero_grad();
  try {
    // (1)-(2) forward both heads, task losses.
    Tensor hidden = model_.encode(batch, Mode::train, dropout_rng_);
    Tensor scores = model_.regress(hidden);
    Tensor logits = model_.classify(hidden, Mode::train, dropout_rng_);
    Tensor loss_r = mse_loss(scores, Tensor::vector(batch.scores));
    ClassLosses ce = ce_loss_per_class(logits, batch.labels);
    rec.loss_r = loss_r.item();
    rec.loss_c = ce.total.item();
    if (!finite(rec.loss_r) || !finite(rec.loss_c)) return abort(rec, "non-finite task loss");

    // (3) per-task gradient norms over the shared parameters.
    ++dao_computations_;
    loss_r.backward();
    const double norm_r = grad_norm();
    params.zero_grad();
    ce.total.backward();
    const double norm_c = grad_norm();
    params.zero_grad();
    if (!finite(norm_r) || !finite(norm_c)) return abort(rec, "non-finite task gradient norm");

    // (4) batch class statistics and the imbalance loss.
    rec.alpha = dao_.alpha();
    rec.beta = dao_.beta();
    const auto stats = class_stats(batch.labels);
    const auto weights = class_weights(stats, rec.beta);
    Tensor loss_imb = imbalanced_loss(stats, weights, ce.per_class, rec.alpha);
    rec.loss_imb = loss_imb.item();
    if (!finite(rec.loss_imb)) return abort(rec, "non-finite imbalance loss");

    // (5)-(6) balancing coefficients and task weights. The DAO input is a
    // constant: task weights receive gradients, the model does not through it.
    ++dao_computations_;
    const auto lambda = lambda_coeffs(norm_r, norm_c);
    rec.lambda_r = lambda.regression;
    rec.lambda_c = lambda.classification;
    if (lambda.degenerate) rec.status = "lambda_fallback";
    ++dao_computations_;
    TaskWeights w = dao_.forward(Tensor::vector({lambda.regression * rec.loss_r, lambda.classification * rec.loss_imb}));
    rec.w_r = w.regression.item();
    rec.w_c = w.classification.item();

    // (7)-(8) total loss and one combined backward pass.
    Tensor loss = total_loss(lambda.regression, lambda.classification, w.regression, w.classification, loss_r, loss_imb);
    rec.loss_mtl = loss.item();
    if (!finite(rec.loss_mtl)) return abort(rec, "non-finite total loss");
    loss.backward();
    GradientMap model_grads = collect_gradients(params);
    GradientMap dao_grads = collect_gradients(dao_.params());
    if (!model_grads.all_finite() || !dao_grads.all_finite()) return abort(rec, "non-finite gradient");

    const auto per_class = ce.per_class_values();
    const double d_alpha = alpha_grad(lambda.classification, rec.w_c, weights, stats);
    const double d_beta = beta_grad(lambda.classification, rec.w_c, stats, per_class, rec.alpha, rec.beta);
    if (!finite(d_alpha) || !finite(d_beta)) return abort(rec, "non-finite alpha/beta gradient");

    // (9)-(10) updates.
    optimizer_.step(params, model_grads, rec.lr);
    ++dao_computations_;
    dao_.step(dao_grads, d_alpha, d_beta);
  } catch (const NumericError& e) {
    return abort(rec, e.what());
  }
  finish(rec);
  return rec;
}

StepRecord Trainer::train_step_constant(const Batch& batch, double w_r, double w_c) {
  if (batch.size() == 0) throw ContractError("train_step_constant: empty batch");
  StepRecord rec = begin_record();
  rec.w_r = w_r;
  rec.w_c = w_c;
  rec.loss_imb = kNaN;
  rec.alpha = kNaN;
  rec.beta = kNaN;
  auto& params = model_.params();
  params.zero_grad();
  try {
    Tensor hidden = model_.encode(batch, Mode::train, dropout_rng_);
    Tensor scores = model_.regress(hidden);
    Tensor logits = model_.classify(hidden, Mode::train, dropout_rng_);
    Tensor loss_r = mse_loss(scores, Tensor::vector(batch.scores));
    ClassLosses ce = ce_loss_per_class(logits, batch.labels);
    rec.loss_r = loss_r.item();
    rec.loss_c = ce.total.item();
    Tensor loss = scale(loss_r, w_r) + scale(ce.total, w_c);
    rec.loss_mtl = loss.item();
    if (!finite(rec.loss_mtl)) return abort(rec, "non-finite total loss");
    GradientMap grads = backward(loss, params);
    if (!grads.all_finite()) return abort(rec, "non-finite gradient");
    optimizer_.step(params, grads, rec.lr);
  } catch (const NumericError& e) {
    return abort(rec, e.what());
  }
  finish(rec);
  return rec;
}

StepRecord Trainer::train_step_single(const Batch& batch) {
  if (batch.size() == 0) throw ContractError("train_step_single: empty batch");
  const bool regression = config_.single_task_head == SingleTaskHead::regression;
  StepRecord rec = begin_record();
  rec.w_r = regression ? 1.0 : 0.0;
  rec.w_c = regression ? 0.0 : 1.0;
  rec.loss_imb = kNaN;
  rec.alpha = kNaN;
  rec.beta = kNaN;
  auto& params = model_.params();
  params.zero_grad();
  try {
    Tensor hidden = model_.encode(batch, Mode::train, dropout_rng_);
    Tensor scores = model_.regress(hidden);
    Tensor logits = model_.classify(hidden, Mode::train, dropout_rng_);
    Tensor loss_r = mse_loss(scores, Tensor::vector(batch.scores));
    ClassLosses ce = ce_loss_per_class(logits, batch.labels);
    rec.loss_r = loss_r.item();
    rec.loss_c = ce.total.item();
    Tensor loss = regression ? loss_r : ce.total;
    rec.loss_mtl = loss.item();
    if (!finite(rec.loss_mtl)) return abort(rec, "non-finite loss");
    GradientMap grads = backward(loss, params);
    if (!grads.all_finite()) return abort(rec, "non-finite gradient");
    optimizer_.step(params, grads, rec.lr);
  } catch (const NumericError& e) {
    return abort(rec, e.what());
  }
  finish(rec);
  return rec;
}

Trainer::Predictions Trainer::predict(const TokenizedCorpus& corpus) const {
  Predictions out;
  Rng unused(0);
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < corpus.size(); start += kEvalBatch) {
    rows.clear();
    for (std::size_t i = start; i < std::min(corpus.size(), start + kEvalBatch); ++i) rows.push_back(i);
    const Batch batch = make_batch(corpus, rows);
    Tensor hidden = model_.encode(batch, Mode::eval, unused).detach();
    Tensor scores = model_.regress(hidden);
    Tensor logits = model_.classify(hidden, Mode::eval, unused);
    const std::size_t k = logits.dim(1);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      out.scores.push_back(scores[i]);
      const auto row = logits.data().subspan(i * k, k);
      out.classes.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
    }
  }
  return out;
}

MetricReport Trainer::evaluate(const TokenizedCorpus& corpus) const {
  if (corpus.size() == 0) throw ContractError("evaluate: empty corpus");
  Predictions pred = predict(corpus);
  if (config_.clamp_predictions) {
    for (auto& s : pred.scores) s = std::clamp(s, -1.0, 1.0);
  }
  MetricReport report;
  report.regression = regression_metrics(pred.scores, corpus.scores);
  ConfusionMatrix cm(config_.model.num_classes);
  for (std::size_t i = 0; i < corpus.size(); ++i) cm.add(corpus.labels[i], pred.classes[i]);
  report.classification = classification_metrics(cm);
  return report;
}

std::string Trainer::checkpoint(std::size_t next_epoch) const {
  ByteWriter w;
  w.raw(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.str(config_.to_text());
  w.u64(steps_per_epoch_);
  w.u64(next_epoch);
  w.u64(global_step_);
  w.u64(consecutive_aborts_);
  w.u64(dao_computations_);
  const auto& entries = model_.params().entries();
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) w.tensor(e.name, e.value.shape(), e.value.data());
  w.u64(optimizer_.timestep());
  w.u32(static_cast<std::uint32_t>(optimizer_.moments().size()));
  for (const auto& m : optimizer_.moments()) {
    w.str(m.name);
    w.doubles(m.m);
    w.doubles(m.v);
  }
  w.str(dao_.snapshot());
  w.str(dropout_rng_.state());
  return w.take();
}

std::pair<Trainer, std::size_t> Trainer::from_checkpoint(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.raw(kCheckpointMagic.size()) != kCheckpointMagic) throw FormatError("not a checkpoint (bad magic)");
  const auto version = r.u32();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const TrainConfig config = parse_config(r.str());
  const auto steps_per_epoch = r.u64();
  const auto next_epoch = r.u64();

  Trainer trainer(config, steps_per_epoch);
  trainer.global_step_ = r.u64();
  trainer.consecutive_aborts_ = r.u64();
  trainer.dao_computations_ = r.u64();

  auto& params = trainer.model_.params();
  const auto count = r.u32();
  if (count != params.size()) throw FormatError("checkpoint parameter count does not match the model");
  for (std::uint32_t i = 0; i < count; ++i) {
    auto t = r.tensor();
    if (!params.contains(t.name)) throw FormatError("checkpoint has unknown parameter '" + t.name + "'");
    Tensor& p = params.get(t.name);
    if (p.shape() != t.shape) throw FormatError("checkpoint parameter '" + t.name + "' has the wrong shape");
    std::copy(t.values.begin(), t.values.end(), p.mutable_data().begin());
  }
  const auto timestep = r.u64();
  const auto n_moments = r.u32();
  std::vector<AdamOptimizer::Moments> moments;
  for (std::uint32_t i = 0; i < n_moments; ++i) {
    AdamOptimizer::Moments m;
    m.name = r.str();
    m.m = r.doubles();
    m.v = r.doubles();
    if (!params.contains(m.name) || params.get(m.name).numel() != m.m.size()) {
      throw FormatError("checkpoint optimizer state does not match parameter '" + m.name + "'");
    }
    moments.push_back(std::move(m));
  }
  trainer.optimizer_.restore(timestep, std::move(moments));
  trainer.dao_ = DaoController::restore(r.str());
  trainer.dropout_rng_.set_state(r.str());
  if (!r.at_end()) throw FormatError("trailing bytes after checkpoint");
  return {std::move(trainer), next_epoch};
}

std::uint64_t parameter_fingerprint(const ParameterStore& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& e : params.entries()) {
    for (double v : e.value.data()) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xFF;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

// ---- run / sweep ----------------------------------------------------------

std::pair<Corpus, Corpus> prepare_data(const TrainConfig& config) {
  Corpus corpus = config.data_path.empty() ? synth_generate(config.synth) : load_corpus(config.data_path);
  return split(corpus, config.split_ratio, config.seed);
}

RunResult run(const TrainConfig& config, const RunOptions& options) {
  std::optional<Trainer> trainer;
  std::size_t first_epoch = 1;
  if (options.resume_from) {
    // A resumed run continues with the checkpoint's own configuration.
    auto [restored, next_epoch] = Trainer::from_checkpoint(read_file(*options.resume_from));
    trainer.emplace(std::move(restored));
    first_epoch = next_epoch;
  } else {
    config.validate();
  }
  const TrainConfig cfg = trainer ? trainer->config() : config;

  const auto [train, val] = prepare_data(cfg);
  const TokenizerOptions tok{cfg.model.vocab_size, cfg.max_len};
  const TokenizedCorpus train_tok = tokenize_corpus(train, tok);
  const TokenizedCorpus val_tok = tokenize_corpus(val, tok);
  const std::size_t steps_per_epoch = (train_tok.size() + cfg.batch_size - 1) / cfg.batch_size;
  if (!trainer) trainer.emplace(cfg, steps_per_epoch);

  RunResult result;
  result.train_size = train_tok.size();
  result.val_size = val_tok.size();
  result.initial_fingerprint = parameter_fingerprint(trainer->model().params());

  const bool write = !options.out_dir.empty();
  std::ofstream step_log, epoch_log;
  if (write) {
    std::filesystem::create_directories(options.out_dir);
    step_log.open(options.out_dir / "steps.csv");
    epoch_log.open(options.out_dir / "epochs.csv");
    if (!step_log || !epoch_log) throw FormatError("cannot open log files in " + options.out_dir.string());
    step_log << step_csv_header() << '\n';
    epoch_log << epoch_csv_header() << '\n';
  }

  const std::uint64_t shuffle_seed = derive_seed(cfg.seed, kShuffleStream);
  for (std::size_t epoch = first_epoch; epoch <= cfg.epochs; ++epoch) {
    const auto batches = make_batches(train_tok, cfg.batch_size, shuffle_seed, epoch, true);
    EpochRecord summary;
    summary.epoch = epoch;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      StepRecord rec = trainer->train_step(batches[b]);
      rec.epoch = epoch;
      rec.batch = b;
      if (write) step_log << to_csv_row(rec) << '\n';
      ++summary.steps;
      if (rec.aborted()) {
        ++summary.aborted;
      } else {
        summary.mean_loss_mtl += rec.loss_mtl;
        summary.mean_loss_r += rec.loss_r;
        summary.mean_loss_c += rec.loss_c;
        summary.mean_w_c += rec.w_c;
      }
      result.steps.push_back(std::move(rec));
      if (trainer->should_halt()) {
        if (write) {
          step_log.flush();
          epoch_log.flush();
        }
        throw NumericError("training halted after " + std::to_string(Trainer::kMaxConsecutiveAborts) +
                           " consecutive aborted steps (epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b) + ")");
      }
    }
    const double good = static_cast<double>(summary.steps - summary.aborted);
    if (good > 0) {
      summary.mean_loss_mtl /= good;
      summary.mean_loss_r /= good;
      summary.mean_loss_c /= good;
      summary.mean_w_c /= good;
    }
    summary.val = trainer->evaluate(val_tok);
    if (write) {
      epoch_log << to_csv_row(summary) << '\n';
      step_log.flush();
      epoch_log.flush();
      if (options.write_checkpoints) {
        const std::string bytes = trainer->checkpoint(epoch + 1);
        write_file(options.out_dir / "checkpoint.bin", bytes);
        if (cfg.keep_epoch_checkpoints) {
          write_file(options.out_dir / ("checkpoint_epoch_" + std::to_string(epoch) + ".bin"), bytes);
        }
      }
    }
    result.epochs.push_back(summary);
  }

  result.final_report = result.epochs.empty() ? trainer->evaluate(val_tok) : result.epochs.back().val;
  if (write && result.epochs.empty() && options.write_checkpoints) {
    write_file(options.out_dir / "checkpoint.bin", trainer->checkpoint(first_epoch));
  }
  result.dao_computations = trainer->dao_computations();
  return result;
}

std::vector<SweepRow> sweep(const TrainConfig& config, const std::vector<double>& wc_values,
                            const std::filesystem::path& out_dir) {
  if (wc_values.empty()) throw ConfigError("sweep needs at least one w_c value");
  std::vector<SweepRow> rows;
  auto sub_options = [&](const std::string& name) {
    RunOptions o;
    if (!out_dir.empty()) o.out_dir = out_dir / name;
    o.write_checkpoints = false;
    return o;
  };
  for (double wc : wc_values) {
    TrainConfig c = config;
    c.mode = TrainMode::constant;
    c.w_c = wc;
    c.w_r = 1.0 - wc;
    char label[32];
    std::snprintf(label, sizeof label, "wc_%g", wc);
    const RunResult r = run(c, sub_options(label));
    rows.push_back({"constant", wc, r.final_report.regression.mse, r.final_report.classification.accuracy,
                    r.initial_fingerprint});
  }
  TrainConfig c = config;
  c.mode = TrainMode::dao;
  const RunResult r = run(c, sub_options("dao"));
  const double last_wc = r.epochs.empty() ? kNaN : r.epochs.back().mean_w_c;
  rows.push_back({"dao", last_wc, r.final_report.regression.mse, r.final_report.classification.accuracy,
                  r.initial_fingerprint});

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir / "sweep.csv");
    out << "label,w_c,mse,acc,initial_fingerprint\n";
    for (const auto& row : rows) {
      out << row.label << ',' << num(row.w_c) << ',' << num(row.mse) << ',' << num(row.acc) << ','
          << row.initial_fingerprint << '\n';
    }
  }
  return rows;
}

}  // namespace dao
