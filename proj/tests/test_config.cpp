#include <doctest.h>

#include "dao/config.hpp"
#include "dao/error.hpp"

using namespace dao;

TEST_CASE("defaults") {
  const TrainConfig c;
  CHECK(c.mode == TrainMode::dao);
  CHECK(c.w_r == 0.9);
  CHECK(c.w_c == 0.1);
  CHECK(c.epochs == 100);
  CHECK(c.batch_size == 10);
  CHECK(c.base_lr == 1e-5);
  CHECK(c.eps == 1e-8);
  CHECK(c.warmup == 100);
  CHECK(c.dao.lr == 1e-3);
  CHECK(c.seed == 42);
  CHECK(c.max_len == 512);
  CHECK(c.model.lora_rank == 0);
  CHECK(c.model.lora_dropout == 0.05);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("parse config text") {
  const auto c = parse_config(
      "# desk run\n"
      "mode = constant\n"
      "w_c = 0.25   # classification weight\n"
      "w_r = 0.75\n"
      "\n"
      "epochs=3\n"
      "synth_mix = 0.1, 0.2, 0.4, 0.2, 0.1\n"
      "lora_rank = 8\n"
      "grad_norm_scope = all\n"
      "dao_zero_init_output = false\n");
  CHECK(c.mode == TrainMode::constant);
  CHECK(c.w_c == 0.25);
  CHECK(c.epochs == 3);
  CHECK(c.synth.mix[2] == 0.4);
  CHECK(c.model.lora_rank == 8);
  CHECK(c.grad_norm_scope == GradNormScope::all);
  CHECK_FALSE(c.dao.zero_init_output);
  CHECK(parse_mode("single-task") == TrainMode::single_task);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("epochs\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("epochs = -2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("base_lr = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("synth_mix = 0.5, 0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("mode = both\n"), ConfigError);

  TrainConfig c;
  c.mode = TrainMode::constant;
  c.w_c = 0.3;
  c.w_r = 0.9;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  TrainConfig z;
  z.base_lr = 0.0;
  CHECK_THROWS_AS(z.validate(), ConfigError);
}

TEST_CASE("text round trip preserves every value") {
  TrainConfig c;
  c.mode = TrainMode::single_task;
  c.single_task_head = SingleTaskHead::classification;
  c.base_lr = 3.3e-4;
  c.w_c = 0.1 + 0.2;
  c.w_r = 1.0 - c.w_c;
  c.synth.noise = 0.123456789;
  c.data_path = "corpus.jsonl";
  c.keep_epoch_checkpoints = true;
  const auto back = parse_config(c.to_text());
  CHECK(back.to_text() == c.to_text());
  CHECK(back.base_lr == c.base_lr);
  CHECK(back.w_c == c.w_c);
  CHECK(back.data_path == "corpus.jsonl");
}
