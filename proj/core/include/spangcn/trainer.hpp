#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "spangcn/evalkit.hpp"
#include "spangcn/model.hpp"
#include "spangcn/params.hpp"

namespace spangcn {

struct TrainConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;
  int max_epochs = 100;
  int plateau_patience = 2;  // epochs without dev improvement before halving
  uint64_t seed = 0;
  // The run log has a wall-clock column; with this off it logs 0.0 so two
  // identically-seeded runs produce byte-identical logs.
  bool log_seconds = false;
};

// Scales every gradient by clip/norm when the global l2 norm exceeds
// `clip`; returns the pre-clip norm.
double clip_global_norm(GradMap& grads, double clip);

struct AdamState {
  GradMap m, v;
  long step = 0;
};

// One bias-corrected Adam update. Throws NumericError naming the parameter
// if a gradient is non-finite.
void adam_step(ModelParams& params, const GradMap& grads, AdamState& state,
               const TrainConfig& cfg, double lr);

// Halves the learning rate after `patience` consecutive epochs without a
// strict improvement of the best dev score; the stale counter resets on
// improvement and after each halving.
struct PlateauSchedule {
  double lr;
  int patience;
  double best = -1.0;
  int stale = 0;

  PlateauSchedule(double lr0, int patience0) : lr(lr0), patience(patience0) {}

  // Feed the epoch's dev score; returns the lr for the next epoch.
  double observe(double dev_score);
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double lr = 0;
  double train_nll = 0;
  Prf dev;
  double seconds = 0;
};

struct TrainResult {
  std::vector<EpochStats> epochs;
  double best_f1 = -1.0;
  int best_epoch = 0;
};

// Evaluates the model on each (sentence, predicate) pair. Fans work out
// over SPANGCN_THREADS threads (default 1); results are ordered by input
// index, so the report is identical at any thread count.
PredictionSet evaluate(const SrlModel& model,
                       const std::vector<SrlExample>& examples);

int eval_thread_count();

// Full training loop: seeded epoch shuffle, one Adam step per (sentence,
// predicate) pair, global-norm clipping, per-epoch dev span F1, plateau lr
// halving, best-dev checkpointing. `log` receives one JSON object per
// epoch; pass an empty checkpoint path to skip saving.
TrainResult train(SrlModel& model, const std::vector<SrlExample>& train_set,
                  const std::vector<SrlExample>& dev_set,
                  const TrainConfig& cfg, std::ostream* log,
                  const std::string& checkpoint_path);

}  // namespace spangcn
