#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "colog/model.hpp"

namespace colog {

// Published training setup: lr 5e-5, decay 0.5 applied at most 3 times,
// batch 32, 20 epochs max, early stopping patience 5, 5 warmup epochs.
struct TrainConfig {
  double lr = 5e-5;
  double decay_factor = 0.5;
  int max_decays = 3;
  int batch = 32;
  int max_epochs = 20;
  int patience = 5;
  int warmup_epochs = 5;
  // Replaces this fraction of real semantic tokens with UNK per epoch, so
  // unseen vocabulary at inference is not automatically alien. Off by
  // default; useful when test logs carry templates the vocabulary missed.
  double word_dropout = 0.0;
  std::uint64_t seed = 42;

  void validate() const;  // throws ConfigError
};

// Linear warmup over the first warmup_epochs, then base lr scaled by
// decay_factor^min(plateau_count, max_decays). Epochs are 1-based.
double lr_at(int epoch, const TrainConfig& config, int plateau_count);

// Standard Adam with bias correction; moments per tensor.
class AdamOptimizer {
public:
  explicit AdamOptimizer(const Parameters& params, double beta1 = 0.9, double beta2 = 0.999,
                         double eps = 1e-8);

  // Throws NumericError on a non-finite update.
  void step(Parameters& params, const Parameters& grads, double lr);

  int steps() const { return t_; }

private:
  Parameters m_, v_;
  int t_ = 0;
  double beta1_, beta2_, eps_;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_f1 = 0.0;
};

struct FitResult {
  std::vector<EpochRecord> history;
  double best_val_f1 = 0.0;
  int best_epoch = 0;
  bool early_stopped = false;
};

// Trains in place and leaves the model at its best-validation weights.
// The plateau counter feeding lr decay advances after every 2 consecutive
// epochs without improvement. Throws NumericError when the loss diverges,
// naming the epoch.
FitResult fit(Model& model, const std::vector<Sample>& train_samples,
              const std::vector<Sample>& val_samples, const TrainConfig& config);

// Validation metric used for early stopping and checkpoint selection.
double macro_f1_on(const Model& model, const std::vector<Sample>& samples, int batch_size);

// epoch,lr,train_loss,val_f1 rows.
void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history);

}  // namespace colog
