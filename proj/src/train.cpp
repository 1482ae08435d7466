#include "colog/train.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "colog/errors.hpp"
#include "colog/eval.hpp"

namespace colog {

void TrainConfig::validate() const {
  if (lr <= 0.0) throw ConfigError("train: lr must be > 0");
  if (!(decay_factor > 0.0 && decay_factor < 1.0))
    throw ConfigError("train: decay_factor must be in (0, 1)");
  if (max_decays < 0) throw ConfigError("train: max_decays must be >= 0");
  if (batch < 1) throw ConfigError("train: batch must be >= 1");
  if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("train: patience must be >= 1");
  if (warmup_epochs < 0) throw ConfigError("train: warmup_epochs must be >= 0");
  if (!(word_dropout >= 0.0 && word_dropout < 1.0))
    throw ConfigError("train: word_dropout must be in [0, 1)");
}

double lr_at(int epoch, const TrainConfig& config, int plateau_count) {
  if (epoch < 1) throw ConfigError("lr_at: epochs are 1-based");
  if (config.warmup_epochs > 0 && epoch <= config.warmup_epochs)
    return config.lr * static_cast<double>(epoch) / static_cast<double>(config.warmup_epochs);
  const int decays = std::min(plateau_count, config.max_decays);
  return config.lr * std::pow(config.decay_factor, decays);
}

AdamOptimizer::AdamOptimizer(const Parameters& params, double beta1, double beta2, double eps)
    : m_(params.zeros_like()), v_(params.zeros_like()), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::step(Parameters& params, const Parameters& grads, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  params.for_each([&](const std::string& name, Eigen::MatrixXd& p) {
    const Eigen::MatrixXd& g = grads.at(name);
    Eigen::MatrixXd& m = m_.at(name);
    Eigen::MatrixXd& v = v_.at(name);
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    const Eigen::MatrixXd update =
        (lr * (m / bc1).array() / ((v / bc2).array().sqrt() + eps_)).matrix();
    if (!update.allFinite())
      throw NumericError("adam: non-finite update in tensor `" + name + "`");
    p -= update;
  });
}

double macro_f1_on(const Model& model, const std::vector<Sample>& samples, int batch_size) {
  if (samples.empty()) throw DataError("macro_f1_on: no samples");
  const int n_classes = model.config().n_classes;
  std::vector<int> truth, predicted;
  truth.reserve(samples.size());
  predicted.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    Batch batch;
    for (std::size_t i = start; i < end; ++i) {
      const Sample& s = samples[i];
      batch.token_ids.push_back(s.semantic.token_ids);
      batch.sem_mask.push_back(s.semantic.mask);
      batch.sequence.push_back(s.sequence.vectors);
      batch.seq_mask.push_back(s.sequence.mask);
      batch.point_labels.push_back(s.point_label);
      batch.joint_labels.push_back(s.joint_label);
    }
    const BatchForward fwd = model.infer(batch);
    const auto& labels = Model::batch_labels(batch, n_classes);
    for (Eigen::Index b = 0; b < fwd.logits.rows(); ++b) {
      Eigen::Index argmax = 0;
      fwd.logits.row(b).maxCoeff(&argmax);
      predicted.push_back(static_cast<int>(argmax));
      truth.push_back(labels[static_cast<std::size_t>(b)]);
    }
  }
  return metrics(confusion_matrix(truth, predicted, n_classes)).macro_f1;
}

FitResult fit(Model& model, const std::vector<Sample>& train_samples,
              const std::vector<Sample>& val_samples, const TrainConfig& config) {
  config.validate();
  if (train_samples.empty()) throw DataError("fit: empty training split");
  if (val_samples.empty()) throw DataError("fit: empty validation split");

  FitResult result;
  AdamOptimizer optimizer(model.params());
  Parameters grads = model.params().zeros_like();
  Parameters best_params = model.params();  // fall back to init if nothing improves
  double best_f1 = -std::numeric_limits<double>::infinity();
  int plateau_count = 0;
  int since_improve = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double lr = lr_at(epoch, config, plateau_count);
    auto batches =
        make_batches(train_samples, config.batch, derive_seed(config.seed, 1000 + epoch));
    Rng dropout_rng(derive_seed(config.seed, 2000 + epoch));
    if (config.word_dropout > 0.0) {
      Rng word_rng(derive_seed(config.seed, 3000 + epoch));
      for (Batch& batch : batches)
        for (std::size_t b = 0; b < batch.token_ids.size(); ++b)
          for (std::size_t i = 0; i < batch.token_ids[b].size(); ++i)
            if (batch.sem_mask[b][i] && word_rng.uniform() < config.word_dropout)
              batch.token_ids[b][i] = Vocabulary::kUnk;
    }

    double loss_sum = 0.0;
    for (const Batch& batch : batches) {
      const auto& labels = Model::batch_labels(batch, model.config().n_classes);
      const double loss = model.loss_and_gradients(batch, labels, grads, &dropout_rng);
      if (!std::isfinite(loss))
        throw NumericError("training diverged (non-finite loss) at epoch " +
                           std::to_string(epoch));
      optimizer.step(model.params(), grads, lr);
      loss_sum += loss * batch.size();
    }
    const double train_loss = loss_sum / static_cast<double>(train_samples.size());
    const double val_f1 = macro_f1_on(model, val_samples, config.batch);
    result.history.push_back({epoch, lr, train_loss, val_f1});

    if (val_f1 > best_f1) {
      best_f1 = val_f1;
      result.best_epoch = epoch;
      best_params = model.params();
      since_improve = 0;
    } else {
      ++since_improve;
      if (since_improve % 2 == 0) ++plateau_count;  // 2-epoch validation plateau
      if (since_improve >= config.patience) {
        result.early_stopped = true;
        break;
      }
    }
  }

  result.best_val_f1 = best_f1;
  // Leave the model at its best-validation weights.
  model.params().for_each([&](const std::string& name, Eigen::MatrixXd& p) {
    p = best_params.at(name);
  });
  return result;
}

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write history: " + path);
  out << "epoch,lr,train_loss,val_f1\n";
  out.precision(12);
  for (const auto& r : history)
    out << r.epoch << ',' << r.lr << ',' << r.train_loss << ',' << r.val_f1 << '\n';
}

}  // namespace colog
