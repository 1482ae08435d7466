#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "colog/modality.hpp"
#include "colog/rng.hpp"

namespace colog {

// Architecture hyperparameters. Defaults follow the published configuration:
// 2 collaborative layers, 4 heads, hidden 256, latent 2048, modality lengths
// 60, word vectors 300-d, event vectors 384-d.
struct ModelConfig {
  int vocab_size = 0;
  int d_word = 300;
  int d_event = 384;
  int hidden = 256;  // k; divisible by heads
  int heads = 4;
  int layers = 2;
  int ffn_inner = 1024;
  int latent = 2048;
  double dropout = 0.1;
  int sem_len = 60;
  int seq_len = 60;
  int n_classes = 2;  // 2 point-only, 4 point+collective
  std::uint64_t seed = 42;
  // Ablation toggles; all on by default.
  bool impressed = true;  // false: encoders self-attend instead of cross-attend
  bool use_mal = true;
  bool use_bl = true;  // false: uniform pooling instead of learned soft attention

  void validate() const;  // throws ConfigError
};

// Named tensor registry. Iteration follows registration order, which fixes
// the checkpoint layout and the optimizer state association.
class Parameters {
public:
  Eigen::MatrixXd& add(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  Eigen::MatrixXd& at(const std::string& name);
  const Eigen::MatrixXd& at(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) != 0; }

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

  void for_each(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn);
  void for_each(const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const;

  Parameters zeros_like() const;
  void set_zero();

private:
  std::vector<std::string> names_;
  std::map<std::string, Eigen::MatrixXd> tensors_;
  std::map<std::string, std::size_t> index_;
};

// ---- Forward caches (exposed so tests can inspect softmax rows) ----

struct LnCache {
  Eigen::VectorXd istd;   // per row
  Eigen::MatrixXd xhat;   // normalized input
};

struct AttnCache {
  std::vector<Eigen::MatrixXd> weights;  // per head, n_q x n_k softmax rows
  std::vector<Eigen::MatrixXd> q, k, c;  // per head projections
  Eigen::MatrixXd concat;                // n_q x hidden
};

struct MalCache {
  Eigen::MatrixXd input;    // V
  Eigen::MatrixXd v_high;   // N x 2k
  Eigen::MatrixXd weights;  // N x N softmax rows
  Eigen::MatrixXd v_tilde;  // weights * V
  LnCache ln;
};

struct EncoderLayerCache {
  AttnCache attn;
  Eigen::MatrixXd attn_out;            // after W_o
  Eigen::MatrixXd drop1, drop2;        // dropout masks (empty = identity)
  Eigen::MatrixXd x1;                  // LN1(self + dropout(attn))
  LnCache ln1;
  Eigen::MatrixXd ffn_mid, ffn_act;    // pre/post nonlinearity
  Eigen::MatrixXd x2;                  // LN2(x1 + dropout(ffn))
  LnCache ln2;
  MalCache mal;
  Eigen::MatrixXd out;
};

struct BlCache {
  Eigen::MatrixXd input;   // final encoder states, N x k
  Eigen::MatrixXd v_high;  // N x 2k
  Eigen::VectorXd alpha;   // pooling weights over N nodes
  Eigen::RowVectorXd pooled;
};

struct ModalityCache {
  Eigen::MatrixXd x0;                   // embedded input (semantic) or raw event rows
  std::vector<Eigen::MatrixXd> states;  // states[t], t = 0..layers
  std::vector<EncoderLayerCache> layers;
  BlCache bl;
  Eigen::RowVectorXd projected;  // 1 x latent
};

struct SampleCache {
  ModalityCache sem, seq;
  Eigen::RowVectorXd fused;  // O_sem + O_seq
  LnCache ln;
  Eigen::RowVectorXd normed;
  Eigen::RowVectorXd logits;
  Eigen::RowVectorXd probs;
};

// ---- Equation-level building blocks ----

// softmax(Q K^T / sqrt(d)) C with d = Q.cols(). Masked keys score -inf; a
// query whose keys are all masked yields a zero output row.
Eigen::MatrixXd scaled_attention(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& keys,
                                 const Eigen::MatrixXd& contexts,
                                 const std::vector<std::uint8_t>* key_mask = nullptr);

// Heads slice the hidden width into heads parts; concat times W_o.
Eigen::MatrixXd multi_head_attention(const Eigen::MatrixXd& w_q, const Eigen::MatrixXd& w_k,
                                     const Eigen::MatrixXd& w_c, const Eigen::MatrixXd& w_o,
                                     const Eigen::MatrixXd& q_in, const Eigen::MatrixXd& kv_in,
                                     int heads,
                                     const std::vector<std::uint8_t>* key_mask = nullptr,
                                     AttnCache* cache = nullptr);

// Soft-attention refinement with residual + layer norm:
// LN(row_softmax((V W_high)(W_low)^T) V + V).
Eigen::MatrixXd mal(const Eigen::MatrixXd& w_high, const Eigen::MatrixXd& w_low,
                    const Eigen::RowVectorXd& ln_gain, const Eigen::RowVectorXd& ln_bias,
                    const Eigen::MatrixXd& values, MalCache* cache = nullptr);

// Row-wise layer norm; eps small enough that positive rescaling is invariant
// to double precision.
Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& gain,
                           const Eigen::RowVectorXd& bias, LnCache* cache = nullptr);

inline constexpr double kLayerNormEps = 1e-12;

// ---- The collaborative model ----

struct BatchForward {
  Eigen::MatrixXd o_sem, o_seq;  // B x latent, balancing-layer outputs
  Eigen::MatrixXd latents;       // B x latent, LN(o_sem + o_seq) pre-classifier
  Eigen::MatrixXd logits;        // B x n_classes
  Eigen::MatrixXd probs;
  double loss = 0.0;  // mean cross-entropy when labels were given
};

class Model {
public:
  explicit Model(const ModelConfig& config);            // seeded init
  Model(const ModelConfig& config, Parameters params);  // from checkpoint

  const ModelConfig& config() const { return config_; }
  Parameters& params() { return params_; }
  const Parameters& params() const { return params_; }

  // Query from the at-hand modality, keys/contexts from the other one.
  // `modality` is "sem" or "seq" and selects the encoder's weights.
  Eigen::MatrixXd mhia(int layer, const std::string& modality,
                       const Eigen::MatrixXd& self_states, const Eigen::MatrixXd& other_states,
                       const std::vector<std::uint8_t>* other_mask = nullptr,
                       AttnCache* cache = nullptr) const;

  // One encoder layer: x1 = LN(self + drop(MHIA)), x2 = LN(x1 + drop(FFN)),
  // out = MAL(x2). Dropout active only when a mask source is supplied.
  Eigen::MatrixXd encoder_layer(int layer, const std::string& modality,
                                const Eigen::MatrixXd& self_states,
                                const Eigen::MatrixXd& other_states,
                                const std::vector<std::uint8_t>* other_mask = nullptr,
                                Rng* dropout_rng = nullptr,
                                EncoderLayerCache* cache = nullptr) const;

  // Both encoders over T layers; layer t reads the other modality's t-1
  // states, so the two encoders are order-independent within a layer.
  // Returns balancing-layer outputs (B x latent each).
  BatchForward collaborative_forward(const Batch& batch, const std::vector<int>* labels = nullptr,
                                     Rng* dropout_rng = nullptr,
                                     std::vector<SampleCache>* caches = nullptr) const;

  // Element-wise sum, layer norm, affine map to n_classes.
  Eigen::MatrixXd classify(const Eigen::MatrixXd& o_sem, const Eigen::MatrixXd& o_seq) const;

  // Inference: no dropout. Labels selected by config().n_classes.
  BatchForward infer(const Batch& batch) const;

  // Mean cross-entropy loss and exact gradients for every tensor.
  // Dropout masks are drawn from `dropout_rng` when given (training mode).
  // Throws NumericError (with the tensor name) on a non-finite gradient.
  double loss_and_gradients(const Batch& batch, const std::vector<int>& labels,
                            Parameters& grads, Rng* dropout_rng = nullptr) const;

  static const std::vector<int>& batch_labels(const Batch& batch, int n_classes);

private:
  void register_tensors();
  void init_weights();
  void forward_sample(const Batch& batch, int b, Rng* dropout_rng, SampleCache& cache) const;
  void backward_sample(const Batch& batch, int b, const SampleCache& cache,
                       const Eigen::RowVectorXd& dlogits, Parameters& grads) const;

  ModelConfig config_;
  Parameters params_;
};

}  // namespace colog
