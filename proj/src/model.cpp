#include "colog/model.hpp"

#include <cmath>
#include <limits>

#include "colog/errors.hpp"

namespace colog {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// Rows of a column-major matrix are strided, hence the explicit InnerStride.
using RowRef = Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>>;

// Row softmax over unmasked keys; a fully masked row comes back all zero.
void softmax_row_masked(RowRef row, const std::vector<std::uint8_t>* mask) {
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < row.size(); ++j)
    if (!mask || (*mask)[static_cast<std::size_t>(j)]) mx = std::max(mx, row[j]);
  if (!std::isfinite(mx)) {
    row.setZero();
    return;
  }
  double sum = 0.0;
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (!mask || (*mask)[static_cast<std::size_t>(j)]) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    } else {
      row[j] = 0.0;
    }
  }
  row /= sum;
}

// d/dS of y = softmax(S) given w = softmax(S) and dy, row-wise:
// dS = w .* (dy - (w . dy)). Zero rows stay zero.
Eigen::MatrixXd softmax_backward_rows(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& dy) {
  Eigen::MatrixXd ds(weights.rows(), weights.cols());
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    const double dot = weights.row(i).dot(dy.row(i));
    ds.row(i) = weights.row(i).array() * (dy.row(i).array() - dot);
  }
  return ds;
}

Eigen::MatrixXd apply_dropout(const Eigen::MatrixXd& x, double p, Rng* rng,
                              Eigen::MatrixXd* mask_out) {
  if (!rng || p <= 0.0) {
    if (mask_out) mask_out->resize(0, 0);  // empty mask means identity
    return x;
  }
  const double keep_scale = 1.0 / (1.0 - p);
  Eigen::MatrixXd mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      mask(i, j) = rng->uniform() >= p ? keep_scale : 0.0;
  if (mask_out) *mask_out = mask;
  return x.cwiseProduct(mask);
}

// Row-wise layer norm backward. Accumulates dgain/dbias, returns dx.
Eigen::MatrixXd layer_norm_backward(const Eigen::MatrixXd& dy, const LnCache& cache,
                                    const Eigen::RowVectorXd& gain, Eigen::MatrixXd& dgain,
                                    Eigen::MatrixXd& dbias) {
  const Eigen::Index n = dy.cols();
  Eigen::MatrixXd dx(dy.rows(), n);
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    dgain.row(0) += dy.row(i).cwiseProduct(cache.xhat.row(i));
    dbias.row(0) += dy.row(i);
    const Eigen::RowVectorXd dxhat = dy.row(i).cwiseProduct(gain);
    const double m1 = dxhat.mean();
    const double m2 = dxhat.cwiseProduct(cache.xhat.row(i)).mean();
    dx.row(i) =
        cache.istd[i] * (dxhat.array() - m1 - cache.xhat.row(i).array() * m2).matrix();
  }
  return dx;
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab_size < 2) throw ConfigError("model: vocab_size must be >= 2 (PAD and UNK)");
  if (hidden < 1 || heads < 1 || layers < 1 || ffn_inner < 1 || latent < 1 || d_word < 1 ||
      d_event < 1 || sem_len < 1 || seq_len < 1)
    throw ConfigError("model: all dimensions must be >= 1");
  if (hidden % heads != 0) throw ConfigError("model: hidden must be divisible by heads");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model: dropout must be in [0, 1)");
  if (n_classes != 2 && n_classes != 4) throw ConfigError("model: n_classes must be 2 or 4");
}

Eigen::MatrixXd& Parameters::add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  if (index_.count(name)) throw ConfigError("duplicate parameter tensor `" + name + "`");
  index_[name] = names_.size();
  names_.push_back(name);
  auto& m = tensors_[name];
  m = Eigen::MatrixXd::Zero(rows, cols);
  return m;
}

Eigen::MatrixXd& Parameters::at(const std::string& name) {
  const auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ConfigError("unknown parameter tensor `" + name + "`");
  return it->second;
}

const Eigen::MatrixXd& Parameters::at(const std::string& name) const {
  const auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ConfigError("unknown parameter tensor `" + name + "`");
  return it->second;
}

void Parameters::for_each(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn) {
  for (const auto& name : names_) fn(name, tensors_.at(name));
}

void Parameters::for_each(
    const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const {
  for (const auto& name : names_) fn(name, tensors_.at(name));
}

Parameters Parameters::zeros_like() const {
  Parameters out;
  for (const auto& name : names_) {
    const auto& m = tensors_.at(name);
    out.add(name, m.rows(), m.cols());
  }
  return out;
}

void Parameters::set_zero() {
  for (auto& [name, m] : tensors_) m.setZero();
}

Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& gain,
                           const Eigen::RowVectorXd& bias, LnCache* cache) {
  Eigen::MatrixXd out(x.rows(), x.cols());
  Eigen::VectorXd istd(x.rows());
  Eigen::MatrixXd xhat(x.rows(), x.cols());
  const double n = static_cast<double>(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().sum() / n;
    const double is = 1.0 / std::sqrt(var + kLayerNormEps);
    istd[i] = is;
    xhat.row(i) = (x.row(i).array() - mean).matrix() * is;
    out.row(i) = xhat.row(i).cwiseProduct(gain) + bias;
  }
  if (cache) {
    cache->istd = std::move(istd);
    cache->xhat = std::move(xhat);
  }
  return out;
}

Eigen::MatrixXd scaled_attention(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& keys,
                                 const Eigen::MatrixXd& contexts,
                                 const std::vector<std::uint8_t>* key_mask) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(queries.cols()));
  Eigen::MatrixXd weights = queries * keys.transpose() * scale;
  for (Eigen::Index i = 0; i < weights.rows(); ++i)
    softmax_row_masked(weights.row(i), key_mask);
  return weights * contexts;
}

Eigen::MatrixXd multi_head_attention(const Eigen::MatrixXd& w_q, const Eigen::MatrixXd& w_k,
                                     const Eigen::MatrixXd& w_c, const Eigen::MatrixXd& w_o,
                                     const Eigen::MatrixXd& q_in, const Eigen::MatrixXd& kv_in,
                                     int heads, const std::vector<std::uint8_t>* key_mask,
                                     AttnCache* cache) {
  const Eigen::Index k = w_q.cols();
  if (k % heads != 0) throw ConfigError("attention: hidden size not divisible by heads");
  const Eigen::Index dh = k / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Eigen::MatrixXd concat(q_in.rows(), k);
  if (cache) {
    cache->weights.assign(heads, {});
    cache->q.assign(heads, {});
    cache->k.assign(heads, {});
    cache->c.assign(heads, {});
  }
  for (int h = 0; h < heads; ++h) {
    const Eigen::Index off = h * dh;
    Eigen::MatrixXd qh = q_in * w_q.middleCols(off, dh);
    Eigen::MatrixXd kh = kv_in * w_k.middleCols(off, dh);
    Eigen::MatrixXd ch = kv_in * w_c.middleCols(off, dh);
    Eigen::MatrixXd weights = qh * kh.transpose() * scale;
    for (Eigen::Index i = 0; i < weights.rows(); ++i)
      softmax_row_masked(weights.row(i), key_mask);
    concat.middleCols(off, dh) = weights * ch;
    if (cache) {
      cache->weights[h] = std::move(weights);
      cache->q[h] = std::move(qh);
      cache->k[h] = std::move(kh);
      cache->c[h] = std::move(ch);
    }
  }
  if (cache) cache->concat = concat;
  return concat * w_o;
}

Eigen::MatrixXd mal(const Eigen::MatrixXd& w_high, const Eigen::MatrixXd& w_low,
                    const Eigen::RowVectorXd& ln_gain, const Eigen::RowVectorXd& ln_bias,
                    const Eigen::MatrixXd& values, MalCache* cache) {
  Eigen::MatrixXd v_high = values * w_high;          // N x 2k
  Eigen::MatrixXd weights = v_high * w_low.transpose();  // N x N
  for (Eigen::Index i = 0; i < weights.rows(); ++i)
    softmax_row_masked(weights.row(i), nullptr);
  Eigen::MatrixXd v_tilde = weights * values;
  Eigen::MatrixXd out =
      layer_norm(v_tilde + values, ln_gain, ln_bias, cache ? &cache->ln : nullptr);
  if (cache) {
    cache->input = values;
    cache->v_high = std::move(v_high);
    cache->weights = std::move(weights);
    cache->v_tilde = std::move(v_tilde);
  }
  return out;
}

Model::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  register_tensors();
  init_weights();
}

Model::Model(const ModelConfig& config, Parameters params) : config_(config) {
  config_.validate();
  register_tensors();
  // Adopt the given tensors, shape-checked against the registry.
  for (const auto& name : params_.names()) {
    const auto& src = params.at(name);
    auto& dst = params_.at(name);
    if (src.rows() != dst.rows() || src.cols() != dst.cols())
      throw DataError("checkpoint tensor `" + name + "` has shape " +
                      std::to_string(src.rows()) + "x" + std::to_string(src.cols()) +
                      ", model expects " + std::to_string(dst.rows()) + "x" +
                      std::to_string(dst.cols()));
    dst = src;
  }
}

void Model::register_tensors() {
  const int k = config_.hidden;
  params_.add("embed.tokens", config_.vocab_size, config_.d_word);
  params_.add("proj.sem.W", config_.d_word, k);
  params_.add("proj.sem.b", 1, k);
  params_.add("proj.seq.W", config_.d_event, k);
  params_.add("proj.seq.b", 1, k);
  params_.add("pos.sem", config_.sem_len, k);
  params_.add("pos.seq", config_.seq_len, k);
  for (int t = 0; t < config_.layers; ++t) {
    for (const std::string m : {"sem", "seq"}) {
      const std::string p = "layer" + std::to_string(t) + "." + m + ".";
      const int n = m == "sem" ? config_.sem_len : config_.seq_len;
      params_.add(p + "attn.Wq", k, k);
      params_.add(p + "attn.Wk", k, k);
      params_.add(p + "attn.Wc", k, k);
      params_.add(p + "attn.Wo", k, k);
      params_.add(p + "ln1.g", 1, k);
      params_.add(p + "ln1.b", 1, k);
      params_.add(p + "ffn.W1", k, config_.ffn_inner);
      params_.add(p + "ffn.b1", 1, config_.ffn_inner);
      params_.add(p + "ffn.W2", config_.ffn_inner, k);
      params_.add(p + "ffn.b2", 1, k);
      params_.add(p + "ln2.g", 1, k);
      params_.add(p + "ln2.b", 1, k);
      if (config_.use_mal) {
        params_.add(p + "mal.Whigh", k, 2 * k);
        params_.add(p + "mal.Wlow", n, 2 * k);
        params_.add(p + "mal.ln.g", 1, k);
        params_.add(p + "mal.ln.b", 1, k);
      }
    }
  }
  for (const std::string m : {"sem", "seq"}) {
    const std::string p = "bl." + m + ".";
    if (config_.use_bl) {
      params_.add(p + "Whigh", k, 2 * k);
      params_.add(p + "wnode", 1, 2 * k);
    }
    params_.add(p + "Wlat", k, config_.latent);
    params_.add(p + "blat", 1, config_.latent);
  }
  params_.add("cls.ln.g", 1, config_.latent);
  params_.add("cls.ln.b", 1, config_.latent);
  params_.add("cls.W", config_.latent, config_.n_classes);
  params_.add("cls.b", 1, config_.n_classes);
}

void Model::init_weights() {
  params_.for_each([&](const std::string& name, Eigen::MatrixXd& m) {
    const bool is_gain = name.size() > 2 && name.compare(name.size() - 2, 2, ".g") == 0;
    const bool is_bias = name.compare(name.size() - 2, 2, ".b") == 0 ||
                         name.compare(name.size() - 5, 5, ".blat") == 0 ||
                         name.compare(name.size() - 3, 3, ".b1") == 0 ||
                         name.compare(name.size() - 3, 3, ".b2") == 0;
    if (is_gain) {
      m.setOnes();
      return;
    }
    if (is_bias) {
      m.setZero();
      return;
    }
    Rng rng(derive_seed(config_.seed, name));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = 0.02 * rng.gaussian();
  });
  params_.at("embed.tokens").row(Vocabulary::kPad).setZero();
}

Eigen::MatrixXd Model::mhia(int layer, const std::string& modality,
                            const Eigen::MatrixXd& self_states,
                            const Eigen::MatrixXd& other_states,
                            const std::vector<std::uint8_t>* other_mask, AttnCache* cache) const {
  const std::string p = "layer" + std::to_string(layer) + "." + modality + ".attn.";
  return multi_head_attention(params_.at(p + "Wq"), params_.at(p + "Wk"), params_.at(p + "Wc"),
                              params_.at(p + "Wo"), self_states, other_states, config_.heads,
                              other_mask, cache);
}

Eigen::MatrixXd Model::encoder_layer(int layer, const std::string& modality,
                                     const Eigen::MatrixXd& self_states,
                                     const Eigen::MatrixXd& other_states,
                                     const std::vector<std::uint8_t>* other_mask, Rng* dropout_rng,
                                     EncoderLayerCache* cache) const {
  const std::string p = "layer" + std::to_string(layer) + "." + modality + ".";
  EncoderLayerCache local;
  EncoderLayerCache& c = cache ? *cache : local;

  c.attn_out = mhia(layer, modality, self_states, other_states, other_mask, &c.attn);
  const Eigen::MatrixXd a = apply_dropout(c.attn_out, config_.dropout, dropout_rng, &c.drop1);
  c.x1 = layer_norm(self_states + a, params_.at(p + "ln1.g"), params_.at(p + "ln1.b"), &c.ln1);

  c.ffn_mid = c.x1 * params_.at(p + "ffn.W1");
  c.ffn_mid.rowwise() += params_.at(p + "ffn.b1").row(0);
  c.ffn_act = c.ffn_mid.unaryExpr([](double x) { return gelu(x); });
  Eigen::MatrixXd f = c.ffn_act * params_.at(p + "ffn.W2");
  f.rowwise() += params_.at(p + "ffn.b2").row(0);
  const Eigen::MatrixXd fd = apply_dropout(f, config_.dropout, dropout_rng, &c.drop2);
  c.x2 = layer_norm(c.x1 + fd, params_.at(p + "ln2.g"), params_.at(p + "ln2.b"), &c.ln2);

  if (config_.use_mal) {
    c.out = mal(params_.at(p + "mal.Whigh"), params_.at(p + "mal.Wlow"),
                params_.at(p + "mal.ln.g"), params_.at(p + "mal.ln.b"), c.x2, &c.mal);
  } else {
    c.out = c.x2;
  }
  return c.out;
}

void Model::forward_sample(const Batch& batch, int b, Rng* dropout_rng, SampleCache& cache) const {
  const Eigen::MatrixXd& embed = params_.at("embed.tokens");

  cache.sem.x0.resize(config_.sem_len, config_.d_word);
  for (int i = 0; i < config_.sem_len; ++i)
    cache.sem.x0.row(i) = embed.row(batch.token_ids[b][static_cast<std::size_t>(i)]);
  cache.seq.x0 = batch.sequence[b];

  Eigen::MatrixXd s0_sem = cache.sem.x0 * params_.at("proj.sem.W");
  s0_sem.rowwise() += params_.at("proj.sem.b").row(0);
  s0_sem += params_.at("pos.sem");
  Eigen::MatrixXd s0_seq = cache.seq.x0 * params_.at("proj.seq.W");
  s0_seq.rowwise() += params_.at("proj.seq.b").row(0);
  s0_seq += params_.at("pos.seq");

  cache.sem.states.clear();
  cache.sem.states.reserve(static_cast<std::size_t>(config_.layers) + 1);
  cache.sem.states.push_back(std::move(s0_sem));
  cache.seq.states.clear();
  cache.seq.states.reserve(static_cast<std::size_t>(config_.layers) + 1);
  cache.seq.states.push_back(std::move(s0_seq));
  cache.sem.layers.resize(config_.layers);
  cache.seq.layers.resize(config_.layers);

  const std::vector<std::uint8_t>& sem_mask = batch.sem_mask[b];
  const std::vector<std::uint8_t>& seq_mask = batch.seq_mask[b];
  for (int t = 0; t < config_.layers; ++t) {
    // Both encoders consume the other modality's pre-layer snapshot, so
    // their in-layer evaluation order does not matter.
    const Eigen::MatrixXd& prev_sem = cache.sem.states[t];
    const Eigen::MatrixXd& prev_seq = cache.seq.states[t];
    const Eigen::MatrixXd& sem_kv = config_.impressed ? prev_seq : prev_sem;
    const Eigen::MatrixXd& seq_kv = config_.impressed ? prev_sem : prev_seq;
    const auto* sem_kv_mask = config_.impressed ? &seq_mask : &sem_mask;
    const auto* seq_kv_mask = config_.impressed ? &sem_mask : &seq_mask;
    cache.sem.states.push_back(
        encoder_layer(t, "sem", prev_sem, sem_kv, sem_kv_mask, dropout_rng, &cache.sem.layers[t]));
    cache.seq.states.push_back(
        encoder_layer(t, "seq", prev_seq, seq_kv, seq_kv_mask, dropout_rng, &cache.seq.layers[t]));
  }

  for (const std::string m : {"sem", "seq"}) {
    ModalityCache& mc = m == "sem" ? cache.sem : cache.seq;
    const std::string p = "bl." + m + ".";
    const Eigen::MatrixXd& final_states = mc.states.back();
    mc.bl.input = final_states;
    const Eigen::Index n = final_states.rows();
    if (config_.use_bl) {
      mc.bl.v_high = final_states * params_.at(p + "Whigh");
      Eigen::RowVectorXd scores =
          (mc.bl.v_high * params_.at(p + "wnode").transpose()).transpose();
      softmax_row_masked(scores.row(0), nullptr);
      mc.bl.alpha = scores.transpose();
    } else {
      mc.bl.alpha = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    }
    mc.bl.pooled = mc.bl.alpha.transpose() * final_states;  // 1 x k
    mc.projected = mc.bl.pooled * params_.at(p + "Wlat") + params_.at(p + "blat").row(0);
  }

  cache.fused = cache.sem.projected + cache.seq.projected;
  Eigen::MatrixXd normed =
      layer_norm(cache.fused, params_.at("cls.ln.g"), params_.at("cls.ln.b"), &cache.ln);
  cache.normed = normed.row(0);
  cache.logits = cache.normed * params_.at("cls.W") + params_.at("cls.b").row(0);
  cache.probs = cache.logits;
  softmax_row_masked(cache.probs.row(0), nullptr);
}

void Model::backward_sample(const Batch& batch, int b, const SampleCache& cache,
                            const Eigen::RowVectorXd& dlogits, Parameters& grads) const {
  const auto g = [&grads](const std::string& name) -> Eigen::MatrixXd& { return grads.at(name); };

  // classifier
  g("cls.W") += cache.normed.transpose() * dlogits;
  g("cls.b") += dlogits;
  Eigen::MatrixXd dnormed = dlogits * params_.at("cls.W").transpose();
  Eigen::MatrixXd dfused = layer_norm_backward(dnormed, cache.ln, params_.at("cls.ln.g"),
                                               g("cls.ln.g"), g("cls.ln.b"));

  // balancing layer per modality; both receive the same fused gradient
  std::map<std::string, Eigen::MatrixXd> d_final;  // gradient into states.back()
  for (const std::string m : {"sem", "seq"}) {
    const ModalityCache& mc = m == "sem" ? cache.sem : cache.seq;
    const std::string p = "bl." + m + ".";
    const Eigen::MatrixXd& v = mc.bl.input;
    g(p + "Wlat") += mc.bl.pooled.transpose() * dfused;
    g(p + "blat") += dfused;
    const Eigen::RowVectorXd dpooled = (dfused * params_.at(p + "Wlat").transpose()).row(0);
    Eigen::VectorXd dalpha = v * dpooled.transpose();       // N
    Eigen::MatrixXd dv = mc.bl.alpha * dpooled;             // N x k
    if (config_.use_bl) {
      const double dot = mc.bl.alpha.dot(dalpha);
      const Eigen::VectorXd ds = (mc.bl.alpha.array() * (dalpha.array() - dot)).matrix();
      g(p + "wnode") += ds.transpose() * mc.bl.v_high;
      const Eigen::MatrixXd dv_high = ds * params_.at(p + "wnode");
      g(p + "Whigh") += v.transpose() * dv_high;
      dv += dv_high * params_.at(p + "Whigh").transpose();
    }
    d_final[m] = std::move(dv);
  }

  // encoder layers, top down
  Eigen::MatrixXd d_sem = std::move(d_final["sem"]);
  Eigen::MatrixXd d_seq = std::move(d_final["seq"]);
  for (int t = config_.layers - 1; t >= 0; --t) {
    Eigen::MatrixXd d_prev_sem = Eigen::MatrixXd::Zero(config_.sem_len, config_.hidden);
    Eigen::MatrixXd d_prev_seq = Eigen::MatrixXd::Zero(config_.seq_len, config_.hidden);
    for (const std::string m : {"sem", "seq"}) {
      const bool is_sem = m == "sem";
      const ModalityCache& mc = is_sem ? cache.sem : cache.seq;
      const ModalityCache& oc = is_sem ? cache.seq : cache.sem;
      const EncoderLayerCache& lc = mc.layers[static_cast<std::size_t>(t)];
      const Eigen::MatrixXd& self_in = mc.states[static_cast<std::size_t>(t)];
      const Eigen::MatrixXd& other_in =
          config_.impressed ? oc.states[static_cast<std::size_t>(t)] : self_in;
      const std::string p = "layer" + std::to_string(t) + "." + m + ".";
      Eigen::MatrixXd dout = is_sem ? d_sem : d_seq;

      // MAL
      Eigen::MatrixXd dx2;
      if (config_.use_mal) {
        const MalCache& malc = lc.mal;
        Eigen::MatrixXd dpre = layer_norm_backward(dout, malc.ln, params_.at(p + "mal.ln.g"),
                                                   g(p + "mal.ln.g"), g(p + "mal.ln.b"));
        dx2 = dpre;  // residual
        const Eigen::MatrixXd dweights = dpre * malc.input.transpose();
        dx2 += malc.weights.transpose() * dpre;
        const Eigen::MatrixXd dscores = softmax_backward_rows(malc.weights, dweights);
        const Eigen::MatrixXd dv_high = dscores * params_.at(p + "mal.Wlow");
        g(p + "mal.Wlow") += dscores.transpose() * malc.v_high;
        g(p + "mal.Whigh") += malc.input.transpose() * dv_high;
        dx2 += dv_high * params_.at(p + "mal.Whigh").transpose();
      } else {
        dx2 = std::move(dout);
      }

      // FFN block: x2 = LN2(x1 + drop2(ffn(x1)))
      Eigen::MatrixXd dpre2 = layer_norm_backward(dx2, lc.ln2, params_.at(p + "ln2.g"),
                                                  g(p + "ln2.g"), g(p + "ln2.b"));
      Eigen::MatrixXd dffn =
          lc.drop2.size() ? Eigen::MatrixXd(dpre2.cwiseProduct(lc.drop2)) : dpre2;
      Eigen::MatrixXd dx1 = dpre2;  // residual
      const Eigen::MatrixXd dact = dffn * params_.at(p + "ffn.W2").transpose();
      g(p + "ffn.W2") += lc.ffn_act.transpose() * dffn;
      g(p + "ffn.b2") += dffn.colwise().sum();
      const Eigen::MatrixXd dmid =
          dact.cwiseProduct(lc.ffn_mid.unaryExpr([](double x) { return gelu_grad(x); }));
      dx1 += dmid * params_.at(p + "ffn.W1").transpose();
      g(p + "ffn.W1") += lc.x1.transpose() * dmid;
      g(p + "ffn.b1") += dmid.colwise().sum();

      // attention block: x1 = LN1(self + drop1(attn))
      Eigen::MatrixXd dpre1 = layer_norm_backward(dx1, lc.ln1, params_.at(p + "ln1.g"),
                                                  g(p + "ln1.g"), g(p + "ln1.b"));
      Eigen::MatrixXd dattn =
          lc.drop1.size() ? Eigen::MatrixXd(dpre1.cwiseProduct(lc.drop1)) : dpre1;
      Eigen::MatrixXd d_self = dpre1;  // residual
      Eigen::MatrixXd d_other = Eigen::MatrixXd::Zero(other_in.rows(), other_in.cols());

      const Eigen::MatrixXd dconcat = dattn * params_.at(p + "attn.Wo").transpose();
      g(p + "attn.Wo") += lc.attn.concat.transpose() * dattn;
      const Eigen::Index dh = config_.hidden / config_.heads;
      const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
      for (int h = 0; h < config_.heads; ++h) {
        const Eigen::Index off = h * dh;
        const Eigen::MatrixXd& w = lc.attn.weights[static_cast<std::size_t>(h)];
        const Eigen::MatrixXd dho = dconcat.middleCols(off, dh);
        const Eigen::MatrixXd dw = dho * lc.attn.c[static_cast<std::size_t>(h)].transpose();
        const Eigen::MatrixXd dc = w.transpose() * dho;
        const Eigen::MatrixXd ds = softmax_backward_rows(w, dw);
        const Eigen::MatrixXd dqh = ds * lc.attn.k[static_cast<std::size_t>(h)] * scale;
        const Eigen::MatrixXd dkh =
            ds.transpose() * lc.attn.q[static_cast<std::size_t>(h)] * scale;
        d_self += dqh * params_.at(p + "attn.Wq").middleCols(off, dh).transpose();
        g(p + "attn.Wq").middleCols(off, dh) += self_in.transpose() * dqh;
        d_other += dkh * params_.at(p + "attn.Wk").middleCols(off, dh).transpose();
        g(p + "attn.Wk").middleCols(off, dh) += other_in.transpose() * dkh;
        d_other += dc * params_.at(p + "attn.Wc").middleCols(off, dh).transpose();
        g(p + "attn.Wc").middleCols(off, dh) += other_in.transpose() * dc;
      }

      // Route: self gradient to own previous state, K/C gradient to the
      // modality that provided keys and contexts.
      if (is_sem) {
        d_prev_sem += d_self;
        if (config_.impressed)
          d_prev_seq += d_other;
        else
          d_prev_sem += d_other;
      } else {
        d_prev_seq += d_self;
        if (config_.impressed)
          d_prev_sem += d_other;
        else
          d_prev_seq += d_other;
      }
    }
    d_sem = std::move(d_prev_sem);
    d_seq = std::move(d_prev_seq);
  }

  // input projections and embeddings
  g("pos.sem") += d_sem;
  g("pos.seq") += d_seq;
  g("proj.sem.W") += cache.sem.x0.transpose() * d_sem;
  g("proj.sem.b") += d_sem.colwise().sum();
  g("proj.seq.W") += cache.seq.x0.transpose() * d_seq;
  g("proj.seq.b") += d_seq.colwise().sum();
  const Eigen::MatrixXd dx0_sem = d_sem * params_.at("proj.sem.W").transpose();
  Eigen::MatrixXd& dembed = g("embed.tokens");
  for (int i = 0; i < config_.sem_len; ++i) {
    const int id = batch.token_ids[b][static_cast<std::size_t>(i)];
    if (id != Vocabulary::kPad) dembed.row(id) += dx0_sem.row(i);  // PAD row stays untrained
  }
}

BatchForward Model::collaborative_forward(const Batch& batch, const std::vector<int>* labels,
                                          Rng* dropout_rng,
                                          std::vector<SampleCache>* caches) const {
  const int B = batch.size();
  if (B == 0) throw DataError("collaborative_forward: empty batch");
  if (labels)
    for (int y : *labels)
      if (y < 0 || y >= config_.n_classes)
        throw DataError("label " + std::to_string(y) + " out of range for " +
                        std::to_string(config_.n_classes) + " classes");
  BatchForward out;
  out.o_sem.resize(B, config_.latent);
  out.o_seq.resize(B, config_.latent);
  out.latents.resize(B, config_.latent);
  out.logits.resize(B, config_.n_classes);
  out.probs.resize(B, config_.n_classes);
  std::vector<SampleCache> local;
  std::vector<SampleCache>& cs = caches ? *caches : local;
  cs.assign(static_cast<std::size_t>(B), {});
  double loss = 0.0;
  for (int b = 0; b < B; ++b) {
    forward_sample(batch, b, dropout_rng, cs[static_cast<std::size_t>(b)]);
    const SampleCache& c = cs[static_cast<std::size_t>(b)];
    out.o_sem.row(b) = c.sem.projected;
    out.o_seq.row(b) = c.seq.projected;
    out.latents.row(b) = c.normed;
    out.logits.row(b) = c.logits;
    out.probs.row(b) = c.probs;
    if (labels) {
      const double p = std::max(c.probs[(*labels)[static_cast<std::size_t>(b)]], 1e-300);
      loss -= std::log(p);
    }
  }
  if (labels) out.loss = loss / B;
  return out;
}

Eigen::MatrixXd Model::classify(const Eigen::MatrixXd& o_sem, const Eigen::MatrixXd& o_seq) const {
  const Eigen::MatrixXd normed =
      layer_norm(o_sem + o_seq, params_.at("cls.ln.g"), params_.at("cls.ln.b"));
  Eigen::MatrixXd logits = normed * params_.at("cls.W");
  logits.rowwise() += params_.at("cls.b").row(0);
  return logits;
}

BatchForward Model::infer(const Batch& batch) const {
  const auto& labels = batch_labels(batch, config_.n_classes);
  return collaborative_forward(batch, &labels, nullptr, nullptr);
}

const std::vector<int>& Model::batch_labels(const Batch& batch, int n_classes) {
  return n_classes == 4 ? batch.joint_labels : batch.point_labels;
}

double Model::loss_and_gradients(const Batch& batch, const std::vector<int>& labels,
                                 Parameters& grads, Rng* dropout_rng) const {
  const int B = batch.size();
  if (B == 0) throw DataError("loss_and_gradients: empty batch");
  if (static_cast<int>(labels.size()) != B)
    throw DataError("loss_and_gradients: labels/batch size mismatch");
  grads.set_zero();
  std::vector<SampleCache> caches;
  const BatchForward fwd = collaborative_forward(batch, &labels, dropout_rng, &caches);
  for (int b = 0; b < B; ++b) {
    const SampleCache& c = caches[static_cast<std::size_t>(b)];
    Eigen::RowVectorXd dlogits = c.probs;
    dlogits[labels[static_cast<std::size_t>(b)]] -= 1.0;
    dlogits /= static_cast<double>(B);
    backward_sample(batch, b, c, dlogits, grads);
  }
  grads.for_each([](const std::string& name, Eigen::MatrixXd& g) {
    if (!g.allFinite()) throw NumericError("non-finite gradient in tensor `" + name + "`");
  });
  return fwd.loss;
}

}  // namespace colog
