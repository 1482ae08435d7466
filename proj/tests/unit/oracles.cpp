#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace oracle {

namespace {

std::vector<double> row_of(const Eigen::MatrixXd& m, Eigen::Index r) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(c)] = m(r, c);
  return out;
}

}  // namespace

Mat from_eigen(const Eigen::MatrixXd& m) {
  Mat out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) out[static_cast<std::size_t>(r)] = row_of(m, r);
  return out;
}

Eigen::MatrixXd to_eigen(const Mat& m) {
  if (m.empty()) return {};
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m.size()),
                      static_cast<Eigen::Index>(m[0].size()));
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < m[r].size(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m[r][c];
  return out;
}

double max_abs_diff(const Mat& a, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t c = 0; c < a[r].size(); ++c)
      worst = std::max(worst, std::abs(a[r][c] - b(static_cast<Eigen::Index>(r),
                                                   static_cast<Eigen::Index>(c))));
  return worst;
}

Mat matmul(const Mat& a, const Mat& b) {
  const std::size_t n = a.size(), inner = b.size(), m = b.empty() ? 0 : b[0].size();
  Mat out(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < inner; ++k)
      for (std::size_t j = 0; j < m; ++j) out[i][j] += a[i][k] * b[k][j];
  return out;
}

Mat add(const Mat& a, const Mat& b) {
  Mat out = a;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) out[i][j] += b[i][j];
  return out;
}

std::vector<double> softmax(const std::vector<double>& scores,
                            const std::vector<std::uint8_t>* mask) {
  std::vector<double> out(scores.size(), 0.0);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < scores.size(); ++j)
    if (!mask || (*mask)[j]) mx = std::max(mx, scores[j]);
  if (!std::isfinite(mx)) return out;  // fully masked
  double sum = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j)
    if (!mask || (*mask)[j]) {
      out[j] = std::exp(scores[j] - mx);
      sum += out[j];
    }
  for (double& v : out) v /= sum;
  return out;
}

Mat scaled_attention(const Mat& q, const Mat& k, const Mat& c,
                     const std::vector<std::uint8_t>* key_mask) {
  const std::size_t n_q = q.size(), n_k = k.size(), d = q.empty() ? 0 : q[0].size();
  const std::size_t d_out = c.empty() ? 0 : c[0].size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Mat out(n_q, std::vector<double>(d_out, 0.0));
  for (std::size_t i = 0; i < n_q; ++i) {
    std::vector<double> scores(n_k, 0.0);
    for (std::size_t j = 0; j < n_k; ++j) {
      double dot = 0.0;
      for (std::size_t t = 0; t < d; ++t) dot += q[i][t] * k[j][t];
      scores[j] = dot * scale;
    }
    const std::vector<double> w = softmax(scores, key_mask);
    for (std::size_t j = 0; j < n_k; ++j)
      for (std::size_t t = 0; t < d_out; ++t) out[i][t] += w[j] * c[j][t];
  }
  return out;
}

namespace {

Mat slice_cols(const Mat& m, std::size_t offset, std::size_t width) {
  Mat out(m.size(), std::vector<double>(width));
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < width; ++c) out[r][c] = m[r][offset + c];
  return out;
}

}  // namespace

Mat multi_head_attention(const Mat& wq, const Mat& wk, const Mat& wc, const Mat& wo,
                         const Mat& q_in, const Mat& kv_in, int heads,
                         const std::vector<std::uint8_t>* key_mask) {
  const std::size_t k = wq[0].size();
  const std::size_t dh = k / static_cast<std::size_t>(heads);
  Mat concat(q_in.size(), std::vector<double>(k, 0.0));
  for (int h = 0; h < heads; ++h) {
    const std::size_t off = static_cast<std::size_t>(h) * dh;
    const Mat qh = matmul(q_in, slice_cols(wq, off, dh));
    const Mat kh = matmul(kv_in, slice_cols(wk, off, dh));
    const Mat ch = matmul(kv_in, slice_cols(wc, off, dh));
    const Mat head = scaled_attention(qh, kh, ch, key_mask);
    for (std::size_t r = 0; r < head.size(); ++r)
      for (std::size_t c = 0; c < dh; ++c) concat[r][off + c] = head[r][c];
  }
  return matmul(concat, wo);
}

Mat layer_norm(const Mat& x, const std::vector<double>& gain, const std::vector<double>& bias,
               double eps) {
  Mat out = x;
  const std::size_t n = x.empty() ? 0 : x[0].size();
  for (std::size_t r = 0; r < x.size(); ++r) {
    double mean = 0.0;
    for (double v : x[r]) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x[r]) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double istd = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) out[r][c] = (x[r][c] - mean) * istd * gain[c] + bias[c];
  }
  return out;
}

Mat mal(const Mat& w_high, const Mat& w_low, const std::vector<double>& gain,
        const std::vector<double>& bias, const Mat& v, double eps) {
  const std::size_t n = v.size();
  const Mat v_high = matmul(v, w_high);  // N x 2k
  // scores[i][j] = v_high[i] . w_low[j]
  Mat weights(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> scores(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t t = 0; t < v_high[i].size(); ++t) scores[j] += v_high[i][t] * w_low[j][t];
    weights[i] = softmax(scores, nullptr);
  }
  const Mat v_tilde = matmul(weights, v);
  return layer_norm(add(v_tilde, v), gain, bias, eps);
}

Mat gelu_ffn(const Mat& x, const Mat& w1, const std::vector<double>& b1, const Mat& w2,
             const std::vector<double>& b2) {
  Mat mid = matmul(x, w1);
  for (auto& row : mid)
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double m = row[c] + b1[c];
      row[c] = 0.5 * m * (1.0 + std::erf(m * M_SQRT1_2));
    }
  Mat out = matmul(mid, w2);
  for (auto& row : out)
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += b2[c];
  return out;
}

namespace {

std::vector<double> vec_of(const Eigen::MatrixXd& m) { return row_of(m, 0); }

Mat param(const colog::Model& model, const std::string& name) {
  return from_eigen(model.params().at(name));
}

std::vector<double> param_vec(const colog::Model& model, const std::string& name) {
  return vec_of(model.params().at(name));
}

}  // namespace

Mat encoder_layer(const colog::Model& model, int layer, const std::string& modality,
                  const Mat& self_states, const Mat& other_states,
                  const std::vector<std::uint8_t>* other_mask) {
  const std::string p = "layer" + std::to_string(layer) + "." + modality + ".";
  const Mat attn =
      multi_head_attention(param(model, p + "attn.Wq"), param(model, p + "attn.Wk"),
                           param(model, p + "attn.Wc"), param(model, p + "attn.Wo"), self_states,
                           other_states, model.config().heads, other_mask);
  const Mat x1 = layer_norm(add(self_states, attn), param_vec(model, p + "ln1.g"),
                            param_vec(model, p + "ln1.b"), colog::kLayerNormEps);
  const Mat ffn = gelu_ffn(x1, param(model, p + "ffn.W1"), param_vec(model, p + "ffn.b1"),
                           param(model, p + "ffn.W2"), param_vec(model, p + "ffn.b2"));
  const Mat x2 = layer_norm(add(x1, ffn), param_vec(model, p + "ln2.g"),
                            param_vec(model, p + "ln2.b"), colog::kLayerNormEps);
  if (!model.config().use_mal) return x2;
  return mal(param(model, p + "mal.Whigh"), param(model, p + "mal.Wlow"),
             param_vec(model, p + "mal.ln.g"), param_vec(model, p + "mal.ln.b"), x2,
             colog::kLayerNormEps);
}

SampleForward collaborative_forward(const colog::Model& model, const colog::Batch& batch, int b) {
  const colog::ModelConfig& cfg = model.config();
  const Eigen::MatrixXd& embed = model.params().at("embed.tokens");

  // embedding + projection + positional
  Mat sem(static_cast<std::size_t>(cfg.sem_len));
  for (int i = 0; i < cfg.sem_len; ++i)
    sem[static_cast<std::size_t>(i)] =
        row_of(embed, batch.token_ids[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)]);
  sem = matmul(sem, param(model, "proj.sem.W"));
  {
    const auto bias = param_vec(model, "proj.sem.b");
    const Mat pos = param(model, "pos.sem");
    for (std::size_t r = 0; r < sem.size(); ++r)
      for (std::size_t c = 0; c < sem[r].size(); ++c) sem[r][c] += bias[c] + pos[r][c];
  }
  Mat seq = from_eigen(batch.sequence[static_cast<std::size_t>(b)]);
  seq = matmul(seq, param(model, "proj.seq.W"));
  {
    const auto bias = param_vec(model, "proj.seq.b");
    const Mat pos = param(model, "pos.seq");
    for (std::size_t r = 0; r < seq.size(); ++r)
      for (std::size_t c = 0; c < seq[r].size(); ++c) seq[r][c] += bias[c] + pos[r][c];
  }

  const auto& sem_mask = batch.sem_mask[static_cast<std::size_t>(b)];
  const auto& seq_mask = batch.seq_mask[static_cast<std::size_t>(b)];
  for (int t = 0; t < cfg.layers; ++t) {
    const Mat prev_sem = sem, prev_seq = seq;
    const Mat& sem_kv = cfg.impressed ? prev_seq : prev_sem;
    const Mat& seq_kv = cfg.impressed ? prev_sem : prev_seq;
    sem = encoder_layer(model, t, "sem", prev_sem, sem_kv,
                        cfg.impressed ? &seq_mask : &sem_mask);
    seq = encoder_layer(model, t, "seq", prev_seq, seq_kv,
                        cfg.impressed ? &sem_mask : &seq_mask);
  }

  SampleForward out;
  for (const std::string m : {"sem", "seq"}) {
    const Mat& v = m == "sem" ? sem : seq;
    const std::string p = "bl." + m + ".";
    const std::size_t n = v.size();
    std::vector<double> alpha(n, 1.0 / static_cast<double>(n));
    if (cfg.use_bl) {
      const Mat v_high = matmul(v, param(model, p + "Whigh"));
      const auto wnode = param_vec(model, p + "wnode");
      std::vector<double> scores(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < wnode.size(); ++t) scores[i] += v_high[i][t] * wnode[t];
      alpha = softmax(scores, nullptr);
    }
    std::vector<double> pooled(v[0].size(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < pooled.size(); ++c) pooled[c] += alpha[i] * v[i][c];
    const Mat wlat = param(model, p + "Wlat");
    const auto blat = param_vec(model, p + "blat");
    std::vector<double> o(static_cast<std::size_t>(cfg.latent), 0.0);
    for (std::size_t c = 0; c < o.size(); ++c) {
      for (std::size_t r = 0; r < pooled.size(); ++r) o[c] += pooled[r] * wlat[r][c];
      o[c] += blat[c];
    }
    (m == "sem" ? out.o_sem : out.o_seq) = std::move(o);
  }

  std::vector<double> fused(out.o_sem.size());
  for (std::size_t c = 0; c < fused.size(); ++c) fused[c] = out.o_sem[c] + out.o_seq[c];
  const Mat latent = layer_norm({fused}, param_vec(model, "cls.ln.g"),
                                param_vec(model, "cls.ln.b"), colog::kLayerNormEps);
  out.latent = latent[0];
  const Mat w_cls = param(model, "cls.W");
  const auto b_cls = param_vec(model, "cls.b");
  out.logits.assign(static_cast<std::size_t>(cfg.n_classes), 0.0);
  for (std::size_t c = 0; c < out.logits.size(); ++c) {
    for (std::size_t r = 0; r < out.latent.size(); ++r)
      out.logits[c] += out.latent[r] * w_cls[r][c];
    out.logits[c] += b_cls[c];
  }
  return out;
}

}  // namespace oracle
