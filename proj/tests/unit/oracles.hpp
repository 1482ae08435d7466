#pragma once

// Straight-line oracle evaluations used by the unit and acceptance suites.
// Everything here is computed with explicit index loops over plain vectors,
// independent of the library's linear-algebra code paths. Weights are read
// from the model's tensors at the boundary only.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "colog/model.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;

Mat from_eigen(const Eigen::MatrixXd& m);
Eigen::MatrixXd to_eigen(const Mat& m);
double max_abs_diff(const Mat& a, const Eigen::MatrixXd& b);

Mat matmul(const Mat& a, const Mat& b);
Mat add(const Mat& a, const Mat& b);
std::vector<double> softmax(const std::vector<double>& scores,
                            const std::vector<std::uint8_t>* mask);

// softmax(Q K^T / sqrt(cols(Q))) C, masked keys excluded, all-masked rows zero.
Mat scaled_attention(const Mat& q, const Mat& k, const Mat& c,
                     const std::vector<std::uint8_t>* key_mask);

// Heads slice the hidden width; concat times Wo.
Mat multi_head_attention(const Mat& wq, const Mat& wk, const Mat& wc, const Mat& wo,
                         const Mat& q_in, const Mat& kv_in, int heads,
                         const std::vector<std::uint8_t>* key_mask);

Mat layer_norm(const Mat& x, const std::vector<double>& gain, const std::vector<double>& bias,
               double eps);

// V_high = V Whigh; w = row_softmax(V_high Wlow^T); out = LN(w V + V).
Mat mal(const Mat& w_high, const Mat& w_low, const std::vector<double>& gain,
        const std::vector<double>& bias, const Mat& v, double eps);

Mat gelu_ffn(const Mat& x, const Mat& w1, const std::vector<double>& b1, const Mat& w2,
             const std::vector<double>& b2);

// One encoder layer per the layer contract:
// x1 = LN(self + MHIA), x2 = LN(x1 + FFN(x1)), out = MAL(x2). No dropout.
Mat encoder_layer(const colog::Model& model, int layer, const std::string& modality,
                  const Mat& self_states, const Mat& other_states,
                  const std::vector<std::uint8_t>* other_mask);

struct SampleForward {
  std::vector<double> o_sem, o_seq;  // balancing-layer outputs
  std::vector<double> latent;        // LN(o_sem + o_seq)
  std::vector<double> logits;
};

// Whole-model forward for one sample of the batch, dropout off.
SampleForward collaborative_forward(const colog::Model& model, const colog::Batch& batch, int b);

}  // namespace oracle
