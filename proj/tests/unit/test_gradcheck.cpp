#include <doctest.h>

#include <chrono>
#include <cmath>

#include "colog/model.hpp"
#include "test_helpers.hpp"

using namespace colog;

namespace {

double loss_only(const Model& model, const Batch& batch, const std::vector<int>& labels) {
  return model.collaborative_forward(batch, &labels).loss;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  double seconds = 0.0;
};

GradCheckResult run_gradcheck(Model& model, const Batch& batch, const std::vector<int>& labels,
                              double step) {
  const auto t0 = std::chrono::steady_clock::now();
  Parameters grads = model.params().zeros_like();
  model.loss_and_gradients(batch, labels, grads, nullptr);

  GradCheckResult result;
  model.params().for_each([&](const std::string& name, Eigen::MatrixXd& p) {
    const Eigen::MatrixXd& g = grads.at(name);
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.cols(); ++c) {
        if (name == "embed.tokens" && r == Vocabulary::kPad) continue;  // pinned at zero
        const double original = p(r, c);
        p(r, c) = original + step;
        const double plus = loss_only(model, batch, labels);
        p(r, c) = original - step;
        const double minus = loss_only(model, batch, labels);
        p(r, c) = original;
        const double numeric = (plus - minus) / (2.0 * step);
        const double analytic = g(r, c);
        const double rel = std::abs(analytic - numeric) /
                           std::max({1e-6, std::abs(analytic), std::abs(numeric)});
        if (rel > result.max_rel_error) {
          result.max_rel_error = rel;
          result.worst_tensor = name;
        }
      }
    }
  });
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences on every tensor") {
  // k=8, h=2, T=1, L_sem=L_seq=4, vocab=20, latent=16, dropout=0, float64
  ModelConfig cfg = testutil::tiny_config(2024);
  Model model(cfg);
  const Batch batch = testutil::random_batch(cfg, 3, 555);
  const auto& labels = batch.point_labels;

  const GradCheckResult r = run_gradcheck(model, batch, labels, 1e-5);
  INFO("worst tensor: ", r.worst_tensor, ", rel error ", r.max_rel_error);
  CHECK(r.max_rel_error < 1e-4);
  CHECK(r.seconds < 60.0);
}

TEST_CASE("gradcheck also passes in 4-class mode and with ablation toggles") {
  SUBCASE("4-class") {
    ModelConfig cfg = testutil::tiny_config(7);
    cfg.n_classes = 4;
    Model model(cfg);
    const Batch batch = testutil::random_batch(cfg, 2, 66);
    CHECK(run_gradcheck(model, batch, batch.joint_labels, 1e-5).max_rel_error < 1e-4);
  }
  SUBCASE("plain self-attention (impressed off)") {
    ModelConfig cfg = testutil::tiny_config(8);
    cfg.impressed = false;
    Model model(cfg);
    const Batch batch = testutil::random_batch(cfg, 2, 67);
    CHECK(run_gradcheck(model, batch, batch.point_labels, 1e-5).max_rel_error < 1e-4);
  }
  SUBCASE("MAL off") {
    ModelConfig cfg = testutil::tiny_config(9);
    cfg.use_mal = false;
    Model model(cfg);
    const Batch batch = testutil::random_batch(cfg, 2, 68);
    CHECK(run_gradcheck(model, batch, batch.point_labels, 1e-5).max_rel_error < 1e-4);
  }
  SUBCASE("BL off") {
    ModelConfig cfg = testutil::tiny_config(10);
    cfg.use_bl = false;
    Model model(cfg);
    const Batch batch = testutil::random_batch(cfg, 2, 69);
    CHECK(run_gradcheck(model, batch, batch.point_labels, 1e-5).max_rel_error < 1e-4);
  }
}

TEST_CASE("PAD embedding row receives no gradient; unused rows stay zero") {
  ModelConfig cfg = testutil::tiny_config(11);
  Model model(cfg);
  Batch batch = testutil::random_batch(cfg, 2, 77);
  // restrict the batch to ids {2,3}: everything else must get zero gradient
  for (auto& ids : batch.token_ids)
    for (auto& id : ids)
      if (id != 0) id = 2 + id % 2;
  Parameters grads = model.params().zeros_like();
  model.loss_and_gradients(batch, batch.point_labels, grads, nullptr);
  const Eigen::MatrixXd& ge = grads.at("embed.tokens");
  CHECK(ge.row(Vocabulary::kPad).isZero());
  for (int id = 4; id < cfg.vocab_size; ++id) CHECK(ge.row(id).isZero());
  CHECK_FALSE(ge.row(2).isZero());
}

TEST_CASE("gradients flow across modalities in both directions") {
  ModelConfig cfg = testutil::tiny_config(12);
  Model model(cfg);
  const Batch batch = testutil::random_batch(cfg, 2, 88);
  Parameters grads = model.params().zeros_like();
  model.loss_and_gradients(batch, batch.point_labels, grads, nullptr);
  // semantic encoder projects the sequence states through its K path and
  // vice versa, so both cross projections must see gradient
  CHECK(grads.at("layer0.sem.attn.Wk").norm() > 0.0);
  CHECK(grads.at("layer0.seq.attn.Wk").norm() > 0.0);
  CHECK(grads.at("proj.seq.W").norm() > 0.0);
  CHECK(grads.at("embed.tokens").norm() > 0.0);
}

TEST_CASE("dropout masks are honored in backward (gradcheck with frozen masks)") {
  // With dropout active, gradients are exact for the drawn masks. Freezing
  // the rng by reusing the same stream per evaluation verifies the mask
  // bookkeeping: loss under a cloned rng reproduces bitwise.
  ModelConfig cfg = testutil::tiny_config(13);
  cfg.dropout = 0.3;
  Model model(cfg);
  const Batch batch = testutil::random_batch(cfg, 2, 99);
  Rng rng_a(4242), rng_b(4242);
  const double a = model.collaborative_forward(batch, &batch.point_labels, &rng_a).loss;
  const double b = model.collaborative_forward(batch, &batch.point_labels, &rng_b).loss;
  CHECK(a == b);
  Rng rng_c(4243);
  const double c = model.collaborative_forward(batch, &batch.point_labels, &rng_c).loss;
  CHECK(a != c);  // different masks, different loss
}
