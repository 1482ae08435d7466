#include "colog/embedding.hpp"

#include <cmath>
#include <fstream>

#include "colog/errors.hpp"
#include "colog/matrixio.hpp"
#include "colog/rng.hpp"

namespace colog {

HashedProjectionProvider::HashedProjectionProvider(const Vocabulary& vocab, std::uint64_t seed,
                                                   int dim, int word_dim)
    : vocab_(vocab) {
  if (dim < 1 || word_dim < 1) throw ConfigError("embedding dims must be >= 1");
  token_vectors_.resize(vocab.size(), word_dim);
  for (int id = 0; id < vocab.size(); ++id) {
    // Per-id stream keeps vectors stable under vocabulary growth order.
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(id)));
    for (int c = 0; c < word_dim; ++c) token_vectors_(id, c) = rng.gaussian();
  }
  token_vectors_.row(Vocabulary::kPad).setZero();
  Rng rng(derive_seed(seed, "sentence-projection"));
  projection_.resize(word_dim, dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(word_dim));
  for (int r = 0; r < word_dim; ++r)
    for (int c = 0; c < dim; ++c) projection_(r, c) = rng.gaussian() * scale;
}

Eigen::VectorXd HashedProjectionProvider::embed(const std::string& message) const {
  const auto ids = vocab_.encode(message);
  if (ids.empty()) return Eigen::VectorXd::Zero(projection_.cols());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(token_vectors_.cols());
  for (int id : ids) mean += token_vectors_.row(id).transpose();
  mean /= static_cast<double>(ids.size());
  Eigen::VectorXd v = projection_.transpose() * mean;
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

FileBackedProvider::FileBackedProvider(const std::string& messages_path,
                                       const std::string& matrix_path,
                                       std::shared_ptr<const EmbeddingProvider> fallback)
    : fallback_(std::move(fallback)) {
  vectors_ = read_matrix(matrix_path);
  std::ifstream in(messages_path);
  if (!in) throw DataError("cannot open embedding message list: " + messages_path);
  std::string line;
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    if (row >= vectors_.rows())
      throw DataError("embedding message list longer than matrix: " + messages_path);
    rows_.emplace(line, row++);
  }
  if (row != vectors_.rows())
    throw DataError("embedding message list shorter than matrix: " + messages_path);
  if (fallback_ && fallback_->dim() != dim())
    throw ConfigError("embedding fallback dim mismatch");
}

Eigen::VectorXd FileBackedProvider::embed(const std::string& message) const {
  const auto it = rows_.find(message);
  if (it != rows_.end()) return vectors_.row(it->second).transpose();
  if (fallback_) return fallback_->embed(message);
  return Eigen::VectorXd::Zero(vectors_.cols());
}

Eigen::MatrixXd embed_messages(const EmbeddingProvider& provider,
                               const std::vector<std::string>& messages) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(messages.size()), provider.dim());
  for (std::size_t i = 0; i < messages.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = provider.embed(messages[i]).transpose();
  return out;
}

}  // namespace colog
