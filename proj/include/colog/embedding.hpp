#pragma once

#include <memory>
#include <string>
#include <unordered_map>

#include <Eigen/Dense>

#include "colog/modality.hpp"

namespace colog {

// Turns one log message into a fixed-size event vector. Deterministic for a
// given message and provider seed; empty messages map to the zero vector.
class EmbeddingProvider {
public:
  virtual ~EmbeddingProvider() = default;
  virtual Eigen::VectorXd embed(const std::string& message) const = 0;
  virtual int dim() const = 0;
};

// Default provider: mean of fixed per-token gaussian vectors (UNK for OOV),
// pushed through a seeded random projection word_dim -> dim, then L2
// normalized. Same message gives the same vector; messages sharing tokens
// land nearby.
class HashedProjectionProvider : public EmbeddingProvider {
public:
  HashedProjectionProvider(const Vocabulary& vocab, std::uint64_t seed, int dim = 384,
                           int word_dim = 300);

  Eigen::VectorXd embed(const std::string& message) const override;
  int dim() const override { return static_cast<int>(projection_.cols()); }

private:
  const Vocabulary& vocab_;
  Eigen::MatrixXd token_vectors_;  // vocab_size x word_dim
  Eigen::MatrixXd projection_;     // word_dim x dim
};

// Loads precomputed sentence vectors: a text file of messages (one per line)
// paired with a binary matrix whose row r embeds message r. Messages not in
// the file fall back to the wrapped provider.
class FileBackedProvider : public EmbeddingProvider {
public:
  FileBackedProvider(const std::string& messages_path, const std::string& matrix_path,
                     std::shared_ptr<const EmbeddingProvider> fallback);

  Eigen::VectorXd embed(const std::string& message) const override;
  int dim() const override { return static_cast<int>(vectors_.cols()); }

private:
  std::unordered_map<std::string, Eigen::Index> rows_;
  Eigen::MatrixXd vectors_;
  std::shared_ptr<const EmbeddingProvider> fallback_;
};

// Embeds every record message into one row of a matrix, record order.
Eigen::MatrixXd embed_messages(const EmbeddingProvider& provider,
                               const std::vector<std::string>& messages);

}  // namespace colog
