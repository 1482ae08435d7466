#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace colog {

// Lowercases, splits on whitespace/punctuation boundaries, and replaces
// digits-only runs with the NUM sentinel (uppercase, so it cannot collide
// with a lowercased token).
std::vector<std::string> tokenize(const std::string& message);

inline constexpr const char* kNumToken = "NUM";

// Token ids. 0 = PAD, 1 = UNK; built from the training split only.
class Vocabulary {
public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary() = default;

  // Throws DataError on an empty corpus (no tokens at all).
  static Vocabulary build(const std::vector<std::string>& train_messages);

  int lookup(const std::string& token) const;
  std::vector<int> encode(const std::string& message) const;  // tokenize + lookup

  int size() const { return static_cast<int>(tokens_.size()); }  // includes PAD/UNK
  const std::string& token_at(int id) const { return tokens_.at(id); }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> tokens_ = {"<pad>", "<unk>"};
};

// Negative-sentiment keyword lexicon; lowercase single tokens.
std::set<std::string> default_negative_lexicon();
std::set<std::string> load_lexicon(const std::string& path);  // one word per line

// 0 (anomaly) iff any token of the message is in the lexicon, else 1.
// Header-only / empty messages label 1.
int label_with_keywords(const std::string& message, const std::set<std::string>& lexicon);

enum class WindowKind { kBackground, kContext };

WindowKind window_kind_from_string(const std::string& name);  // throws ConfigError
std::string to_string(WindowKind kind);

// Fixed-length token-id view of one message.
struct SemanticInput {
  std::vector<int> token_ids;     // length sem_len, PAD-padded tail
  std::vector<std::uint8_t> mask; // 1 for real tokens
};

SemanticInput build_semantic(const std::vector<int>& ids, int sem_len);

// Event vectors surrounding one record, zero-padded to seq_len. Rows follow
// Fig-5 order: the W predecessors oldest-first, then (context only) the W
// successors. Out-of-file positions stay zero with mask 0.
struct SequenceInput {
  Eigen::MatrixXd vectors;        // seq_len x event_dim
  std::vector<std::uint8_t> mask; // 1 for real events
};

// `event_vectors` holds one row per record of the file, in record order.
SequenceInput build_sequence(const Eigen::MatrixXd& event_vectors, long index, int window,
                             WindowKind kind, int seq_len);

// Also used to materialize which neighbor rows feed a record's window
// (-1 marks an out-of-file position). Size 2W for context, W for background.
std::vector<long> window_rows(long index, long record_count, int window, WindowKind kind);

// window_label = 0 iff any in-window point label is 0. Joint coding:
// 0 both anomalous, 1 only the event, 2 only the window, 3 both normal.
struct LabelPair {
  int window_label;
  int joint_label;
};
LabelPair derive_labels(const std::vector<int>& point_labels, long index, int window,
                        WindowKind kind);
int joint_label_of(int point_label, int window_label);

// One training/inference unit.
struct Sample {
  long key = 0;  // line_no
  SemanticInput semantic;
  SequenceInput sequence;
  int point_label = 1;
  int window_label = 1;
  int joint_label = 3;
};

// Padded per-sample tensors for both modalities plus label vectors.
struct Batch {
  std::vector<std::vector<int>> token_ids;            // B x sem_len
  std::vector<std::vector<std::uint8_t>> sem_mask;    // B x sem_len
  std::vector<Eigen::MatrixXd> sequence;              // B of seq_len x event_dim
  std::vector<std::vector<std::uint8_t>> seq_mask;    // B x seq_len
  std::vector<int> point_labels;
  std::vector<int> joint_labels;

  int size() const { return static_cast<int>(token_ids.size()); }
};

// Deterministic under the seed; fixed batch_size with a short final batch.
// Throws DataError on an empty sample set.
std::vector<Batch> make_batches(const std::vector<Sample>& samples, int batch_size,
                                std::uint64_t shuffle_seed);

}  // namespace colog
