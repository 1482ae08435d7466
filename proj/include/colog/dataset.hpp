#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "colog/drain.hpp"
#include "colog/embedding.hpp"
#include "colog/modality.hpp"

namespace colog {

enum class Split { kTrain = 0, kVal = 1, kTest = 2 };

std::string to_string(Split split);
Split split_from_string(const std::string& name);  // throws ConfigError

// One line of samples.tsv. seq_rows index the companion vectors.bin; -1
// marks before-file-start / after-file-end positions (zero, masked).
struct PreparedRecord {
  long key = 0;  // global row, equals the vectors.bin row
  int file_id = 0;
  long line_no = 0;
  Split split = Split::kTrain;
  std::vector<long> seq_rows;
  std::vector<int> token_ids;  // unpadded, may be empty (header-only)
  int point_label = 1;
  int window_label = 1;
  int joint_label = 3;
};

// Prepared dataset on disk:
//   meta.conf     key-value parameters
//   vocab.tsv     token \t id
//   samples.tsv   key, file, line_no, split, seq_rows, token_ids, labels
//   vectors.bin   one event vector per record (binary matrix)
struct PreparedDataset {
  int window = 1;
  WindowKind kind = WindowKind::kContext;
  int sem_len = 60;
  int seq_len = 60;
  int event_dim = 384;
  std::uint64_t seed = 42;
  std::vector<std::string> file_names;
  std::vector<PreparedRecord> records;
  Eigen::MatrixXd vectors;
  Vocabulary vocab;

  void save(const std::string& dir) const;
  // `samples_file` overrides samples.tsv (e.g. a balanced subset).
  static PreparedDataset load(const std::string& dir, const std::string& samples_file = "");

  // split < 0 selects everything.
  std::vector<Sample> make_samples(int split) const;
  std::vector<const PreparedRecord*> records_in(Split split) const;
  Sample make_sample(const PreparedRecord& record) const;
};

struct PrepareSpec {
  struct FileSpec {
    std::string path;
    std::string pattern = "syslog";  // builtin name or a custom regex
    std::string truth;               // optional line_no -> point label file
  };
  std::vector<FileSpec> files;
  int window = 1;
  WindowKind kind = WindowKind::kContext;
  int sem_len = 60;
  int seq_len = 60;
  int event_dim = 384;
  int provider_word_dim = 300;
  std::vector<double> split_ratios = {0.6, 0.2, 0.2};
  std::uint64_t seed = 42;
  std::set<std::string> lexicon;  // empty -> default lexicon
  std::string vocab_path;         // reuse a previously built vocabulary
  std::string provider_messages;  // file-backed sentence vectors (optional)
  std::string provider_matrix;

  void validate() const;  // throws ConfigError
};

// Full prepare stage: header split, labeling, seeded split assignment,
// train-only vocabulary, event-vector embedding, window wiring.
PreparedDataset prepare_dataset(const PrepareSpec& spec);

// Ground-truth labels written by the synthesizer: line_no, point[, ...].
std::vector<std::pair<long, int>> read_truth_points(const std::string& path);

}  // namespace colog
