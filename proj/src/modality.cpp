#include "colog/modality.hpp"

#include <algorithm>
#include <fstream>

#include "colog/errors.hpp"
#include "colog/rng.hpp"

namespace colog {

std::vector<std::string> tokenize(const std::string& message) {
  std::vector<std::string> tokens;
  std::string cur;
  bool all_digits = true;
  const auto flush = [&] {
    if (cur.empty()) return;
    if (all_digits)
      tokens.emplace_back(kNumToken);
    else
      tokens.push_back(cur);
    cur.clear();
    all_digits = true;
  };
  for (unsigned char c : message) {
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
      if (!std::isdigit(c)) all_digits = false;
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& train_messages) {
  Vocabulary vocab;
  for (const auto& message : train_messages) {
    for (const auto& token : tokenize(message)) {
      if (vocab.ids_.count(token)) continue;
      vocab.ids_[token] = static_cast<int>(vocab.tokens_.size());
      vocab.tokens_.push_back(token);
    }
  }
  if (vocab.tokens_.size() <= 2) throw DataError("vocabulary: empty training corpus");
  return vocab;
}

int Vocabulary::lookup(const std::string& token) const {
  const auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(const std::string& message) const {
  std::vector<int> ids;
  for (const auto& token : tokenize(message)) ids.push_back(lookup(token));
  return ids;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary: " + path);
  for (std::size_t id = 2; id < tokens_.size(); ++id)
    out << tokens_[id] << '\t' << id << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary: " + path);
  Vocabulary vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("vocabulary: malformed line in " + path);
    const std::string token = line.substr(0, tab);
    const int id = std::stoi(line.substr(tab + 1));
    if (id != static_cast<int>(vocab.tokens_.size()))
      throw DataError("vocabulary: non-contiguous ids in " + path);
    vocab.ids_[token] = id;
    vocab.tokens_.push_back(token);
  }
  return vocab;
}

std::set<std::string> default_negative_lexicon() {
  return {"error",  "fail",     "failed",   "failure", "fatal",   "denied",
          "invalid", "unable",  "exception", "critical", "refused", "timeout",
          "corrupt", "panic",   "warning"};
}

std::set<std::string> load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon: " + path);
  std::set<std::string> lexicon;
  std::string word;
  while (std::getline(in, word)) {
    const auto hash = word.find('#');
    if (hash != std::string::npos) word.erase(hash);
    const auto tokens = tokenize(word);
    for (const auto& t : tokens) lexicon.insert(t);
  }
  if (lexicon.empty()) throw DataError("lexicon is empty: " + path);
  return lexicon;
}

int label_with_keywords(const std::string& message, const std::set<std::string>& lexicon) {
  for (const auto& token : tokenize(message))
    if (lexicon.count(token)) return 0;
  return 1;
}

WindowKind window_kind_from_string(const std::string& name) {
  if (name == "background") return WindowKind::kBackground;
  if (name == "context") return WindowKind::kContext;
  throw ConfigError("unknown window kind `" + name + "` (background|context)");
}

std::string to_string(WindowKind kind) {
  return kind == WindowKind::kBackground ? "background" : "context";
}

SemanticInput build_semantic(const std::vector<int>& ids, int sem_len) {
  SemanticInput out;
  out.token_ids.assign(sem_len, Vocabulary::kPad);
  out.mask.assign(sem_len, 0);
  const int n = std::min<int>(sem_len, static_cast<int>(ids.size()));  // truncate overflow
  for (int i = 0; i < n; ++i) {
    out.token_ids[i] = ids[i];
    out.mask[i] = 1;
  }
  return out;
}

std::vector<long> window_rows(long index, long record_count, int window, WindowKind kind) {
  std::vector<long> rows;
  const auto push = [&](long j) { rows.push_back(j >= 0 && j < record_count ? j : -1); };
  for (long j = index - window; j <= index - 1; ++j) push(j);  // oldest first
  if (kind == WindowKind::kContext)
    for (long j = index + 1; j <= index + window; ++j) push(j);
  return rows;
}

SequenceInput build_sequence(const Eigen::MatrixXd& event_vectors, long index, int window,
                             WindowKind kind, int seq_len) {
  if (window < 1) throw ConfigError("window size must be >= 1");
  const auto rows = window_rows(index, event_vectors.rows(), window, kind);
  if (static_cast<int>(rows.size()) > seq_len)
    throw ConfigError("sequence window (" + std::to_string(rows.size()) +
                      " positions) exceeds seq_len " + std::to_string(seq_len));
  SequenceInput out;
  out.vectors = Eigen::MatrixXd::Zero(seq_len, event_vectors.cols());
  out.mask.assign(seq_len, 0);
  for (std::size_t p = 0; p < rows.size(); ++p) {
    if (rows[p] < 0) continue;  // out-of-file: zero row, mask 0
    out.vectors.row(static_cast<Eigen::Index>(p)) = event_vectors.row(rows[p]);
    out.mask[p] = 1;
  }
  return out;
}

int joint_label_of(int point_label, int window_label) {
  if (point_label == 0 && window_label == 0) return 0;
  if (point_label == 0) return 1;
  if (window_label == 0) return 2;
  return 3;
}

LabelPair derive_labels(const std::vector<int>& point_labels, long index, int window,
                        WindowKind kind) {
  const auto rows = window_rows(index, static_cast<long>(point_labels.size()), window, kind);
  int window_label = 1;
  for (long j : rows)
    if (j >= 0 && point_labels[static_cast<std::size_t>(j)] == 0) window_label = 0;
  return {window_label, joint_label_of(point_labels[static_cast<std::size_t>(index)], window_label)};
}

std::vector<Batch> make_batches(const std::vector<Sample>& samples, int batch_size,
                                std::uint64_t shuffle_seed) {
  if (samples.empty()) throw DataError("make_batches: empty sample set");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(shuffle_seed);
  rng.shuffle(order);

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    Batch b;
    for (std::size_t i = start; i < end; ++i) {
      const Sample& s = samples[order[i]];
      b.token_ids.push_back(s.semantic.token_ids);
      b.sem_mask.push_back(s.semantic.mask);
      b.sequence.push_back(s.sequence.vectors);
      b.seq_mask.push_back(s.sequence.mask);
      b.point_labels.push_back(s.point_label);
      b.joint_labels.push_back(s.joint_label);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace colog
