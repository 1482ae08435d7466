#include "colog/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "colog/config.hpp"
#include "colog/errors.hpp"
#include "colog/matrixio.hpp"
#include "colog/rng.hpp"

namespace colog {

namespace {

std::string join_longs(const std::vector<long>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

std::string join_ints(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

template <typename T>
std::vector<T> split_numbers(const std::string& s) {
  std::vector<T> out;
  if (s.empty()) return out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(static_cast<T>(std::stol(item)));
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

}  // namespace

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    default: return "test";
  }
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split `" + name + "` (train|val|test)");
}

void PrepareSpec::validate() const {
  if (files.empty()) throw ConfigError("prepare: no input files given");
  if (window < 1) throw ConfigError("prepare: window must be >= 1");
  if (sem_len < 1 || seq_len < 1) throw ConfigError("prepare: modality lengths must be >= 1");
  const int positions = kind == WindowKind::kContext ? 2 * window : window;
  if (positions > seq_len)
    throw ConfigError("prepare: window needs " + std::to_string(positions) +
                      " sequence positions but seq_len is " + std::to_string(seq_len));
  if (split_ratios.size() != 3) throw ConfigError("prepare: split must have 3 ratios");
  double sum = 0.0;
  for (double r : split_ratios) {
    if (r < 0.0) throw ConfigError("prepare: split ratios must be >= 0");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("prepare: split ratios must sum to 1");
}

std::vector<std::pair<long, int>> read_truth_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open truth file: " + path);
  std::vector<std::pair<long, int>> points;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() < 2) throw DataError("truth file: malformed line in " + path);
    points.emplace_back(std::stol(fields[0]), std::stoi(fields[1]));
  }
  return points;
}

PreparedDataset prepare_dataset(const PrepareSpec& spec) {
  spec.validate();
  const std::set<std::string> lexicon =
      spec.lexicon.empty() ? default_negative_lexicon() : spec.lexicon;

  PreparedDataset ds;
  ds.window = spec.window;
  ds.kind = spec.kind;
  ds.sem_len = spec.sem_len;
  ds.seq_len = spec.seq_len;
  ds.event_dim = spec.event_dim;
  ds.seed = spec.seed;

  // 1. parse every file, label points
  struct FileData {
    std::vector<LogRecord> records;
  };
  std::vector<FileData> files;
  long total = 0;
  for (const auto& fs : spec.files) {
    const HeaderPattern pattern = HeaderPattern::is_builtin(fs.pattern)
                                      ? HeaderPattern::named(fs.pattern)
                                      : HeaderPattern(fs.pattern);
    FileData fd;
    fd.records = split_file(fs.path, pattern);
    if (!fs.truth.empty()) {
      std::map<long, int> by_line;
      for (const auto& [line_no, label] : read_truth_points(fs.truth)) by_line[line_no] = label;
      for (auto& rec : fd.records) {
        const auto it = by_line.find(rec.line_no);
        if (it == by_line.end())
          throw DataError("truth file " + fs.truth + " is missing line " +
                          std::to_string(rec.line_no));
        rec.label = it->second;
      }
    } else {
      for (auto& rec : fd.records) rec.label = label_with_keywords(rec.message, lexicon);
    }
    total += static_cast<long>(fd.records.size());
    ds.file_names.push_back(fs.path);
    files.push_back(std::move(fd));
  }
  if (total == 0) throw DataError("prepare: no records in any input file");

  // 2. seeded split assignment over the pooled records
  std::vector<Split> split_of(static_cast<std::size_t>(total), Split::kTest);
  {
    std::vector<std::size_t> order(static_cast<std::size_t>(total));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(spec.seed, 10));
    rng.shuffle(order);
    const long n_train = static_cast<long>(spec.split_ratios[0] * total);
    const long n_val = static_cast<long>(spec.split_ratios[1] * total);
    for (long i = 0; i < total; ++i) {
      const Split s = i < n_train            ? Split::kTrain
                      : i < n_train + n_val  ? Split::kVal
                                             : Split::kTest;
      split_of[order[static_cast<std::size_t>(i)]] = s;
    }
  }

  // 3. vocabulary from the training split only (or reuse an existing one)
  std::vector<std::string> train_messages;
  {
    long g = 0;
    for (const auto& fd : files)
      for (const auto& rec : fd.records) {
        if (split_of[static_cast<std::size_t>(g)] == Split::kTrain)
          train_messages.push_back(rec.message);
        ++g;
      }
  }
  ds.vocab = spec.vocab_path.empty() ? Vocabulary::build(train_messages)
                                     : Vocabulary::load(spec.vocab_path);

  // 4. event vectors for every record
  auto hashed = std::make_shared<HashedProjectionProvider>(
      ds.vocab, derive_seed(spec.seed, 20), spec.event_dim, spec.provider_word_dim);
  std::shared_ptr<const EmbeddingProvider> provider = hashed;
  if (!spec.provider_messages.empty())
    provider = std::make_shared<FileBackedProvider>(spec.provider_messages, spec.provider_matrix,
                                                    hashed);
  std::vector<std::string> all_messages;
  all_messages.reserve(static_cast<std::size_t>(total));
  for (const auto& fd : files)
    for (const auto& rec : fd.records) all_messages.push_back(rec.message);
  ds.vectors = embed_messages(*provider, all_messages);

  // 5. records with window wiring and derived labels
  long base = 0;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const auto& recs = files[f].records;
    std::vector<int> point_labels(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) point_labels[i] = *recs[i].label;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      PreparedRecord pr;
      pr.key = base + static_cast<long>(i);
      pr.file_id = static_cast<int>(f);
      pr.line_no = recs[i].line_no;
      pr.split = split_of[static_cast<std::size_t>(pr.key)];
      const auto rows =
          window_rows(static_cast<long>(i), static_cast<long>(recs.size()), spec.window, spec.kind);
      pr.seq_rows.reserve(rows.size());
      for (long r : rows) pr.seq_rows.push_back(r < 0 ? -1 : base + r);
      pr.token_ids = ds.vocab.encode(recs[i].message);
      pr.point_label = point_labels[i];
      const LabelPair lp = derive_labels(point_labels, static_cast<long>(i), spec.window, spec.kind);
      pr.window_label = lp.window_label;
      pr.joint_label = lp.joint_label;
      ds.records.push_back(std::move(pr));
    }
    base += static_cast<long>(recs.size());
  }
  return ds;
}

void PreparedDataset::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream meta(dir + "/meta.conf");
    if (!meta) throw DataError("cannot write " + dir + "/meta.conf");
    meta << "window = " << window << "\n"
         << "window_kind = " << to_string(kind) << "\n"
         << "sem_len = " << sem_len << "\n"
         << "seq_len = " << seq_len << "\n"
         << "event_dim = " << event_dim << "\n"
         << "seed = " << seed << "\n"
         << "files = " << file_names.size() << "\n";
    for (std::size_t i = 0; i < file_names.size(); ++i)
      meta << "file." << i << " = " << file_names[i] << "\n";
  }
  vocab.save(dir + "/vocab.tsv");
  write_matrix(dir + "/vectors.bin", vectors);
  std::ofstream out(dir + "/samples.tsv");
  if (!out) throw DataError("cannot write " + dir + "/samples.tsv");
  for (const auto& r : records) {
    out << r.key << '\t' << r.file_id << '\t' << r.line_no << '\t' << to_string(r.split) << '\t'
        << join_longs(r.seq_rows) << '\t' << join_ints(r.token_ids) << '\t' << r.point_label
        << '\t' << r.window_label << '\t' << r.joint_label << '\n';
  }
}

PreparedDataset PreparedDataset::load(const std::string& dir, const std::string& samples_file) {
  PreparedDataset ds;
  if (!std::ifstream(dir + "/meta.conf"))
    throw DataError("not a prepared dataset (no meta.conf): " + dir);
  const Config meta = Config::from_file(dir + "/meta.conf");
  ds.window = static_cast<int>(meta.get_int("window"));
  ds.kind = window_kind_from_string(meta.get_string("window_kind"));
  ds.sem_len = static_cast<int>(meta.get_int("sem_len"));
  ds.seq_len = static_cast<int>(meta.get_int("seq_len"));
  ds.event_dim = static_cast<int>(meta.get_int("event_dim"));
  ds.seed = static_cast<std::uint64_t>(meta.get_int("seed"));
  const long n_files = meta.get_int("files");
  for (long i = 0; i < n_files; ++i)
    ds.file_names.push_back(meta.get_string("file." + std::to_string(i)));

  ds.vocab = Vocabulary::load(dir + "/vocab.tsv");
  ds.vectors = read_matrix(dir + "/vectors.bin");
  if (ds.vectors.cols() != ds.event_dim)
    throw DataError("prepared dataset: vectors.bin width != event_dim");

  const std::string samples_path = samples_file.empty() ? dir + "/samples.tsv" : samples_file;
  std::ifstream in(samples_path);
  if (!in) throw DataError("cannot open samples file: " + samples_path);
  std::string line;
  long line_count = 0;
  while (std::getline(in, line)) {
    ++line_count;
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 9)
      throw DataError(samples_path + ":" + std::to_string(line_count) +
                      ": expected 9 tab-separated fields");
    PreparedRecord r;
    r.key = std::stol(fields[0]);
    r.file_id = std::stoi(fields[1]);
    r.line_no = std::stol(fields[2]);
    r.split = split_from_string(fields[3]);
    r.seq_rows = split_numbers<long>(fields[4]);
    r.token_ids = split_numbers<int>(fields[5]);
    r.point_label = std::stoi(fields[6]);
    r.window_label = std::stoi(fields[7]);
    r.joint_label = std::stoi(fields[8]);
    if (r.key < 0 || r.key >= ds.vectors.rows())
      throw DataError(samples_path + ": record key out of range of vectors.bin");
    for (long sr : r.seq_rows)
      if (sr < -1 || sr >= ds.vectors.rows())
        throw DataError(samples_path + ": seq_row out of range of vectors.bin");
    ds.records.push_back(std::move(r));
  }
  if (ds.records.empty()) throw DataError("prepared dataset has no samples: " + samples_path);
  return ds;
}

Sample PreparedDataset::make_sample(const PreparedRecord& record) const {
  Sample s;
  s.key = record.line_no;
  s.semantic = build_semantic(record.token_ids, sem_len);
  s.sequence.vectors = Eigen::MatrixXd::Zero(seq_len, vectors.cols());
  s.sequence.mask.assign(static_cast<std::size_t>(seq_len), 0);
  for (std::size_t p = 0; p < record.seq_rows.size(); ++p) {
    const long row = record.seq_rows[p];
    if (row < 0) continue;
    s.sequence.vectors.row(static_cast<Eigen::Index>(p)) = vectors.row(row);
    s.sequence.mask[p] = 1;
  }
  s.point_label = record.point_label;
  s.window_label = record.window_label;
  s.joint_label = record.joint_label;
  return s;
}

std::vector<const PreparedRecord*> PreparedDataset::records_in(Split split) const {
  std::vector<const PreparedRecord*> out;
  for (const auto& r : records)
    if (r.split == split) out.push_back(&r);
  return out;
}

std::vector<Sample> PreparedDataset::make_samples(int split) const {
  std::vector<Sample> out;
  for (const auto& r : records)
    if (split < 0 || static_cast<int>(r.split) == split) out.push_back(make_sample(r));
  return out;
}

}  // namespace colog
