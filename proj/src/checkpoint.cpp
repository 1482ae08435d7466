#include "colog/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "colog/config.hpp"
#include "colog/errors.hpp"

namespace colog {

namespace {

constexpr char kMagic[6] = {'C', 'O', 'L', 'O', 'G', '1'};

template <typename T>
void write_raw(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T read_raw(std::istream& in, const std::string& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof value);
  if (!in) throw DataError("truncated checkpoint: " + path);
  return value;
}

}  // namespace

std::string model_config_to_text(const ModelConfig& c) {
  std::ostringstream out;
  out << "vocab_size = " << c.vocab_size << "\n"
      << "d_word = " << c.d_word << "\n"
      << "d_event = " << c.d_event << "\n"
      << "hidden = " << c.hidden << "\n"
      << "heads = " << c.heads << "\n"
      << "layers = " << c.layers << "\n"
      << "ffn_inner = " << c.ffn_inner << "\n"
      << "latent = " << c.latent << "\n"
      << "dropout = " << c.dropout << "\n"
      << "sem_len = " << c.sem_len << "\n"
      << "seq_len = " << c.seq_len << "\n"
      << "n_classes = " << c.n_classes << "\n"
      << "seed = " << c.seed << "\n"
      << "impressed = " << (c.impressed ? "true" : "false") << "\n"
      << "use_mal = " << (c.use_mal ? "true" : "false") << "\n"
      << "use_bl = " << (c.use_bl ? "true" : "false") << "\n";
  return out.str();
}

ModelConfig model_config_from_text(const std::string& text) {
  const Config cfg = Config::from_string(text, "<checkpoint>");
  ModelConfig c;
  c.vocab_size = static_cast<int>(cfg.get_int("vocab_size"));
  c.d_word = static_cast<int>(cfg.get_int("d_word"));
  c.d_event = static_cast<int>(cfg.get_int("d_event"));
  c.hidden = static_cast<int>(cfg.get_int("hidden"));
  c.heads = static_cast<int>(cfg.get_int("heads"));
  c.layers = static_cast<int>(cfg.get_int("layers"));
  c.ffn_inner = static_cast<int>(cfg.get_int("ffn_inner"));
  c.latent = static_cast<int>(cfg.get_int("latent"));
  c.dropout = cfg.get_double("dropout");
  c.sem_len = static_cast<int>(cfg.get_int("sem_len"));
  c.seq_len = static_cast<int>(cfg.get_int("seq_len"));
  c.n_classes = static_cast<int>(cfg.get_int("n_classes"));
  c.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  c.impressed = cfg.get_bool("impressed");
  c.use_mal = cfg.get_bool("use_mal");
  c.use_bl = cfg.get_bool("use_bl");
  return c;
}

std::string config_diff(const ModelConfig& have, const ModelConfig& want) {
  std::ostringstream out;
  const auto field = [&](const char* name, auto a, auto b) {
    if (a != b) out << "  " << name << ": checkpoint " << a << " vs requested " << b << "\n";
  };
  field("vocab_size", have.vocab_size, want.vocab_size);
  field("d_word", have.d_word, want.d_word);
  field("d_event", have.d_event, want.d_event);
  field("hidden", have.hidden, want.hidden);
  field("heads", have.heads, want.heads);
  field("layers", have.layers, want.layers);
  field("ffn_inner", have.ffn_inner, want.ffn_inner);
  field("latent", have.latent, want.latent);
  field("sem_len", have.sem_len, want.sem_len);
  field("seq_len", have.seq_len, want.seq_len);
  field("n_classes", have.n_classes, want.n_classes);
  field("impressed", have.impressed, want.impressed);
  field("use_mal", have.use_mal, want.use_mal);
  field("use_bl", have.use_bl, want.use_bl);
  return out.str();
}

void save_checkpoint(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof kMagic);

  const std::string config_text = model_config_to_text(model.config());
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(config_text.size()));
  out.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));

  const Parameters& params = model.params();
  write_raw<std::uint64_t>(out, params.size());
  std::uint64_t offset = 0;
  params.for_each([&](const std::string& name, const Eigen::MatrixXd& m) {
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_raw<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    write_raw<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    write_raw<std::uint64_t>(out, offset);
    offset += static_cast<std::uint64_t>(m.size()) * sizeof(float);
  });
  params.for_each([&](const std::string&, const Eigen::MatrixXd& m) {
    std::vector<float> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        row[static_cast<std::size_t>(c)] = static_cast<float>(m(r, c));
      out.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
  });
  if (!out) throw DataError("short write on checkpoint: " + path);
}

namespace {

struct TensorEntry {
  std::string name;
  std::uint64_t rows, cols, offset;
};

void read_header(std::istream& in, const std::string& path, std::string& config_text,
                 std::vector<TensorEntry>& entries) {
  char magic[6];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw DataError("not a COLOG1 checkpoint: " + path);
  const auto config_len = read_raw<std::uint32_t>(in, path);
  config_text.resize(config_len);
  in.read(config_text.data(), config_len);
  if (!in) throw DataError("truncated checkpoint config: " + path);
  const auto count = read_raw<std::uint64_t>(in, path);
  entries.resize(count);
  for (auto& e : entries) {
    const auto name_len = read_raw<std::uint32_t>(in, path);
    e.name.resize(name_len);
    in.read(e.name.data(), name_len);
    e.rows = read_raw<std::uint64_t>(in, path);
    e.cols = read_raw<std::uint64_t>(in, path);
    e.offset = read_raw<std::uint64_t>(in, path);
    if (!in) throw DataError("truncated checkpoint manifest: " + path);
  }
}

}  // namespace

ModelConfig peek_checkpoint_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::string config_text;
  std::vector<TensorEntry> entries;
  read_header(in, path, config_text, entries);
  return model_config_from_text(config_text);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::string config_text;
  std::vector<TensorEntry> entries;
  read_header(in, path, config_text, entries);
  const ModelConfig config = model_config_from_text(config_text);

  const std::streampos data_start = in.tellg();
  Parameters params;
  for (const auto& e : entries) {
    auto& m = params.add(e.name, static_cast<Eigen::Index>(e.rows),
                         static_cast<Eigen::Index>(e.cols));
    in.seekg(data_start + static_cast<std::streamoff>(e.offset));
    std::vector<float> row(e.cols);
    for (std::uint64_t r = 0; r < e.rows; ++r) {
      in.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(e.cols * sizeof(float)));
      if (!in) throw DataError("truncated checkpoint data: " + path);
      for (std::uint64_t c = 0; c < e.cols; ++c)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
  }
  return Model(config, std::move(params));
}

}  // namespace colog
