// CoLog command line: synth, parse, prepare, balance, train, eval, predict,
// export-vectors. One flat config file drives every stage; flags override
// the matching config keys. Exit codes: 0 ok, 2 config, 3 data, 4 numeric.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "colog/balance.hpp"
#include "colog/checkpoint.hpp"
#include "colog/config.hpp"
#include "colog/dataset.hpp"
#include "colog/drain.hpp"
#include "colog/errors.hpp"
#include "colog/eval.hpp"
#include "colog/synth.hpp"
#include "colog/train.hpp"

namespace fs = std::filesystem;
using namespace colog;

namespace {

const std::set<std::string> kKnownKeys = {
    "seed", "classes",
    // synth
    "synth.out", "synth.truth", "synth.lines", "synth.templates", "synth.anomaly_ratio",
    "synth.bursts", "synth.burst_len", "synth.injection_ratio", "synth.window",
    "synth.window_kind",
    // parse
    "parse.input", "parse.pattern", "parse.out", "parse.templates_out", "parse.drain_depth",
    "parse.drain_sim", "parse.drain_children", "parse.lexicon",
    // prepare
    "prepare.files", "prepare.pattern", "prepare.truth", "prepare.out", "prepare.window",
    "prepare.window_kind", "prepare.sem_len", "prepare.seq_len", "prepare.split",
    "prepare.lexicon", "prepare.vocab", "prepare.event_dim", "prepare.word_dim",
    "prepare.provider_messages", "prepare.provider_matrix",
    // balance
    "balance.prepared", "balance.samples", "balance.out",
    // train
    "train.prepared", "train.samples", "train.out", "train.lr", "train.decay",
    "train.max_decays", "train.batch", "train.max_epochs", "train.patience", "train.warmup",
    "train.word_dropout", "train.hidden", "train.heads", "train.layers", "train.ffn_inner",
    "train.latent", "train.dropout", "train.d_word", "train.impressed", "train.use_mal",
    "train.use_bl",
    // eval
    "eval.prepared", "eval.samples", "eval.checkpoint", "eval.split", "eval.out",
    "eval.per_file",
    // predict
    "predict.prepared", "predict.samples", "predict.checkpoint", "predict.split", "predict.out",
    // export-vectors
    "export.prepared", "export.samples", "export.checkpoint", "export.split", "export.out"};

const std::vector<std::string> kKnownPrefixes = {"prepare.file.", "prepare.pattern.",
                                                 "prepare.truth."};

struct CommonOpts {
  std::string config_path;
  std::optional<long> seed;
  std::optional<int> classes;
  std::optional<int> window;
  std::optional<std::string> window_kind;
  std::optional<std::string> out;

  Config load() const {
    Config cfg = config_path.empty() ? Config() : Config::from_file(config_path);
    cfg.reject_unknown_keys(kKnownKeys, kKnownPrefixes);
    return cfg;
  }
  std::uint64_t seed_of(const Config& cfg) const {
    return static_cast<std::uint64_t>(seed ? *seed : cfg.get_int("seed", 42));
  }
  int classes_of(const Config& cfg) const {
    const int n = classes ? *classes : static_cast<int>(cfg.get_int("classes", 2));
    if (n != 2 && n != 4) throw ConfigError("--classes must be 2 or 4");
    return n;
  }
  std::string out_of(const Config& cfg, const std::string& key, const std::string& fallback) const {
    if (out) return *out;
    return cfg.get_string(key, fallback);
  }
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "pipeline config file");
  long* seed_slot = nullptr;
  // CLI11 stores into optionals directly.
  cmd->add_option("--seed", opts.seed, "override the config seed");
  cmd->add_option("--classes", opts.classes, "2 (point) or 4 (point+collective)");
  cmd->add_option("--window", opts.window, "window size W");
  cmd->add_option("--window-kind", opts.window_kind, "background|context");
  cmd->add_option("--out", opts.out, "override the stage output path");
  (void)seed_slot;
}

std::set<std::string> lexicon_from(const Config& cfg, const std::string& key) {
  const std::string path = cfg.get_string(key, "");
  return path.empty() ? default_negative_lexicon() : load_lexicon(path);
}

Batch batch_of(const std::vector<Sample>& samples, std::size_t start, std::size_t end) {
  Batch b;
  for (std::size_t i = start; i < end; ++i) {
    const Sample& s = samples[i];
    b.token_ids.push_back(s.semantic.token_ids);
    b.sem_mask.push_back(s.semantic.mask);
    b.sequence.push_back(s.sequence.vectors);
    b.seq_mask.push_back(s.sequence.mask);
    b.point_labels.push_back(s.point_label);
    b.joint_labels.push_back(s.joint_label);
  }
  return b;
}

// argmax class and anomaly probability (P[0] in 2-class, P[0]+P[1] in 4-class).
struct Verdicts {
  std::vector<int> predicted;
  std::vector<double> anomaly_prob;
  std::vector<int> truth;
};

Verdicts predict_samples(const Model& model, const std::vector<Sample>& samples,
                         int batch_size = 32) {
  Verdicts v;
  const int n_classes = model.config().n_classes;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    const Batch batch = batch_of(samples, start, end);
    const BatchForward fwd = model.infer(batch);
    const auto& labels = Model::batch_labels(batch, n_classes);
    for (Eigen::Index b = 0; b < fwd.probs.rows(); ++b) {
      Eigen::Index argmax = 0;
      fwd.logits.row(b).maxCoeff(&argmax);
      v.predicted.push_back(static_cast<int>(argmax));
      v.anomaly_prob.push_back(n_classes == 2 ? fwd.probs(b, 0)
                                              : fwd.probs(b, 0) + fwd.probs(b, 1));
      v.truth.push_back(labels[static_cast<std::size_t>(b)]);
    }
  }
  return v;
}

Model load_checkpoint_checked(const std::string& path, const PreparedDataset& ds, int classes) {
  const ModelConfig have = peek_checkpoint_config(path);
  ModelConfig want = have;
  want.vocab_size = ds.vocab.size();
  want.sem_len = ds.sem_len;
  want.seq_len = ds.seq_len;
  want.d_event = ds.event_dim;
  want.n_classes = classes;
  const std::string diff = config_diff(have, want);
  if (!diff.empty())
    throw ConfigError("checkpoint " + path + " does not match the prepared dataset/flags:\n" +
                      diff);
  return load_checkpoint(path);
}

// ---- subcommands ----

int cmd_synth(const CommonOpts& opts) {
  const Config cfg = opts.load();
  SynthConfig sc;
  sc.lines = cfg.get_int("synth.lines", 1000);
  sc.templates = static_cast<int>(cfg.get_int("synth.templates", 5));
  sc.anomaly_ratio = cfg.get_double("synth.anomaly_ratio", 0.1);
  sc.bursts = static_cast<int>(cfg.get_int("synth.bursts", 0));
  sc.burst_len = static_cast<int>(cfg.get_int("synth.burst_len", 0));
  sc.injection_ratio = cfg.get_double("synth.injection_ratio", 0.0);
  sc.window = opts.window ? *opts.window : static_cast<int>(cfg.get_int("synth.window", 1));
  sc.kind = window_kind_from_string(
      opts.window_kind ? *opts.window_kind : cfg.get_string("synth.window_kind", "context"));
  sc.seed = opts.seed_of(cfg);
  const std::string log_path = opts.out_of(cfg, "synth.out", "synthetic.log");
  const std::string truth_path = cfg.get_string("synth.truth", log_path + ".truth.tsv");
  if (const auto dir = fs::path(log_path).parent_path(); !dir.empty())
    fs::create_directories(dir);
  if (const auto dir = fs::path(truth_path).parent_path(); !dir.empty())
    fs::create_directories(dir);
  const SynthResult r = write_synthetic_log(sc, log_path, truth_path);
  std::cout << "wrote " << sc.lines << " lines to " << log_path << " (" << r.anomalies
            << " anomalies, " << r.burst_lines << " in bursts, " << r.injected
            << " injected, " << r.templates_used << " benign templates)\n"
            << "truth: " << truth_path << "\n";
  return 0;
}

int cmd_parse(const CommonOpts& opts) {
  const Config cfg = opts.load();
  const std::string input = cfg.get_string("parse.input");
  const std::string pattern_name = cfg.get_string("parse.pattern", "syslog");
  DrainConfig dc;
  dc.depth = static_cast<int>(cfg.get_int("parse.drain_depth", 4));
  dc.sim_threshold = cfg.get_double("parse.drain_sim", 0.4);
  dc.max_children = static_cast<int>(cfg.get_int("parse.drain_children", 100));
  const std::string out_path = opts.out_of(cfg, "parse.out", input + ".records.tsv");
  const std::string templates_path =
      cfg.get_string("parse.templates_out", input + ".templates.tsv");
  const auto lexicon = lexicon_from(cfg, "parse.lexicon");

  const HeaderPattern pattern = HeaderPattern::is_builtin(pattern_name)
                                    ? HeaderPattern::named(pattern_name)
                                    : HeaderPattern(pattern_name);
  DrainTree tree(dc);
  const auto parsed = parse_file(input, pattern, tree);

  if (const auto dir = fs::path(out_path).parent_path(); !dir.empty())
    fs::create_directories(dir);
  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write " + out_path);
  for (const auto& [rec, template_id] : parsed) {
    const int label = rec.header_only ? 1 : label_with_keywords(rec.message, lexicon);
    out << rec.line_no << '\t' << template_id << '\t' << rec.message << '\t' << label << '\n';
  }
  std::ofstream tout(templates_path);
  if (!tout) throw DataError("cannot write " + templates_path);
  for (const auto& tpl : tree.templates())
    tout << tpl.template_id << '\t' << tpl.count << '\t' << tpl.text() << '\n';
  std::cout << "parsed " << parsed.size() << " records into " << tree.templates().size()
            << " templates\nrecords: " << out_path << "\ntemplates: " << templates_path << "\n";
  return 0;
}

int cmd_prepare(const CommonOpts& opts) {
  const Config cfg = opts.load();
  PrepareSpec spec;
  // files: either a comma list or file.N keys
  const std::string files = cfg.get_string("prepare.files", "");
  const std::string default_pattern = cfg.get_string("prepare.pattern", "syslog");
  if (!files.empty()) {
    std::istringstream in(files);
    std::string path;
    while (std::getline(in, path, ',')) spec.files.push_back({path, default_pattern, ""});
    if (!spec.files.empty()) spec.files[0].truth = cfg.get_string("prepare.truth", "");
  }
  for (int i = 0;; ++i) {
    const std::string key = "prepare.file." + std::to_string(i);
    if (!cfg.has(key)) break;
    PrepareSpec::FileSpec fs;
    fs.path = cfg.get_string(key);
    fs.pattern = cfg.get_string("prepare.pattern." + std::to_string(i), default_pattern);
    fs.truth = cfg.get_string("prepare.truth." + std::to_string(i), "");
    spec.files.push_back(std::move(fs));
  }
  spec.window = opts.window ? *opts.window : static_cast<int>(cfg.get_int("prepare.window", 1));
  spec.kind = window_kind_from_string(
      opts.window_kind ? *opts.window_kind : cfg.get_string("prepare.window_kind", "context"));
  spec.sem_len = static_cast<int>(cfg.get_int("prepare.sem_len", 60));
  spec.seq_len = static_cast<int>(cfg.get_int("prepare.seq_len", 60));
  spec.event_dim = static_cast<int>(cfg.get_int("prepare.event_dim", 384));
  spec.provider_word_dim = static_cast<int>(cfg.get_int("prepare.word_dim", 300));
  if (cfg.has("prepare.split")) spec.split_ratios = cfg.get_doubles("prepare.split");
  spec.seed = opts.seed_of(cfg);
  spec.lexicon = lexicon_from(cfg, "prepare.lexicon");
  spec.vocab_path = cfg.get_string("prepare.vocab", "");
  spec.provider_messages = cfg.get_string("prepare.provider_messages", "");
  spec.provider_matrix = cfg.get_string("prepare.provider_matrix", "");

  const std::string out_dir = opts.out_of(cfg, "prepare.out", "prepared");
  const PreparedDataset ds = prepare_dataset(spec);
  ds.save(out_dir);

  long n_train = 0, n_val = 0, n_test = 0, n_anomaly = 0;
  for (const auto& r : ds.records) {
    (r.split == Split::kTrain ? n_train : r.split == Split::kVal ? n_val : n_test)++;
    if (r.point_label == 0) ++n_anomaly;
  }
  std::cout << "prepared " << ds.records.size() << " records from " << ds.file_names.size()
            << " file(s) into " << out_dir << "\n"
            << "split: " << n_train << " train / " << n_val << " val / " << n_test << " test; "
            << n_anomaly << " anomalous points; vocab " << ds.vocab.size() << " tokens\n";
  return 0;
}

int cmd_balance(const CommonOpts& opts) {
  const Config cfg = opts.load();
  const std::string dir = cfg.get_string("balance.prepared");
  const std::string samples = cfg.get_string("balance.samples", "");
  const std::string out_path = opts.out_of(cfg, "balance.out", dir + "/samples.balanced.tsv");
  const PreparedDataset ds = PreparedDataset::load(dir, samples);

  const auto train_records = ds.records_in(Split::kTrain);
  if (train_records.empty()) throw DataError("balance: no training records");
  Eigen::MatrixXd points(static_cast<Eigen::Index>(train_records.size()), ds.vectors.cols());
  std::vector<int> labels(train_records.size());
  for (std::size_t i = 0; i < train_records.size(); ++i) {
    points.row(static_cast<Eigen::Index>(i)) = ds.vectors.row(train_records[i]->key);
    labels[i] = train_records[i]->point_label;
  }
  const UndersampleResult result = undersample(points, labels);

  std::set<long> removed_keys;
  long removed0 = 0, removed1 = 0;
  for (std::size_t idx : result.removed) {
    removed_keys.insert(train_records[idx]->key);
    (labels[idx] == 0 ? removed0 : removed1)++;
  }
  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write " + out_path);
  const auto join = [](const auto& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(xs[i]);
    }
    return s;
  };
  for (const auto& r : ds.records) {
    if (removed_keys.count(r.key)) continue;
    out << r.key << '\t' << r.file_id << '\t' << r.line_no << '\t' << to_string(r.split) << '\t'
        << join(r.seq_rows) << '\t' << join(r.token_ids) << '\t' << r.point_label << '\t'
        << r.window_label << '\t' << r.joint_label << '\n';
  }
  std::cout << "tomek balancing removed " << result.removed.size() << " training samples in "
            << result.rounds << " round(s): " << removed0 << " of class 0, " << removed1
            << " of class 1\nbalanced samples: " << out_path << "\n";
  return 0;
}

int cmd_train(const CommonOpts& opts) {
  const Config cfg = opts.load();
  const std::string dir = cfg.get_string("train.prepared");
  std::string samples = cfg.get_string("train.samples", "");
  if (samples.empty() && fs::exists(dir + "/samples.balanced.tsv"))
    samples = dir + "/samples.balanced.tsv";  // pick up the balance stage output
  const std::string out_dir = opts.out_of(cfg, "train.out", "model");
  const PreparedDataset ds = PreparedDataset::load(dir, samples);

  ModelConfig mc;
  mc.vocab_size = ds.vocab.size();
  mc.sem_len = ds.sem_len;
  mc.seq_len = ds.seq_len;
  mc.d_event = ds.event_dim;
  mc.n_classes = opts.classes_of(cfg);
  mc.d_word = static_cast<int>(cfg.get_int("train.d_word", 300));
  mc.hidden = static_cast<int>(cfg.get_int("train.hidden", 256));
  mc.heads = static_cast<int>(cfg.get_int("train.heads", 4));
  mc.layers = static_cast<int>(cfg.get_int("train.layers", 2));
  mc.ffn_inner = static_cast<int>(cfg.get_int("train.ffn_inner", 1024));
  mc.latent = static_cast<int>(cfg.get_int("train.latent", 2048));
  mc.dropout = cfg.get_double("train.dropout", 0.1);
  mc.impressed = cfg.get_bool("train.impressed", true);
  mc.use_mal = cfg.get_bool("train.use_mal", true);
  mc.use_bl = cfg.get_bool("train.use_bl", true);
  mc.seed = opts.seed_of(cfg);

  TrainConfig tc;
  tc.lr = cfg.get_double("train.lr", 5e-5);
  tc.decay_factor = cfg.get_double("train.decay", 0.5);
  tc.max_decays = static_cast<int>(cfg.get_int("train.max_decays", 3));
  tc.batch = static_cast<int>(cfg.get_int("train.batch", 32));
  tc.max_epochs = static_cast<int>(cfg.get_int("train.max_epochs", 20));
  tc.patience = static_cast<int>(cfg.get_int("train.patience", 5));
  tc.warmup_epochs = static_cast<int>(cfg.get_int("train.warmup", 5));
  tc.word_dropout = cfg.get_double("train.word_dropout", 0.0);
  tc.seed = mc.seed;

  const auto train_samples = ds.make_samples(static_cast<int>(Split::kTrain));
  const auto val_samples = ds.make_samples(static_cast<int>(Split::kVal));
  Model model(mc);
  const FitResult result = fit(model, train_samples, val_samples, tc);

  fs::create_directories(out_dir);
  save_checkpoint(out_dir + "/best.ckpt", model);
  write_history_csv(out_dir + "/history.csv", result.history);
  std::cout << "trained " << result.history.size() << " epoch(s) on " << train_samples.size()
            << " samples; best val macro-F1 " << result.best_val_f1 << " at epoch "
            << result.best_epoch << (result.early_stopped ? " (early stop)" : "") << "\n"
            << "checkpoint: " << out_dir << "/best.ckpt\nhistory: " << out_dir
            << "/history.csv\n";
  return 0;
}

int cmd_eval(const CommonOpts& opts) {
  const Config cfg = opts.load();
  const std::string dir = cfg.get_string("eval.prepared");
  const std::string samples_file = cfg.get_string("eval.samples", "");
  const std::string ckpt = cfg.get_string("eval.checkpoint");
  const std::string split_name = cfg.get_string("eval.split", "test");
  const std::string out_dir = opts.out_of(cfg, "eval.out", "eval");
  const std::string per_file = cfg.get_string("eval.per_file", "uniform");
  if (per_file != "uniform" && per_file != "weighted")
    throw ConfigError("eval.per_file must be uniform or weighted");

  const PreparedDataset ds = PreparedDataset::load(dir, samples_file);
  const int classes = opts.classes_of(cfg);
  const Model model = load_checkpoint_checked(ckpt, ds, classes);
  const Split split = split_from_string(split_name);

  const auto records = ds.records_in(split);
  if (records.empty()) throw DataError("eval: split `" + split_name + "` is empty");
  std::vector<Sample> samples;
  samples.reserve(records.size());
  std::vector<int> file_ids;
  for (const auto* r : records) {
    samples.push_back(ds.make_sample(*r));
    file_ids.push_back(r->file_id);
  }
  const Verdicts v = predict_samples(model, samples);

  fs::create_directories(out_dir);
  const MetricsReport pooled = metrics(confusion_matrix(v.truth, v.predicted, classes));
  RocPrResult curves;
  if (classes == 2) {
    curves = roc_pr_points(v.anomaly_prob, v.truth);
    write_curve_csv(out_dir + "/roc.csv", curves.roc);
    write_curve_csv(out_dir + "/pr.csv", curves.pr);
  }
  write_eval_report_json(out_dir + "/report.json", pooled, classes == 2 ? &curves : nullptr);

  // Per-file metrics averaged across files (uniform or size-weighted).
  const int n_files = static_cast<int>(ds.file_names.size());
  if (n_files > 1) {
    nlohmann::json per;
    double avg_p = 0, avg_r = 0, avg_f1 = 0, avg_acc = 0, weight_sum = 0;
    for (int f = 0; f < n_files; ++f) {
      std::vector<int> t, p;
      for (std::size_t i = 0; i < samples.size(); ++i)
        if (file_ids[i] == f) {
          t.push_back(v.truth[i]);
          p.push_back(v.predicted[i]);
        }
      if (t.empty()) continue;
      const MetricsReport mr = metrics(confusion_matrix(t, p, classes));
      const double w = per_file == "weighted" ? static_cast<double>(t.size()) : 1.0;
      avg_p += w * mr.macro_precision;
      avg_r += w * mr.macro_recall;
      avg_f1 += w * mr.macro_f1;
      avg_acc += w * mr.accuracy;
      weight_sum += w;
      per.push_back({{"file", ds.file_names[static_cast<std::size_t>(f)]},
                     {"samples", t.size()},
                     {"macro_f1", mr.macro_f1},
                     {"accuracy", mr.accuracy}});
    }
    nlohmann::json j;
    std::ifstream rin(out_dir + "/report.json");
    rin >> j;
    rin.close();
    j["per_file"] = per;
    j["per_file_average"] = {{"weighting", per_file},
                             {"precision", avg_p / weight_sum},
                             {"recall", avg_r / weight_sum},
                             {"f1", avg_f1 / weight_sum},
                             {"accuracy", avg_acc / weight_sum}};
    std::ofstream rout(out_dir + "/report.json");
    rout << j.dump(2) << '\n';
  }

  std::cout << "eval on " << samples.size() << " " << split_name << " samples: macro F1 "
            << pooled.macro_f1 << ", accuracy " << pooled.accuracy;
  if (curves.roc_auc) std::cout << ", ROC-AUC " << *curves.roc_auc;
  std::cout << "\nreport: " << out_dir << "/report.json\n";
  return 0;
}

int cmd_predict(const CommonOpts& opts) {
  const Config cfg = opts.load();
  const std::string dir = cfg.get_string("predict.prepared");
  const std::string samples_file = cfg.get_string("predict.samples", "");
  const std::string ckpt = cfg.get_string("predict.checkpoint");
  const std::string split_name = cfg.get_string("predict.split", "all");
  const std::string out_path = opts.out_of(cfg, "predict.out", "verdicts.tsv");

  const PreparedDataset ds = PreparedDataset::load(dir, samples_file);
  const int classes = opts.classes_of(cfg);
  const Model model = load_checkpoint_checked(ckpt, ds, classes);

  std::vector<const PreparedRecord*> records;
  if (split_name == "all") {
    for (const auto& r : ds.records) records.push_back(&r);
  } else {
    records = ds.records_in(split_from_string(split_name));
  }
  if (records.empty()) throw DataError("predict: no records in split `" + split_name + "`");
  std::vector<Sample> samples;
  samples.reserve(records.size());
  for (const auto* r : records) samples.push_back(ds.make_sample(*r));
  const Verdicts v = predict_samples(model, samples);

  if (const auto parent = fs::path(out_path).parent_path(); !parent.empty())
    fs::create_directories(parent);
  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write " + out_path);
  out.precision(6);
  int current_file = -1;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (ds.file_names.size() > 1 && records[i]->file_id != current_file) {
      current_file = records[i]->file_id;
      out << "# file: " << ds.file_names[static_cast<std::size_t>(current_file)] << '\n';
    }
    out << records[i]->line_no << '\t' << v.predicted[i] << '\t' << v.anomaly_prob[i] << '\n';
  }
  std::cout << "wrote " << records.size() << " verdicts to " << out_path << "\n";
  return 0;
}

int cmd_export(const CommonOpts& opts) {
  const Config cfg = opts.load();
  const std::string dir = cfg.get_string("export.prepared");
  const std::string samples_file = cfg.get_string("export.samples", "");
  const std::string ckpt = cfg.get_string("export.checkpoint");
  const std::string split_name = cfg.get_string("export.split", "test");
  const std::string out_dir = opts.out_of(cfg, "export.out", "export");

  const PreparedDataset ds = PreparedDataset::load(dir, samples_file);
  const int classes = opts.classes_of(cfg);
  const Model model = load_checkpoint_checked(ckpt, ds, classes);
  const auto samples = split_name == "all"
                           ? ds.make_samples(-1)
                           : ds.make_samples(static_cast<int>(split_from_string(split_name)));
  if (samples.empty()) throw DataError("export-vectors: split `" + split_name + "` is empty");

  const ExportResult r = export_vectors(model, samples, out_dir);
  std::cout << "exported " << r.latents.rows() << " latent vectors (" << r.latents.cols()
            << "-d) to " << out_dir << "/latents.bin\n";
  if (r.pca)
    std::cout << "pca projection: " << out_dir << "/pca.tsv (explained ratios "
              << r.pca->explained_ratio[0] << ", " << r.pca->explained_ratio[1] << ")\n";
  else
    std::cout << "pca skipped (fewer than 2 samples)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CoLog: point and collective log anomaly detection with collaborative transformers"};
  app.require_subcommand(1);

  CommonOpts synth_opts, parse_opts, prepare_opts, balance_opts, train_opts, eval_opts,
      predict_opts, export_opts;
  add_common(app.add_subcommand("synth", "generate a seeded synthetic log + ground truth"),
             synth_opts);
  add_common(app.add_subcommand("parse", "split headers and mine message templates"),
             parse_opts);
  add_common(app.add_subcommand("prepare", "build the two-modality dataset"), prepare_opts);
  add_common(app.add_subcommand("balance", "tomek-link undersampling of the training split"),
             balance_opts);
  add_common(app.add_subcommand("train", "train the collaborative transformer"), train_opts);
  add_common(app.add_subcommand("eval", "metrics, curves and report on a split"), eval_opts);
  add_common(app.add_subcommand("predict", "per-line verdicts"), predict_opts);
  add_common(app.add_subcommand("export-vectors", "latent vectors + 2-d pca projection"),
             export_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("synth")) return cmd_synth(synth_opts);
    if (app.got_subcommand("parse")) return cmd_parse(parse_opts);
    if (app.got_subcommand("prepare")) return cmd_prepare(prepare_opts);
    if (app.got_subcommand("balance")) return cmd_balance(balance_opts);
    if (app.got_subcommand("train")) return cmd_train(train_opts);
    if (app.got_subcommand("eval")) return cmd_eval(eval_opts);
    if (app.got_subcommand("predict")) return cmd_predict(predict_opts);
    if (app.got_subcommand("export-vectors")) return cmd_export(export_opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
