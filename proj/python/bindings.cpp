// Python bindings for the main operations: parsing, modality construction,
// balancing, the collaborative model, training, metrics and the synthesizer.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "colog/balance.hpp"
#include "colog/checkpoint.hpp"
#include "colog/dataset.hpp"
#include "colog/drain.hpp"
#include "colog/embedding.hpp"
#include "colog/errors.hpp"
#include "colog/eval.hpp"
#include "colog/log_ingest.hpp"
#include "colog/modality.hpp"
#include "colog/model.hpp"
#include "colog/synth.hpp"
#include "colog/train.hpp"

namespace py = pybind11;
using namespace colog;

namespace {

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

// argmax class, anomaly probability and logits for a list of samples.
py::tuple predict(const Model& model, const std::vector<Sample>& samples, int batch_size) {
  const int n_classes = model.config().n_classes;
  std::vector<int> predicted;
  std::vector<double> anomaly_prob;
  Eigen::MatrixXd logits(static_cast<Eigen::Index>(samples.size()), n_classes);
  Eigen::Index row = 0;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    const BatchForward fwd = model.infer(batch_of(samples, start, end));
    for (Eigen::Index b = 0; b < fwd.logits.rows(); ++b, ++row) {
      logits.row(row) = fwd.logits.row(b);
      Eigen::Index argmax = 0;
      fwd.logits.row(b).maxCoeff(&argmax);
      predicted.push_back(static_cast<int>(argmax));
      anomaly_prob.push_back(n_classes == 2 ? fwd.probs(b, 0)
                                            : fwd.probs(b, 0) + fwd.probs(b, 1));
    }
  }
  return py::make_tuple(predicted, anomaly_prob, logits);
}

}  // namespace

PYBIND11_MODULE(_colog, m) {
  m.doc() = "Collaborative-transformer log anomaly detection (point and collective)";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  // ---- text, vocabulary, labels ----
  m.def("tokenize", &tokenize, py::arg("message"));
  m.def("default_negative_lexicon", &default_negative_lexicon);
  m.def("label_with_keywords", &label_with_keywords, py::arg("message"), py::arg("lexicon"));
  m.def("joint_label_of", &joint_label_of, py::arg("point_label"), py::arg("window_label"));
  m.def(
      "derive_labels",
      [](const std::vector<int>& point_labels, long index, int window, const std::string& kind) {
        const LabelPair lp =
            derive_labels(point_labels, index, window, window_kind_from_string(kind));
        return py::make_tuple(lp.window_label, lp.joint_label);
      },
      py::arg("point_labels"), py::arg("index"), py::arg("window"), py::arg("kind"));
  m.def("window_rows", &window_rows, py::arg("index"), py::arg("record_count"),
        py::arg("window"), py::arg("kind"));

  py::class_<Vocabulary>(m, "Vocabulary")
      .def_static("build", &Vocabulary::build, py::arg("train_messages"))
      .def_static("load", &Vocabulary::load, py::arg("path"))
      .def("save", &Vocabulary::save, py::arg("path"))
      .def("lookup", &Vocabulary::lookup, py::arg("token"))
      .def("encode", &Vocabulary::encode, py::arg("message"))
      .def("__len__", &Vocabulary::size)
      .def_readonly_static("PAD", &Vocabulary::kPad)
      .def_readonly_static("UNK", &Vocabulary::kUnk);

  py::enum_<WindowKind>(m, "WindowKind")
      .value("background", WindowKind::kBackground)
      .value("context", WindowKind::kContext);

  // ---- log ingestion and drain ----
  py::class_<LogRecord>(m, "LogRecord")
      .def_readonly("line_no", &LogRecord::line_no)
      .def_readonly("timestamp", &LogRecord::timestamp)
      .def_readonly("host", &LogRecord::host)
      .def_readonly("service", &LogRecord::service)
      .def_readonly("message", &LogRecord::message)
      .def_readonly("label", &LogRecord::label)
      .def_readonly("header_only", &LogRecord::header_only);

  py::class_<HeaderPattern>(m, "HeaderPattern")
      .def(py::init<const std::string&>(), py::arg("expression"))
      .def_static("named", &HeaderPattern::named, py::arg("name"))
      .def("split", &HeaderPattern::split, py::arg("raw_line"), py::arg("line_no"))
      .def_property_readonly("expression", &HeaderPattern::expression);

  py::class_<DrainConfig>(m, "DrainConfig")
      .def(py::init([](int depth, double sim_threshold, int max_children) {
             return DrainConfig{depth, sim_threshold, max_children};
           }),
           py::arg("depth") = 4, py::arg("sim_threshold") = 0.4, py::arg("max_children") = 100)
      .def_readwrite("depth", &DrainConfig::depth)
      .def_readwrite("sim_threshold", &DrainConfig::sim_threshold)
      .def_readwrite("max_children", &DrainConfig::max_children);

  py::class_<Template>(m, "Template")
      .def_readonly("template_id", &Template::template_id)
      .def_readonly("count", &Template::count)
      .def("text", &Template::text)
      .def("__repr__", [](const Template& t) {
        return "<Template " + std::to_string(t.template_id) + " '" + t.text() + "' x" +
               std::to_string(t.count) + ">";
      });

  py::class_<DrainTree>(m, "DrainTree")
      .def(py::init<DrainConfig>(), py::arg("config") = DrainConfig{})
      .def("match", &DrainTree::match, py::arg("tokens"))
      .def("templates", &DrainTree::templates, py::return_value_policy::copy)
      .def_static("message_tokens", &DrainTree::message_tokens, py::arg("message"));

  m.def("split_file", &split_file, py::arg("path"), py::arg("pattern"));
  m.def(
      "parse_file",
      [](const std::string& path, const HeaderPattern& pattern, DrainTree& tree) {
        return parse_file(path, pattern, tree);
      },
      py::arg("path"), py::arg("pattern"), py::arg("tree"));

  // ---- embedding providers ----
  py::class_<EmbeddingProvider, std::shared_ptr<EmbeddingProvider>>(m, "EmbeddingProvider")
      .def("embed", &EmbeddingProvider::embed, py::arg("message"))
      .def_property_readonly("dim", &EmbeddingProvider::dim);
  py::class_<HashedProjectionProvider, EmbeddingProvider,
             std::shared_ptr<HashedProjectionProvider>>(m, "HashedProjectionProvider")
      .def(py::init<const Vocabulary&, std::uint64_t, int, int>(), py::arg("vocab"),
           py::arg("seed"), py::arg("dim") = 384, py::arg("word_dim") = 300,
           py::keep_alive<1, 2>());

  // ---- balancing ----
  py::class_<UndersampleResult>(m, "UndersampleResult")
      .def_readonly("kept", &UndersampleResult::kept)
      .def_readonly("removed", &UndersampleResult::removed)
      .def_readonly("rounds", &UndersampleResult::rounds);
  m.def("find_tomek_links", &find_tomek_links, py::arg("points"), py::arg("labels"));
  m.def("undersample", &undersample, py::arg("points"), py::arg("labels"));

  // ---- metrics and curves ----
  py::class_<ClassMetrics>(m, "ClassMetrics")
      .def_readonly("support", &ClassMetrics::support)
      .def_readonly("precision", &ClassMetrics::precision)
      .def_readonly("recall", &ClassMetrics::recall)
      .def_readonly("f1", &ClassMetrics::f1);
  py::class_<MetricsReport>(m, "MetricsReport")
      .def_readonly("confusion", &MetricsReport::confusion)
      .def_readonly("per_class", &MetricsReport::per_class)
      .def_readonly("macro_precision", &MetricsReport::macro_precision)
      .def_readonly("macro_recall", &MetricsReport::macro_recall)
      .def_readonly("macro_f1", &MetricsReport::macro_f1)
      .def_readonly("accuracy", &MetricsReport::accuracy);
  m.def("confusion_matrix", &confusion_matrix, py::arg("truth"), py::arg("predicted"),
        py::arg("n_classes"));
  m.def("metrics", &metrics, py::arg("confusion"));

  py::class_<CurvePoint>(m, "CurvePoint")
      .def_readonly("threshold", &CurvePoint::threshold)
      .def_readonly("x", &CurvePoint::x)
      .def_readonly("y", &CurvePoint::y);
  py::class_<RocPrResult>(m, "RocPrResult")
      .def_readonly("roc", &RocPrResult::roc)
      .def_readonly("pr", &RocPrResult::pr)
      .def_readonly("roc_auc", &RocPrResult::roc_auc)
      .def_readonly("pr_auc", &RocPrResult::pr_auc);
  m.def("roc_pr_points", &roc_pr_points, py::arg("scores"), py::arg("labels"));

  py::class_<PcaResult>(m, "PcaResult")
      .def_readonly("components", &PcaResult::components)
      .def_readonly("explained_variance", &PcaResult::explained_variance)
      .def_readonly("explained_ratio", &PcaResult::explained_ratio)
      .def_readonly("projected", &PcaResult::projected);
  m.def("pca_top2", &pca_top2, py::arg("data"), py::arg("tol") = 1e-9,
        py::arg("max_iterations") = 100000);

  // ---- model, training, checkpoints ----
  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("vocab_size", &ModelConfig::vocab_size)
      .def_readwrite("d_word", &ModelConfig::d_word)
      .def_readwrite("d_event", &ModelConfig::d_event)
      .def_readwrite("hidden", &ModelConfig::hidden)
      .def_readwrite("heads", &ModelConfig::heads)
      .def_readwrite("layers", &ModelConfig::layers)
      .def_readwrite("ffn_inner", &ModelConfig::ffn_inner)
      .def_readwrite("latent", &ModelConfig::latent)
      .def_readwrite("dropout", &ModelConfig::dropout)
      .def_readwrite("sem_len", &ModelConfig::sem_len)
      .def_readwrite("seq_len", &ModelConfig::seq_len)
      .def_readwrite("n_classes", &ModelConfig::n_classes)
      .def_readwrite("seed", &ModelConfig::seed)
      .def_readwrite("impressed", &ModelConfig::impressed)
      .def_readwrite("use_mal", &ModelConfig::use_mal)
      .def_readwrite("use_bl", &ModelConfig::use_bl);

  py::class_<Sample>(m, "Sample")
      .def_readonly("key", &Sample::key)
      .def_readonly("point_label", &Sample::point_label)
      .def_readonly("window_label", &Sample::window_label)
      .def_readonly("joint_label", &Sample::joint_label);

  py::class_<Model>(m, "Model")
      .def(py::init<const ModelConfig&>(), py::arg("config"))
      .def_property_readonly("config", &Model::config)
      .def("classify", &Model::classify, py::arg("o_sem"), py::arg("o_seq"))
      .def("tensor",
           [](const Model& model, const std::string& name) { return model.params().at(name); },
           py::arg("name"))
      .def_property_readonly("tensor_names",
                             [](const Model& model) { return model.params().names(); });

  m.def("predict", &predict, py::arg("model"), py::arg("samples"), py::arg("batch_size") = 32);
  m.def("macro_f1_on", &macro_f1_on, py::arg("model"), py::arg("samples"),
        py::arg("batch_size") = 32);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("decay_factor", &TrainConfig::decay_factor)
      .def_readwrite("max_decays", &TrainConfig::max_decays)
      .def_readwrite("batch", &TrainConfig::batch)
      .def_readwrite("max_epochs", &TrainConfig::max_epochs)
      .def_readwrite("patience", &TrainConfig::patience)
      .def_readwrite("warmup_epochs", &TrainConfig::warmup_epochs)
      .def_readwrite("word_dropout", &TrainConfig::word_dropout)
      .def_readwrite("seed", &TrainConfig::seed);
  m.def("lr_at", &lr_at, py::arg("epoch"), py::arg("config"), py::arg("plateau_count"));

  py::class_<EpochRecord>(m, "EpochRecord")
      .def_readonly("epoch", &EpochRecord::epoch)
      .def_readonly("lr", &EpochRecord::lr)
      .def_readonly("train_loss", &EpochRecord::train_loss)
      .def_readonly("val_f1", &EpochRecord::val_f1);
  py::class_<FitResult>(m, "FitResult")
      .def_readonly("history", &FitResult::history)
      .def_readonly("best_val_f1", &FitResult::best_val_f1)
      .def_readonly("best_epoch", &FitResult::best_epoch)
      .def_readonly("early_stopped", &FitResult::early_stopped);
  m.def("fit", &fit, py::arg("model"), py::arg("train_samples"), py::arg("val_samples"),
        py::arg("config"));

  m.def("save_checkpoint", &save_checkpoint, py::arg("path"), py::arg("model"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  // ---- dataset pipeline ----
  py::class_<PrepareSpec::FileSpec>(m, "FileSpec")
      .def(py::init([](const std::string& path, const std::string& pattern,
                       const std::string& truth) {
             return PrepareSpec::FileSpec{path, pattern, truth};
           }),
           py::arg("path"), py::arg("pattern") = "syslog", py::arg("truth") = "");
  py::class_<PrepareSpec>(m, "PrepareSpec")
      .def(py::init<>())
      .def_readwrite("files", &PrepareSpec::files)
      .def_readwrite("window", &PrepareSpec::window)
      .def_readwrite("kind", &PrepareSpec::kind)
      .def_readwrite("sem_len", &PrepareSpec::sem_len)
      .def_readwrite("seq_len", &PrepareSpec::seq_len)
      .def_readwrite("event_dim", &PrepareSpec::event_dim)
      .def_readwrite("provider_word_dim", &PrepareSpec::provider_word_dim)
      .def_readwrite("split_ratios", &PrepareSpec::split_ratios)
      .def_readwrite("seed", &PrepareSpec::seed)
      .def_readwrite("lexicon", &PrepareSpec::lexicon)
      .def_readwrite("vocab_path", &PrepareSpec::vocab_path);

  py::class_<PreparedDataset>(m, "PreparedDataset")
      .def_static("load", &PreparedDataset::load, py::arg("dir"), py::arg("samples_file") = "")
      .def("save", &PreparedDataset::save, py::arg("dir"))
      .def("make_samples", &PreparedDataset::make_samples, py::arg("split"))
      .def_readonly("window", &PreparedDataset::window)
      .def_readonly("sem_len", &PreparedDataset::sem_len)
      .def_readonly("seq_len", &PreparedDataset::seq_len)
      .def_readonly("event_dim", &PreparedDataset::event_dim)
      .def_readonly("vectors", &PreparedDataset::vectors)
      .def_readonly("vocab", &PreparedDataset::vocab)
      .def("__len__", [](const PreparedDataset& ds) { return ds.records.size(); });
  m.def("prepare_dataset", &prepare_dataset, py::arg("spec"));

  // ---- synthesizer ----
  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("lines", &SynthConfig::lines)
      .def_readwrite("templates", &SynthConfig::templates)
      .def_readwrite("anomaly_ratio", &SynthConfig::anomaly_ratio)
      .def_readwrite("bursts", &SynthConfig::bursts)
      .def_readwrite("burst_len", &SynthConfig::burst_len)
      .def_readwrite("injection_ratio", &SynthConfig::injection_ratio)
      .def_readwrite("window", &SynthConfig::window)
      .def_readwrite("kind", &SynthConfig::kind)
      .def_readwrite("seed", &SynthConfig::seed);
  py::class_<SynthResult>(m, "SynthResult")
      .def_readonly("anomalies", &SynthResult::anomalies)
      .def_readonly("burst_lines", &SynthResult::burst_lines)
      .def_readonly("injected", &SynthResult::injected)
      .def_readonly("templates_used", &SynthResult::templates_used);
  m.def("write_synthetic_log", &write_synthetic_log, py::arg("config"), py::arg("log_path"),
        py::arg("truth_path"));
}
