#include "colog/eval.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "colog/errors.hpp"
#include "colog/matrixio.hpp"
#include "colog/rng.hpp"

namespace colog {

Confusion confusion_matrix(const std::vector<int>& truth, const std::vector<int>& predicted,
                           int n_classes) {
  if (truth.size() != predicted.size())
    throw DataError("confusion_matrix: truth/prediction size mismatch");
  Confusion m(n_classes, std::vector<long>(n_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
      throw DataError("confusion_matrix: label out of range");
    ++m[t][p];
  }
  return m;
}

MetricsReport metrics(const Confusion& confusion) {
  const std::size_t n = confusion.size();
  if (n == 0) throw DataError("metrics: empty confusion matrix");
  for (const auto& row : confusion)
    if (row.size() != n) throw DataError("metrics: confusion matrix not square");

  MetricsReport report;
  report.confusion = confusion;
  long total = 0, diagonal = 0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      total += confusion[r][c];
      if (r == c) diagonal += confusion[r][c];
    }
  if (total == 0) throw DataError("metrics: confusion matrix has no samples");

  const auto safe_div = [](double num, double den) { return den == 0.0 ? 0.0 : num / den; };
  for (std::size_t c = 0; c < n; ++c) {
    const double tp = static_cast<double>(confusion[c][c]);
    double fp = 0, fn = 0;
    for (std::size_t r = 0; r < n; ++r) {
      if (r != c) {
        fp += static_cast<double>(confusion[r][c]);
        fn += static_cast<double>(confusion[c][r]);
      }
    }
    ClassMetrics cm;
    cm.support = std::accumulate(confusion[c].begin(), confusion[c].end(), 0L);
    cm.precision = safe_div(tp, tp + fp);
    cm.recall = safe_div(tp, tp + fn);
    cm.f1 = safe_div(2.0 * cm.precision * cm.recall, cm.precision + cm.recall);
    report.per_class.push_back(cm);
    report.macro_precision += cm.precision;
    report.macro_recall += cm.recall;
    report.macro_f1 += cm.f1;
  }
  report.macro_precision /= static_cast<double>(n);
  report.macro_recall /= static_cast<double>(n);
  report.macro_f1 /= static_cast<double>(n);
  report.accuracy = static_cast<double>(diagonal) / static_cast<double>(total);
  return report;
}

RocPrResult roc_pr_points(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw DataError("roc_pr_points: scores/labels size mismatch");
  RocPrResult result;
  long positives = 0, negatives = 0;  // positive class = anomaly (label 0)
  for (int y : labels) (y == 0 ? positives : negatives)++;
  if (positives == 0 || negatives == 0) return result;  // AUC undefined

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  const double inf = std::numeric_limits<double>::infinity();
  result.roc.push_back({inf, 0.0, 0.0});
  result.pr.push_back({inf, 0.0, 1.0});

  long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    // consume the whole tie group: predict anomaly iff score >= threshold
    while (i < order.size() && scores[order[i]] == threshold) {
      (labels[order[i]] == 0 ? tp : fp)++;
      ++i;
    }
    const double tpr = static_cast<double>(tp) / static_cast<double>(positives);
    const double fpr = static_cast<double>(fp) / static_cast<double>(negatives);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    result.roc.push_back({threshold, fpr, tpr});
    result.pr.push_back({threshold, tpr, precision});
  }

  const auto trapezoid = [](const std::vector<CurvePoint>& pts) {
    double area = 0.0;
    for (std::size_t j = 1; j < pts.size(); ++j)
      area += (pts[j].x - pts[j - 1].x) * 0.5 * (pts[j].y + pts[j - 1].y);
    return area;
  };
  result.roc_auc = trapezoid(result.roc);
  result.pr_auc = trapezoid(result.pr);
  return result;
}

std::optional<PcaResult> pca_top2(const Eigen::MatrixXd& data, double tol, int max_iterations) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n < 2) return std::nullopt;

  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(n - 1);
  const double total_variance = cov.trace();

  PcaResult result;
  result.components.resize(2, d);
  result.explained_variance.resize(2);
  result.explained_ratio.resize(2);

  Rng rng(0x9e3779b9u);  // fixed internal stream; the result is data-determined
  for (int comp = 0; comp < 2; ++comp) {
    Eigen::VectorXd v(d);
    for (Eigen::Index j = 0; j < d; ++j) v[j] = rng.gaussian();
    v.normalize();
    double eigenvalue = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
      Eigen::VectorXd w = cov * v;
      const double norm = w.norm();
      if (norm < 1e-300) {
        eigenvalue = 0.0;  // deflated to (numerically) nothing
        break;
      }
      w /= norm;
      const double delta = std::min((w - v).norm(), (w + v).norm());
      v = w;
      eigenvalue = v.dot(cov * v);
      if (delta < tol) break;
    }
    result.components.row(comp) = v.transpose();
    result.explained_variance[comp] = eigenvalue;
    result.explained_ratio[comp] =
        total_variance > 0.0 ? eigenvalue / total_variance : 0.0;
    cov -= eigenvalue * v * v.transpose();  // deflation
  }
  result.projected = centered * result.components.transpose();
  return result;
}

ExportResult export_vectors(const Model& model, const std::vector<Sample>& samples,
                            const std::string& out_dir, int batch_size) {
  if (samples.empty()) throw DataError("export_vectors: no samples");
  std::filesystem::create_directories(out_dir);

  ExportResult result;
  result.latents.resize(static_cast<Eigen::Index>(samples.size()), model.config().latent);
  Eigen::Index row = 0;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    Batch batch;
    for (std::size_t i = start; i < end; ++i) {
      const Sample& s = samples[i];
      batch.token_ids.push_back(s.semantic.token_ids);
      batch.sem_mask.push_back(s.semantic.mask);
      batch.sequence.push_back(s.sequence.vectors);
      batch.seq_mask.push_back(s.sequence.mask);
      batch.point_labels.push_back(s.point_label);
      batch.joint_labels.push_back(s.joint_label);
    }
    const BatchForward fwd = model.infer(batch);
    result.latents.middleRows(row, fwd.latents.rows()) = fwd.latents;
    row += fwd.latents.rows();
  }

  write_matrix(out_dir + "/latents.bin", result.latents);
  result.pca = pca_top2(result.latents);
  if (result.pca) {
    std::ofstream out(out_dir + "/pca.tsv");
    if (!out) throw DataError("cannot write " + out_dir + "/pca.tsv");
    out << "key\tx\ty\tpoint\twindow\tjoint\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
      out << samples[i].key << '\t' << result.pca->projected(static_cast<Eigen::Index>(i), 0)
          << '\t' << result.pca->projected(static_cast<Eigen::Index>(i), 1) << '\t'
          << samples[i].point_label << '\t' << samples[i].window_label << '\t'
          << samples[i].joint_label << '\n';
    }
  }
  return result;
}

void write_eval_report_json(const std::string& path, const MetricsReport& report,
                            const RocPrResult* curves) {
  nlohmann::json j;
  j["confusion"] = report.confusion;
  j["accuracy"] = report.accuracy;
  j["macro"] = {{"precision", report.macro_precision},
                {"recall", report.macro_recall},
                {"f1", report.macro_f1}};
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& c : report.per_class)
    per_class.push_back({{"support", c.support},
                         {"precision", c.precision},
                         {"recall", c.recall},
                         {"f1", c.f1}});
  j["per_class"] = per_class;
  if (curves) {
    if (curves->roc_auc) j["roc_auc"] = *curves->roc_auc;
    if (curves->pr_auc) j["pr_auc"] = *curves->pr_auc;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report: " + path);
  out << j.dump(2) << '\n';
}

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& points) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write curve file: " + path);
  out << "threshold,x,y\n";
  for (const auto& p : points) out << p.threshold << ',' << p.x << ',' << p.y << '\n';
}

}  // namespace colog
