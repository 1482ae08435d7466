#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "colog/model.hpp"

namespace colog {

struct ClassMetrics {
  long support = 0;  // true instances of the class
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Confusion rows are truth, columns are predictions.
using Confusion = std::vector<std::vector<long>>;

Confusion confusion_matrix(const std::vector<int>& truth, const std::vector<int>& predicted,
                           int n_classes);

struct MetricsReport {
  Confusion confusion;
  std::vector<ClassMetrics> per_class;  // one-vs-rest
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;  // trace / sum
};

// precision = TP/(TP+FP), recall = TP/(TP+FN), F1 their harmonic mean,
// 0/0 taken as 0; macro scores are unweighted class means.
// Throws DataError on an empty or non-square matrix.
MetricsReport metrics(const Confusion& confusion);

struct CurvePoint {
  double threshold = 0.0;
  double x = 0.0;
  double y = 0.0;
};

struct RocPrResult {
  std::vector<CurvePoint> roc;  // x = fpr, y = tpr
  std::vector<CurvePoint> pr;   // x = recall, y = precision
  std::optional<double> roc_auc;  // absent for single-class labels
  std::optional<double> pr_auc;
};

// scores are anomaly-class probabilities; labels use 0 = anomaly (the
// positive class here), 1 = normal. Thresholds at every distinct score,
// trapezoidal areas.
RocPrResult roc_pr_points(const std::vector<double>& scores, const std::vector<int>& labels);

// ---- representation export ----

struct PcaResult {
  Eigen::MatrixXd components;         // 2 x d, unit rows
  Eigen::VectorXd explained_variance; // eigenvalues
  Eigen::VectorXd explained_ratio;    // eigenvalue / total variance
  Eigen::MatrixXd projected;          // n x 2
};

// Top-2 principal components by power iteration with deflation on the
// sample covariance; converges to `tol` in the eigenvector. Returns nothing
// for fewer than 2 rows.
std::optional<PcaResult> pca_top2(const Eigen::MatrixXd& data, double tol = 1e-9,
                                  int max_iterations = 100000);

struct ExportResult {
  Eigen::MatrixXd latents;  // n x latent, pre-classifier LN(O_sem + O_seq)
  std::optional<PcaResult> pca;
};

// Writes <dir>/latents.bin (binary matrix) and, when PCA applies,
// <dir>/pca.tsv with key, x, y and the sample's three labels.
ExportResult export_vectors(const Model& model, const std::vector<Sample>& samples,
                            const std::string& out_dir, int batch_size = 32);

// ---- report files ----

void write_eval_report_json(const std::string& path, const MetricsReport& report,
                            const RocPrResult* curves);
void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& points);

}  // namespace colog
