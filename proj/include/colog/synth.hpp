#pragma once

#include <cstdint>
#include <string>

#include "colog/modality.hpp"

namespace colog {

// Seeded syslog-style generator for desk-scale runs: benign template lines,
// isolated point anomalies carrying lexicon words, collective bursts long
// enough for a window to sit inside them, and optional never-seen-template
// injection for robustness experiments.
struct SynthConfig {
  long lines = 1000;
  int templates = 5;          // benign template pool size
  double anomaly_ratio = 0.1;
  int bursts = 0;             // collective bursts among the anomaly budget
  int burst_len = 0;          // 0 picks the minimum 2*window + 1
  double injection_ratio = 0.0;  // fraction of lines from unseen templates
  int window = 1;             // for ground-truth window labels
  WindowKind kind = WindowKind::kContext;
  std::uint64_t seed = 42;

  void validate() const;  // throws ConfigError
};

struct SynthResult {
  long anomalies = 0;       // exactly round(lines * anomaly_ratio)
  long burst_lines = 0;
  long injected = 0;        // exactly round(lines * injection_ratio)
  int templates_used = 0;   // distinct benign templates emitted
};

// Writes the raw log and a truth file of line_no, point, window, joint.
SynthResult write_synthetic_log(const SynthConfig& config, const std::string& log_path,
                                const std::string& truth_path);

}  // namespace colog
