#include "colog/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "colog/errors.hpp"
#include "colog/rng.hpp"

namespace colog {

namespace {

// Benign patterns. The first two tokens are unique literals per pattern and
// the parameter slots sit past the routing prefix, so a fixed-depth template
// miner groups each pattern into exactly one template.
const std::vector<std::string> kNormalPatterns = {
    "Started session {NUM} of user {USER}",
    "Accepted publickey for {USER} from {IP} port {NUM}",
    "Connection closed by {IP} port {NUM}",
    "New connection from {IP} on port {NUM}",
    "Receiving block {BLK} of size {NUM} from {IP}",
    "Verification succeeded for {BLK}",
    "Scheduled snapshot completed in {NUM} ms",
    "Service heartbeat acknowledged by node {NUM}",
    "User logout recorded for {USER} session {NUM}",
    "Cache refresh finished for partition {NUM}",
    "Job {NUM} finished successfully on queue {NUM}",
    "Replication caught up at offset {NUM}",
    "Lease renewed for client {NUM} ttl {NUM}",
    "Metrics flushed {NUM} series in {NUM} ms",
    "Checkpoint written at index {NUM}",
    "Peer handshake complete with {IP}",
    "Quota usage recalculated for volume {NUM}",
    "Index compaction finished level {NUM}",
    "Worker pool resized to {NUM} threads",
    "Message queue drained {NUM} items",
};

// Every anomalous pattern carries at least one default-lexicon word.
const std::vector<std::string> kAnomalyPatterns = {
    "Failed password for {USER} from {IP} port {NUM}",
    "error reading block {BLK} from disk {NUM}",
    "Connection timeout after {NUM} ms from {IP}",
    "Fatal exception in worker {NUM}",
    "Access denied for {USER} on resource {NUM}",
    "Invalid request header from {IP}",
    "Checksum failure on segment {NUM}",
    "panic: unable to allocate {NUM} bytes",
};

// Unstable templates: benign wording unseen in the normal pool.
const std::vector<std::string> kInjectedPatterns = {
    "Telemetry batch {NUM} persisted to ledger {NUM}",
    "Replica voted affirmative in election {NUM}",
    "Thermal sensor reading {NUM} within range",
    "Autoscaler settled on {NUM} replicas",
    "Garbage cycle reclaimed {NUM} objects",
    "Mirror sync advanced to generation {NUM}",
};

const std::vector<std::string> kUsers = {"alice", "bob", "carol", "dave", "erin"};
const std::vector<std::string> kHosts = {"node01", "node02", "node03"};
const std::vector<std::string> kServices = {"sshd", "datanode", "scheduler", "systemd"};

std::string fill_pattern(const std::string& pattern, Rng& rng) {
  std::string out;
  std::size_t i = 0;
  while (i < pattern.size()) {
    if (pattern[i] != '{') {
      out += pattern[i++];
      continue;
    }
    const auto close = pattern.find('}', i);
    const std::string slot = pattern.substr(i + 1, close - i - 1);
    if (slot == "NUM") {
      out += std::to_string(rng.uniform_u64(90000) + 1);
    } else if (slot == "USER") {
      out += kUsers[rng.index(kUsers.size())];
    } else if (slot == "IP") {
      out += "10." + std::to_string(rng.uniform_u64(256)) + "." +
             std::to_string(rng.uniform_u64(256)) + "." + std::to_string(rng.uniform_u64(254) + 1);
    } else if (slot == "BLK") {
      out += "blk_" + std::to_string(rng.uniform_u64(900000) + 100000);
    } else {
      out += slot;
    }
    i = close + 1;
  }
  return out;
}

std::string format_header(long index, Rng& rng) {
  const long second = index % 60;
  const long minute = (index / 60) % 60;
  const long hour = 6 + (index / 3600) % 18;
  char stamp[32];
  std::snprintf(stamp, sizeof stamp, "Jun %2d %02ld:%02ld:%02ld",
                9 + static_cast<int>(index / 86400), hour, minute, second);
  const std::string host = kHosts[rng.index(kHosts.size())];
  const std::string service = kServices[rng.index(kServices.size())];
  return std::string(stamp) + " " + host + " " + service + "[" +
         std::to_string(1000 + rng.uniform_u64(9000)) + "]: ";
}

}  // namespace

void SynthConfig::validate() const {
  if (lines < 1) throw ConfigError("synth: lines must be >= 1");
  if (templates < 1) throw ConfigError("synth: templates must be >= 1");
  if (templates > static_cast<int>(kNormalPatterns.size()))
    throw ConfigError("synth: at most " + std::to_string(kNormalPatterns.size()) +
                      " benign templates available");
  if (!(anomaly_ratio >= 0.0 && anomaly_ratio <= 1.0))
    throw ConfigError("synth: anomaly_ratio must be in [0, 1]");
  if (!(injection_ratio >= 0.0 && injection_ratio <= 1.0))
    throw ConfigError("synth: injection_ratio must be in [0, 1]");
  if (bursts < 0) throw ConfigError("synth: bursts must be >= 0");
  if (window < 1) throw ConfigError("synth: window must be >= 1");
  const int min_burst = 2 * window + 1;
  if (burst_len != 0 && burst_len < min_burst)
    throw ConfigError("synth: burst_len must be >= 2*window+1 = " + std::to_string(min_burst));
}

SynthResult write_synthetic_log(const SynthConfig& config, const std::string& log_path,
                                const std::string& truth_path) {
  config.validate();
  Rng rng(config.seed);
  const long n = config.lines;
  const long anomalies = std::lround(static_cast<double>(n) * config.anomaly_ratio);
  const int burst_len = config.burst_len == 0 ? 2 * config.window + 1 : config.burst_len;
  const long burst_total = static_cast<long>(config.bursts) * burst_len;
  if (burst_total > anomalies)
    throw ConfigError("synth: bursts * burst_len exceeds the anomaly budget");

  // 0 = normal, 1 = point anomaly, 2 = burst anomaly member
  std::vector<int> role(static_cast<std::size_t>(n), 0);

  // Place bursts first, keeping a one-window margin so they stay distinct.
  long placed_bursts = 0;
  for (int b = 0; b < config.bursts; ++b) {
    bool placed = false;
    for (int attempt = 0; attempt < 4096 && !placed; ++attempt) {
      const long start = static_cast<long>(rng.uniform_u64(
          static_cast<std::uint64_t>(std::max<long>(1, n - burst_len + 1))));
      bool free = true;
      for (long j = std::max<long>(0, start - config.window - 1);
           j < std::min(n, start + burst_len + config.window + 1) && free; ++j)
        free = role[static_cast<std::size_t>(j)] == 0;
      if (!free) continue;
      for (long j = start; j < start + burst_len; ++j) role[static_cast<std::size_t>(j)] = 2;
      placed = true;
      ++placed_bursts;
    }
    if (!placed) throw DataError("synth: could not place all bursts; lower bursts or lines");
  }

  // Scatter the remaining anomalies as isolated points, preferring spots
  // whose whole window is clean so the 4-class data keeps pure cases.
  long points_left = anomalies - placed_bursts * burst_len;
  long guard = 0;
  while (points_left > 0) {
    const long pos = static_cast<long>(rng.uniform_u64(static_cast<std::uint64_t>(n)));
    bool clean = role[static_cast<std::size_t>(pos)] == 0;
    if (clean && ++guard < 16 * n) {
      for (long j = std::max<long>(0, pos - config.window);
           j <= std::min(n - 1, pos + config.window) && clean; ++j)
        if (j != pos) clean = role[static_cast<std::size_t>(j)] == 0;
      if (!clean) continue;  // retry while budget lasts
    } else if (role[static_cast<std::size_t>(pos)] != 0) {
      continue;
    }
    role[static_cast<std::size_t>(pos)] = 1;
    --points_left;
  }

  // Injected lines replace normal positions.
  const long injected_target = std::lround(static_cast<double>(n) * config.injection_ratio);
  std::vector<std::uint8_t> injected(static_cast<std::size_t>(n), 0);
  long injected_count = 0;
  guard = 0;
  while (injected_count < injected_target && guard++ < 64 * n) {
    const long pos = static_cast<long>(rng.uniform_u64(static_cast<std::uint64_t>(n)));
    if (role[static_cast<std::size_t>(pos)] != 0 || injected[static_cast<std::size_t>(pos)])
      continue;
    injected[static_cast<std::size_t>(pos)] = 1;
    ++injected_count;
  }
  if (injected_count < injected_target)
    throw DataError("synth: injection ratio leaves no normal lines to replace");

  // Emit lines and point labels.
  std::ofstream log(log_path);
  if (!log) throw DataError("cannot write log file: " + log_path);
  std::vector<int> point_labels(static_cast<std::size_t>(n), 1);
  std::vector<std::uint8_t> used(static_cast<std::size_t>(config.templates), 0);
  SynthResult result;
  for (long i = 0; i < n; ++i) {
    std::string message;
    if (role[static_cast<std::size_t>(i)] != 0) {
      message = fill_pattern(kAnomalyPatterns[rng.index(kAnomalyPatterns.size())], rng);
      point_labels[static_cast<std::size_t>(i)] = 0;
      if (role[static_cast<std::size_t>(i)] == 2) ++result.burst_lines;
    } else if (injected[static_cast<std::size_t>(i)]) {
      message = fill_pattern(kInjectedPatterns[rng.index(kInjectedPatterns.size())], rng);
    } else {
      const std::size_t t = rng.index(static_cast<std::size_t>(config.templates));
      used[t] = 1;
      message = fill_pattern(kNormalPatterns[t], rng);
    }
    log << format_header(i, rng) << message << '\n';
  }
  result.anomalies = anomalies;
  result.injected = injected_count;
  for (std::uint8_t u : used) result.templates_used += u;

  // Truth: point labels by construction, window/joint derived.
  std::ofstream truth(truth_path);
  if (!truth) throw DataError("cannot write truth file: " + truth_path);
  for (long i = 0; i < n; ++i) {
    const LabelPair lp = derive_labels(point_labels, i, config.window, config.kind);
    truth << i << '\t' << point_labels[static_cast<std::size_t>(i)] << '\t' << lp.window_label
          << '\t' << lp.joint_label << '\n';
  }
  return result;
}

}  // namespace colog
