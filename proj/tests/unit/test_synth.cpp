#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "colog/dataset.hpp"
#include "colog/drain.hpp"
#include "colog/errors.hpp"
#include "colog/log_ingest.hpp"
#include "colog/synth.hpp"

using namespace colog;

namespace {

struct Truth {
  std::vector<int> point, window, joint;
};

Truth read_truth(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  Truth t;
  long line_no;
  int p, w, j;
  while (in >> line_no >> p >> w >> j) {
    t.point.push_back(p);
    t.window.push_back(w);
    t.joint.push_back(j);
  }
  return t;
}

}  // namespace

TEST_CASE("synth: exact anomaly count and deterministic output") {
  SynthConfig sc;
  sc.lines = 1000;
  sc.anomaly_ratio = 0.1;
  sc.seed = 7;
  const SynthResult r = write_synthetic_log(sc, "colog_synth_a.log", "colog_synth_a.truth");
  CHECK(r.anomalies == 100);
  const Truth t = read_truth("colog_synth_a.truth");
  REQUIRE(t.point.size() == 1000);
  long zeros = 0;
  for (int p : t.point) zeros += p == 0 ? 1 : 0;
  CHECK(zeros == 100);

  write_synthetic_log(sc, "colog_synth_b.log", "colog_synth_b.truth");
  std::ifstream a("colog_synth_a.log"), b("colog_synth_b.log");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  for (const char* f : {"colog_synth_a.log", "colog_synth_a.truth", "colog_synth_b.log",
                        "colog_synth_b.truth"})
    std::remove(f);
}

TEST_CASE("synth: labels in the truth file obey the derive_labels truth table") {
  SynthConfig sc;
  sc.lines = 400;
  sc.anomaly_ratio = 0.12;
  sc.bursts = 2;
  sc.window = 1;
  sc.kind = WindowKind::kContext;
  sc.seed = 13;
  write_synthetic_log(sc, "colog_synth_c.log", "colog_synth_c.truth");
  const Truth t = read_truth("colog_synth_c.truth");
  for (std::size_t i = 0; i < t.point.size(); ++i) {
    const LabelPair lp = derive_labels(t.point, static_cast<long>(i), 1, WindowKind::kContext);
    CHECK(lp.window_label == t.window[i]);
    CHECK(lp.joint_label == t.joint[i]);
    CHECK(joint_label_of(t.point[i], t.window[i]) == t.joint[i]);
  }
  std::remove("colog_synth_c.log");
  std::remove("colog_synth_c.truth");
}

TEST_CASE("synth: burst interiors carry joint label 0 with W=1 context") {
  SynthConfig sc;
  sc.lines = 300;
  sc.anomaly_ratio = 0.2;
  sc.bursts = 3;
  sc.burst_len = 5;
  sc.window = 1;
  sc.seed = 17;
  const SynthResult r = write_synthetic_log(sc, "colog_synth_d.log", "colog_synth_d.truth");
  CHECK(r.burst_lines == 15);
  const Truth t = read_truth("colog_synth_d.truth");
  // every run of >= 3 consecutive anomalies has interior joint labels 0
  long interior0 = 0;
  for (std::size_t i = 1; i + 1 < t.point.size(); ++i)
    if (t.point[i - 1] == 0 && t.point[i] == 0 && t.point[i + 1] == 0) {
      CHECK(t.joint[i] == 0);
      ++interior0;
    }
  CHECK(interior0 >= 3 * 3);  // 3 bursts of length 5 give 3 interiors each
  // and burst neighbors (normal, window anomalous) are class 2
  long fringe2 = 0;
  for (std::size_t i = 0; i < t.point.size(); ++i)
    if (t.joint[i] == 2) ++fringe2;
  CHECK(fringe2 > 0);
  std::remove("colog_synth_d.log");
  std::remove("colog_synth_d.truth");
}

TEST_CASE("synth: injected lines use never-seen templates, injection 0 adds none") {
  SynthConfig base;
  base.lines = 500;
  base.anomaly_ratio = 0.1;
  base.templates = 5;
  base.seed = 19;
  base.injection_ratio = 0.0;
  const SynthResult r0 = write_synthetic_log(base, "colog_synth_e.log", "colog_synth_e.truth");
  CHECK(r0.injected == 0);

  SynthConfig inj = base;
  inj.injection_ratio = 0.2;
  const SynthResult r1 = write_synthetic_log(inj, "colog_synth_f.log", "colog_synth_f.truth");
  CHECK(r1.injected == 100);

  // the injected file contains messages whose first tokens never occur in
  // the base file (they come from a disjoint pattern pool)
  const auto base_recs = split_file("colog_synth_e.log", HeaderPattern::named("syslog"));
  const auto inj_recs = split_file("colog_synth_f.log", HeaderPattern::named("syslog"));
  std::set<std::string> base_first;
  for (const auto& rec : base_recs) {
    const auto toks = DrainTree::message_tokens(rec.message);
    if (!toks.empty()) base_first.insert(toks[0] + " " + (toks.size() > 1 ? toks[1] : ""));
  }
  long unseen = 0;
  for (const auto& rec : inj_recs) {
    const auto toks = DrainTree::message_tokens(rec.message);
    if (!toks.empty() && !base_first.count(toks[0] + " " + (toks.size() > 1 ? toks[1] : "")))
      ++unseen;
  }
  CHECK(unseen >= r1.injected);  // every injected line is template-unseen
  for (const char* f : {"colog_synth_e.log", "colog_synth_e.truth", "colog_synth_f.log",
                        "colog_synth_f.truth"})
    std::remove(f);
}

TEST_CASE("synth config validation") {
  SynthConfig sc;
  sc.anomaly_ratio = 1.5;
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc.anomaly_ratio = 0.1;
  sc.injection_ratio = -0.1;
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc.injection_ratio = 0.0;
  sc.burst_len = 2;  // below 2W+1
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc.burst_len = 0;
  sc.bursts = 400;
  sc.lines = 100;
  CHECK_THROWS_AS(write_synthetic_log(sc, "x.log", "x.truth"), ConfigError);
}
