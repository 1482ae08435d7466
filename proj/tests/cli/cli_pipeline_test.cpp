// Drives the installed binary end to end from a single config file:
// synth -> parse -> prepare -> balance -> train -> eval -> predict ->
// export-vectors, then checks outputs and exit-code conventions.

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int checks = 0, failures = 0;

void expect(bool ok, const std::string& what) {
  ++checks;
  if (!ok) {
    ++failures;
    std::cerr << "FAILED: " << what << "\n";
  }
}

int run(const std::string& command) {
  const int status = std::system(command.c_str());
  return status < 0 ? status : WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: cli_pipeline_test <path-to-colog-binary>\n";
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path dir = fs::temp_directory_path() / "colog_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const fs::path config = dir / "pipeline.conf";
  {
    std::ofstream out(config);
    out << "seed = 7\n"
        << "classes = 2\n"
        << "synth.out = " << (dir / "raw.log").string() << "\n"
        << "synth.truth = " << (dir / "truth.tsv").string() << "\n"
        << "synth.lines = 400\n"
        << "synth.templates = 5\n"
        << "synth.anomaly_ratio = 0.12\n"
        << "synth.bursts = 2\n"
        << "parse.input = " << (dir / "raw.log").string() << "\n"
        << "parse.out = " << (dir / "records.tsv").string() << "\n"
        << "parse.templates_out = " << (dir / "templates.tsv").string() << "\n"
        << "prepare.files = " << (dir / "raw.log").string() << "\n"
        << "prepare.truth = " << (dir / "truth.tsv").string() << "\n"
        << "prepare.out = " << (dir / "prepared").string() << "\n"
        << "prepare.sem_len = 16\n"
        << "prepare.seq_len = 4\n"
        << "prepare.event_dim = 32\n"
        << "prepare.word_dim = 24\n"
        << "balance.prepared = " << (dir / "prepared").string() << "\n"
        << "train.prepared = " << (dir / "prepared").string() << "\n"
        << "train.out = " << (dir / "model").string() << "\n"
        << "train.hidden = 16\n"
        << "train.heads = 2\n"
        << "train.layers = 1\n"
        << "train.ffn_inner = 32\n"
        << "train.latent = 16\n"
        << "train.d_word = 16\n"
        << "train.lr = 2e-3\n"
        << "train.max_epochs = 8\n"
        << "train.warmup = 2\n"
        << "train.batch = 32\n"
        << "eval.prepared = " << (dir / "prepared").string() << "\n"
        << "eval.checkpoint = " << (dir / "model/best.ckpt").string() << "\n"
        << "eval.out = " << (dir / "eval").string() << "\n"
        << "predict.prepared = " << (dir / "prepared").string() << "\n"
        << "predict.checkpoint = " << (dir / "model/best.ckpt").string() << "\n"
        << "predict.out = " << (dir / "verdicts.tsv").string() << "\n"
        << "export.prepared = " << (dir / "prepared").string() << "\n"
        << "export.checkpoint = " << (dir / "model/best.ckpt").string() << "\n"
        << "export.out = " << (dir / "export").string() << "\n";
  }
  const std::string base = cli + " ";
  const std::string cfg_arg = " --config " + config.string();

  expect(run(base + "synth" + cfg_arg) == 0, "synth exits 0");
  expect(fs::exists(dir / "raw.log") && fs::exists(dir / "truth.tsv"), "synth outputs exist");

  expect(run(base + "parse" + cfg_arg) == 0, "parse exits 0");
  expect(fs::exists(dir / "records.tsv") && fs::exists(dir / "templates.tsv"),
         "parse outputs exist");
  {
    // records: line_no \t template_id \t message \t label
    std::ifstream in(dir / "records.tsv");
    std::string first;
    std::getline(in, first);
    expect(std::count(first.begin(), first.end(), '\t') == 3, "records.tsv has 4 fields");
  }

  expect(run(base + "prepare" + cfg_arg) == 0, "prepare exits 0");
  for (const char* f : {"meta.conf", "vocab.tsv", "samples.tsv", "vectors.bin"})
    expect(fs::exists(dir / "prepared" / f), std::string("prepared/") + f + " exists");

  expect(run(base + "balance" + cfg_arg) == 0, "balance exits 0");
  expect(fs::exists(dir / "prepared/samples.balanced.tsv"), "balanced samples exist");

  expect(run(base + "train" + cfg_arg) == 0, "train exits 0");
  expect(fs::exists(dir / "model/best.ckpt") && fs::exists(dir / "model/history.csv"),
         "train outputs exist");
  {
    const std::string history = slurp(dir / "model/history.csv");
    expect(history.rfind("epoch,lr,train_loss,val_f1", 0) == 0, "history header");
  }

  expect(run(base + "eval" + cfg_arg) == 0, "eval exits 0");
  expect(fs::exists(dir / "eval/report.json"), "eval report exists");
  expect(fs::exists(dir / "eval/roc.csv") && fs::exists(dir / "eval/pr.csv"),
         "curve files exist in 2-class mode");
  {
    const std::string report = slurp(dir / "eval/report.json");
    expect(report.find("\"macro\"") != std::string::npos, "report carries macro block");
    expect(report.find("\"confusion\"") != std::string::npos, "report carries confusion");
  }

  expect(run(base + "predict" + cfg_arg) == 0, "predict exits 0");
  {
    std::ifstream in(dir / "verdicts.tsv");
    std::string line;
    long rows = 0;
    bool shape_ok = true, range_ok = true;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      ++rows;
      std::istringstream ls(line);
      long line_no;
      int verdict;
      double prob;
      if (!(ls >> line_no >> verdict >> prob)) shape_ok = false;
      if (verdict != 0 && verdict != 1) range_ok = false;  // --classes 2
      if (prob < 0.0 || prob > 1.0) range_ok = false;
    }
    expect(rows == 400, "one verdict per record");
    expect(shape_ok, "verdict rows are line_no, class, probability");
    expect(range_ok, "2-class verdicts in {0,1} with probabilities in [0,1]");
  }

  expect(run(base + "export-vectors" + cfg_arg) == 0, "export-vectors exits 0");
  expect(fs::exists(dir / "export/latents.bin") && fs::exists(dir / "export/pca.tsv"),
         "export outputs exist");

  // 4-class verdicts take values in {0,1,2,3}
  expect(run(base + "predict" + cfg_arg + " --classes 4 --out " +
             (dir / "verdicts4.tsv").string()) == 2,
         "4-class predict against a 2-class checkpoint is refused (config error)");

  // exit-code conventions
  expect(run(base + "prepare --config " + (dir / "missing.conf").string()) == 2,
         "missing config file exits 2");
  {
    std::ofstream bad(dir / "bad.conf");
    bad << "seed = 7\nnot_a_known_key = 1\n";
  }
  expect(run(base + "synth --config " + (dir / "bad.conf").string()) == 2,
         "unknown config key exits 2");
  {
    std::ofstream bad(dir / "bad2.conf");
    bad << "eval.prepared = /no/such/dir\neval.checkpoint = /no/such.ckpt\n";
  }
  expect(run(base + "eval --config " + (dir / "bad2.conf").string()) == 3,
         "missing data exits 3");

  std::cout << checks - failures << "/" << checks << " pipeline checks passed\n";
  if (failures == 0) fs::remove_all(dir);
  return failures == 0 ? 0 : 1;
}
