#include <doctest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hwstyle/trace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kTmp = HWSTYLE_TEST_TMP;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Result cli(const std::string& args) {
  fs::create_directories(kTmp);
  const auto out = kTmp / "stdout.txt", err = kTmp / "stderr.txt";
  const std::string cmd = std::string(HWSTYLE_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string dir(const std::string& name) {
  const auto d = kTmp / name;
  fs::remove_all(d);
  return d.string();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

// Synthesizes the shared two-rotation corpus once.
std::string corpus_file() {
  static const std::string path = [] {
    const auto out = dir("corpus");
    REQUIRE(cli("synth --letters X --writers 40 --styles rotation --seed 1 --out " + out).code == 0);
    return out + "/traces.jsonl";
  }();
  return path;
}

// One tiny trained autoencoder shared by the downstream subcommands.
std::string tiny_run() {
  static const std::string out = [] {
    const auto d = dir("tiny");
    REQUIRE(cli("train --corpus " + corpus_file() + " --hidden 8 --bias-dim 4 --max-epochs 40 --n-transfer 6 --seed 2 --out " + d).code == 0);
    return d;
  }();
  return out;
}

}  // namespace

TEST_CASE("synth writes a balanced corpus and a manifest") {
  const auto path = corpus_file();
  const auto loaded = hwstyle::load_corpus(path);
  CHECK(loaded.rejected.empty());
  REQUIRE(loaded.corpus.size() == 40);
  std::set<std::string> rotations;
  for (const auto& t : loaded.corpus.traces) rotations.insert(t.style.at("rotation"));
  CHECK(rotations == std::set<std::string>{"anticlockwise", "clockwise"});

  const auto m = read_json(fs::path(path).parent_path() / "manifest.json");
  CHECK(m.at("command") == "synth");
  CHECK(m.at("seed") == 1);
  CHECK(m.at("config").at("writers") == "40");
  CHECK(m.at("outputs").at("traces") == path);
  CHECK(m.at("duration_s").get<double>() >= 0.0);
  CHECK(m.contains("version"));
}

TEST_CASE("synth is byte-identical across runs") {
  const auto a = dir("synth_a"), b = dir("synth_b");
  REQUIRE(cli("synth --letters XO --writers 7 --styles rotation,tempo --seed 9 --out " + a).code == 0);
  REQUIRE(cli("synth --letters XO --writers 7 --styles rotation,tempo --seed 9 --out " + b).code == 0);
  CHECK(slurp(a + "/traces.jsonl") == slurp(b + "/traces.jsonl"));
  CHECK(hwstyle::load_corpus(a + "/traces.jsonl").corpus.size() == 14);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(cli("synth --writers 0 --out " + dir("bad")).code == 2);
  CHECK(cli("synth --letters Q --out " + dir("bad")).code == 2);
  CHECK(cli("synth --styles slant --out " + dir("bad")).code == 2);
  CHECK(cli("").code == 2);
  CHECK(cli("frobnicate").code == 2);
  CHECK(cli("train").code == 2);
}

TEST_CASE("a config file supplies flags and the command line overrides it") {
  const auto cfg = kTmp / "synth.json";
  fs::create_directories(kTmp);
  std::ofstream(cfg) << R"({"writers": 12, "letters": "C", "seed": 4})";
  const auto a = dir("cfg_a"), b = dir("cfg_b");
  REQUIRE(cli("synth --config " + cfg.string() + " --out " + a).code == 0);
  const auto ca = hwstyle::load_corpus(a + "/traces.jsonl").corpus;
  CHECK(ca.size() == 12);
  CHECK(ca.traces[0].letter == 'C');
  REQUIRE(cli("synth --config " + cfg.string() + " --writers 5 --out " + b).code == 0);
  CHECK(hwstyle::load_corpus(b + "/traces.jsonl").corpus.size() == 5);
  CHECK(cli("synth --config " + (kTmp / "missing.json").string() + " --out " + b).code == 1);
}

TEST_CASE("train reports a missing corpus as an I/O error naming the path") {
  const auto missing = (kTmp / "no_such_corpus.jsonl").string();
  const auto r = cli("train --corpus " + missing + " --out " + dir("missing"));
  CHECK(r.code == 1);
  CHECK(r.err.find(missing) != std::string::npos);
}

TEST_CASE("train defaults follow the published hyperparameters") {
  const auto d = tiny_run();
  const auto m = read_json(fs::path(d) / "manifest.json");
  const auto& cfg = m.at("config");
  CHECK(cfg.at("encoder-layers") == "2");
  CHECK(cfg.at("decoder-layers") == "2");
  CHECK(std::stod(cfg.at("encoder-dropout").get<std::string>()) == 0.0);
  CHECK(std::stod(cfg.at("decoder-dropout").get<std::string>()) == 0.2);
  CHECK(std::stod(cfg.at("lr").get<std::string>()) == 0.001);
  CHECK(cfg.at("patience") == "20");
  CHECK(cfg.at("hidden") == "8");
  const auto untouched = read_json(fs::path(d) / "manifest.json").at("train_config");
  CHECK(untouched.at("model").at("hidden") == 8);
}

TEST_CASE("tiny training run completes quickly and writes its artifacts") {
  const auto d = dir("tiny_timed");
  const auto start = std::chrono::steady_clock::now();
  const auto r = cli("train --corpus " + corpus_file() + " --hidden 8 --bias-dim 4 --seed 3 --out " + d);
  const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
  REQUIRE(r.code == 0);
  CHECK(took.count() < 60.0);
  for (const char* f : {"checkpoint.bin", "epochs.jsonl", "manifest.json", "train.jsonl", "val.jsonl", "transfer.jsonl"}) {
    CHECK(fs::exists(fs::path(d) / f));
  }
  std::ifstream log(fs::path(d) / "epochs.jsonl");
  int lines = 0;
  for (std::string line; std::getline(log, line);) {
    CHECK(json::parse(line).contains("val_loss"));
    ++lines;
  }
  CHECK(lines >= 1);
}

TEST_CASE("train, generate and eval are reproducible per seed") {
  const auto a = dir("repeat_a"), b = dir("repeat_b");
  const std::string flags = " --hidden 8 --bias-dim 4 --max-epochs 5 --n-transfer 4 --seed 5 --corpus " + corpus_file();
  REQUIRE(cli("train" + flags + " --out " + a).code == 0);
  REQUIRE(cli("train" + flags + " --out " + b).code == 0);
  CHECK(slurp(a + "/checkpoint.bin") == slurp(b + "/checkpoint.bin"));
  CHECK(slurp(a + "/epochs.jsonl") == slurp(b + "/epochs.jsonl"));
  for (const auto& d : {a, b}) {
    REQUIRE(cli("generate --checkpoint " + d + "/checkpoint.bin --corpus " + d + "/transfer.jsonl --seed 6 --out " + d + "/gen").code == 0);
    REQUIRE(cli("eval --reference " + d + "/transfer.jsonl --generated " + d + "/gen/generated.jsonl --checkpoint " +
                d + "/checkpoint.bin --out " + d + "/eval").code == 0);
  }
  CHECK(slurp(a + "/gen/generated.jsonl") == slurp(b + "/gen/generated.jsonl"));
  CHECK(slurp(a + "/eval/report.json") == slurp(b + "/eval/report.json"));
}

TEST_CASE("baseline training and generation") {
  const auto d = dir("baseline");
  REQUIRE(cli("train --baseline --corpus " + corpus_file() + " --hidden 8 --bias-dim 4 --max-epochs 3 --seed 1 --out " + d).code == 0);
  CHECK(read_json(fs::path(d) / "manifest.json").at("command") == "train --baseline");
  const auto r = cli("generate --checkpoint " + d + "/checkpoint.bin --corpus " + d + "/transfer.jsonl --out " + d + "/gen");
  REQUIRE(r.code == 0);
  // transfer writers are unseen by the baseline
  CHECK(r.out.find("mean writer") != std::string::npos);
}

TEST_CASE("eval of a corpus against itself is perfect") {
  const auto d = tiny_run();
  const auto out = dir("self_eval");
  const auto r = cli("eval --reference " + d + "/transfer.jsonl --generated " + d + "/transfer.jsonl --out " + out);
  REQUIRE(r.code == 0);
  const auto rep = read_json(fs::path(out) / "report.json");
  for (const char* feat : {"dir", "speed"}) {
    for (const char* b : {"b1", "b2", "b3"}) CHECK(rep.at("bleu").at(feat).at(b).get<double>() == doctest::Approx(100.0));
  }
  CHECK(rep.at("eos_pearson").get<double>() == doctest::Approx(1.0));
  CHECK(r.out.find("B-1") != std::string::npos);
  CHECK(fs::exists(fs::path(out) / "report.txt"));
}

TEST_CASE("eval rejects empty and unpaired corpora with exit 4") {
  const auto d = tiny_run();
  const auto empty = kTmp / "empty.jsonl";
  std::ofstream(empty).close();
  CHECK(cli("eval --reference " + d + "/transfer.jsonl --generated " + empty.string() + " --out " + dir("e4")).code == 4);
  const auto r = cli("eval --reference " + d + "/transfer.jsonl --generated " + d + "/val.jsonl --out " + dir("e4"));
  CHECK(r.code == 4);
  CHECK(r.err.find("unpaired") != std::string::npos);
}

TEST_CASE("latent writes CSV and SVG and prints a separation score") {
  const auto d = tiny_run();
  const auto out = dir("latent");
  const auto r = cli("latent --checkpoint " + d + "/checkpoint.bin --corpus " + corpus_file() + " --letters X --out " + out);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("separation: ") != std::string::npos);
  const auto csv = slurp(fs::path(out) / "latent.csv");
  CHECK(csv.rfind("writer_id,letter,label,u,v\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 41);
  const auto svg = slurp(fs::path(out) / "latent.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(read_json(fs::path(out) / "manifest.json").contains("separation"));

  CHECK(cli("latent --checkpoint " + d + "/checkpoint.bin --corpus " + corpus_file() + " --letters O --out " + out).code == 4);
}

TEST_CASE("plot draws a trace grid") {
  const auto out = dir("plot");
  REQUIRE(cli("plot --corpus " + corpus_file() + " --limit 10 --out " + out).code == 0);
  const auto svg = slurp(fs::path(out) / "traces.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(fs::exists(fs::path(out) / "manifest.json"));
}

TEST_CASE("ingest reports rejected lines and cleans the rest") {
  const auto raw = kTmp / "raw.jsonl";
  {
    std::ofstream out(raw);
    out << slurp(corpus_file()).substr(0, slurp(corpus_file()).find('\n') + 1);
    out << "{not json\n";
  }
  const auto out = dir("ingest");
  const auto r = cli("ingest --input " + raw.string() + " --out " + out);
  REQUIRE(r.code == 0);
  CHECK(hwstyle::load_corpus(out + "/traces.jsonl").corpus.size() == 1);
  CHECK(slurp(fs::path(out) / "rejected.tsv").rfind("2\t", 0) == 0);
  CHECK(cli("ingest --input " + (kTmp / "nope.jsonl").string() + " --out " + out).code == 1);
}
