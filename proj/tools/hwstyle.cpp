// hwstyle: synth, ingest, train, generate, eval, latent and plot in one binary.
//
// Exit codes: 0 success, 1 I/O, 2 usage, 3 numeric failure, 4 data mismatch.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "hwstyle/checkpoint.hpp"
#include "hwstyle/error.hpp"
#include "hwstyle/eval.hpp"
#include "hwstyle/latent.hpp"
#include "hwstyle/sampler.hpp"
#include "hwstyle/svg.hpp"
#include "hwstyle/synth.hpp"
#include "hwstyle/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hwstyle;

namespace {

#ifndef HWSTYLE_VERSION
#define HWSTYLE_VERSION "dev"
#endif

struct Common {
  std::uint64_t seed = 0;
  std::string config;
  std::string out = ".";
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Seed for every random choice");
  sub->add_option("--config", c.config, "JSON object whose keys are flag names of this subcommand");
  sub->add_option("--out", c.out, "Output directory");
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed: " + path.string());
}

fs::path prepare_out(const Common& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw IoError("cannot create output directory " + c.out + ": " + ec.message());
  return fs::path(c.out);
}

std::vector<Trace> read_traces(const std::string& path) {
  const auto res = load_corpus(path);
  for (const auto& r : res.rejected) std::cerr << path << ":" << r.line << ": skipped: " << r.message << "\n";
  return res.corpus.traces;
}

// Effective value of every long option of `sub`, for the manifest.
json snapshot(const CLI::App* sub) {
  json j = json::object();
  for (const auto* opt : sub->get_options()) {
    const auto& name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config" || name == "out") continue;
    if (opt->get_type_size() == 0) {
      j[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      std::string joined;
      for (const auto& r : opt->results()) joined += (joined.empty() ? "" : ",") + r;
      j[name] = joined;
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

class Manifest {
 public:
  Manifest(std::string command, const CLI::App* sub, const Common& c)
      : start_(std::chrono::steady_clock::now()) {
    j_["command"] = std::move(command);
    j_["config"] = snapshot(sub);
    j_["config_file"] = c.config;
    j_["seed"] = c.seed;
    j_["version"] = HWSTYLE_VERSION;
    j_["inputs"] = json::object();
    j_["outputs"] = json::object();
  }
  void input(const std::string& role, const std::string& path) { j_["inputs"][role] = path; }
  void output(const std::string& role, const fs::path& path) { j_["outputs"][role] = path.string(); }
  void note(const std::string& key, json value) { j_[key] = std::move(value); }

  void write(const fs::path& dir) {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start_;
    j_["duration_s"] = dt.count();
    write_file(dir / "manifest.json", j_.dump(2) + "\n");
  }

 private:
  json j_;
  std::chrono::steady_clock::time_point start_;
};

// Config keys become flags placed ahead of the command-line arguments, so
// explicit flags override them.
std::vector<std::string> config_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("config " + path + " must be a JSON object");
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    if (key == "config" || key == "out") continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back("--" + key);
    } else if (value.is_string()) {
      args.push_back("--" + key);
      args.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      args.push_back("--" + key);
      args.push_back(value.dump());
    } else {
      throw InvalidArgument("config key '" + key + "' must be a scalar");
    }
  }
  return args;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string letters = "X";
  std::size_t writers = 40;
  std::vector<std::string> styles{"rotation"};
  double jitter = 0.002;
};

void cmd_synth(const SynthArgs& a, const Common& c, const CLI::App* sub) {
  Manifest m("synth", sub, c);
  SynthCorpusConfig cfg;
  cfg.letters = a.letters;
  cfg.writers = a.writers;
  cfg.jitter = a.jitter;
  cfg.seed = c.seed;
  cfg.vary_rotation = false;
  for (const auto& s : a.styles) {
    if (s == "rotation") cfg.vary_rotation = true;
    else if (s == "tempo") cfg.vary_tempo = true;
    else if (s == "corner") cfg.vary_corner = true;
    else if (s == "flourish") cfg.vary_flourish = true;
    else throw InvalidArgument("unknown style '" + s + "' (rotation, tempo, corner, flourish)");
  }
  const auto traces = synth_corpus(cfg);
  const auto dir = prepare_out(c);
  save_traces(dir / "traces.jsonl", traces);
  m.output("traces", dir / "traces.jsonl");
  m.note("n_traces", traces.size());
  m.write(dir);
  std::cout << "wrote " << traces.size() << " traces to " << (dir / "traces.jsonl").string() << "\n";
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string input;
  CleanConfig clean;
};

void cmd_ingest(const IngestArgs& a, const Common& c, const CLI::App* sub) {
  Manifest m("ingest", sub, c);
  m.input("traces", a.input);
  const auto loaded = load_corpus(a.input);
  const auto cleaned = clean(loaded.corpus, a.clean);
  const auto dir = prepare_out(c);
  save_traces(dir / "traces.jsonl", cleaned.traces);
  std::ostringstream rejected;
  for (const auto& r : loaded.rejected) rejected << r.line << "\t" << r.message << "\n";
  write_file(dir / "rejected.tsv", rejected.str());
  m.output("traces", dir / "traces.jsonl");
  m.output("rejected", dir / "rejected.tsv");
  m.note("n_read", loaded.corpus.size());
  m.note("n_rejected_lines", loaded.rejected.size());
  m.note("n_kept", cleaned.size());
  m.write(dir);
  std::cout << "read " << loaded.corpus.size() << " traces, rejected " << loaded.rejected.size()
            << " lines, kept " << cleaned.size() << " after cleaning\n";
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string corpus;
  bool baseline = false;
  TrainConfig cfg;
  std::size_t n_transfer = 10;
  double val_fraction = 0.1;
};

void cmd_train(TrainArgs a, const Common& c, const CLI::App* sub) {
  Manifest m(a.baseline ? "train --baseline" : "train", sub, c);
  m.input("corpus", a.corpus);
  a.cfg.seed = c.seed;
  a.cfg.validate();

  Corpus corpus;
  for (auto& t : read_traces(a.corpus)) corpus.add(std::move(t));
  corpus = split_writers(clean(corpus), {a.n_transfer, a.val_fraction, c.seed});

  const auto dir = prepare_out(c);
  for (const auto s : {Split::train, Split::val, Split::transfer}) {
    const auto path = dir / (std::string(to_string(s)) + ".jsonl");
    save_traces(path, corpus.select(s));
    m.output(std::string(to_string(s)), path);
  }

  std::ostringstream log;
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& r) {
    log << r.to_json().dump() << "\n";
    std::cout << "epoch " << r.epoch << " train " << r.train_loss << " val " << r.val_loss << "\n";
  };
  const auto result = a.baseline ? train_baseline(corpus, a.cfg, hooks) : train(corpus, a.cfg, hooks);

  save_checkpoint(dir / "checkpoint.bin", result.checkpoint);
  write_file(dir / "epochs.jsonl", log.str());
  m.output("checkpoint", dir / "checkpoint.bin");
  m.output("epochs", dir / "epochs.jsonl");
  m.note("train_config", a.cfg.to_json());
  m.note("best_epoch", result.checkpoint.epoch);
  m.note("best_val_loss", result.checkpoint.best_val_loss);
  m.note("early_stopped", result.early_stopped);
  m.note("skipped_traces", result.skipped_traces);
  m.write(dir);
  std::cout << result.checkpoint.kind() << ": best val " << result.checkpoint.best_val_loss << " at epoch "
            << result.checkpoint.epoch << "\n";
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string checkpoint;
  std::string corpus;
  double temperature = 0.5;
  int n_max = 100;
};

void cmd_generate(const GenerateArgs& a, const Common& c, const CLI::App* sub) {
  Manifest m("generate", sub, c);
  m.input("checkpoint", a.checkpoint);
  m.input("corpus", a.corpus);
  const auto ckpt = load_checkpoint(a.checkpoint);
  const auto refs = read_traces(a.corpus);

  std::vector<Trace> out;
  std::size_t fallbacks = 0, skipped = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    FrameSequence fs;
    try {
      fs = encode(refs[i], ckpt.quantizer);
    } catch (const InvalidArgument& e) {
      std::cerr << "skipped: " << e.what() << "\n";
      ++skipped;
      continue;
    }
    SamplerConfig sc;
    sc.temperature = a.temperature;
    sc.n_max = a.n_max;
    sc.seed = mix_seed(c.seed, i);
    bool fallback = false;
    auto t = decode(reconstruct_letter(ckpt, fs, sc, &fallback), ckpt.quantizer);
    t.style = refs[i].style;
    fallbacks += fallback;
    out.push_back(std::move(t));
  }
  const auto dir = prepare_out(c);
  save_traces(dir / "generated.jsonl", out);
  m.output("generated", dir / "generated.jsonl");
  m.note("n_generated", out.size());
  m.note("n_skipped", skipped);
  m.note("n_mean_writer_fallbacks", fallbacks);
  m.write(dir);
  std::cout << "generated " << out.size() << " traces";
  if (fallbacks) std::cout << " (" << fallbacks << " used the mean writer embedding)";
  std::cout << "\n";
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string reference;
  std::string generated;
  std::string checkpoint;
  double v_max = 0.0;
  bool per_letter = false;
};

using PairKey = std::pair<std::string, char>;

std::string describe(const PairKey& k) { return k.first + "/" + k.second; }

void cmd_eval(const EvalArgs& a, const Common& c, const CLI::App* sub) {
  Manifest m("eval", sub, c);
  m.input("reference", a.reference);
  m.input("generated", a.generated);
  const auto refs = read_traces(a.reference);
  const auto gens = read_traces(a.generated);
  if (gens.empty()) throw DataMismatch("generated corpus " + a.generated + " is empty");
  if (refs.empty()) throw DataMismatch("reference corpus " + a.reference + " is empty");

  QuantizerConfig q;
  if (!a.checkpoint.empty()) {
    m.input("checkpoint", a.checkpoint);
    q = load_checkpoint(a.checkpoint).quantizer;
  } else if (a.v_max > 0.0) {
    q.v_max = a.v_max;
  } else {
    q = calibrate_quantizer(refs);
  }

  std::map<PairKey, const Trace*> by_key;
  for (const auto& t : refs) by_key[{t.writer_id, t.letter}] = &t;
  std::vector<FrameSequence> ref_fs, gen_fs;
  std::vector<std::string> orphans;
  std::map<PairKey, bool> used;
  for (const auto& g : gens) {
    const PairKey k{g.writer_id, g.letter};
    const auto it = by_key.find(k);
    if (it == by_key.end()) {
      orphans.push_back("generated " + describe(k));
      continue;
    }
    used[k] = true;
    ref_fs.push_back(encode(*it->second, q));
    gen_fs.push_back(encode(g, q));
  }
  for (const auto& [k, t] : by_key) {
    if (!used.count(k)) orphans.push_back("reference " + describe(k));
  }
  if (!orphans.empty()) {
    std::string msg = "unpaired sequences:";
    for (const auto& o : orphans) msg += "\n  " + o;
    throw DataMismatch(msg);
  }

  const auto report = evaluate(ref_fs, gen_fs, a.per_letter);
  const auto dir = prepare_out(c);
  write_file(dir / "report.json", report.to_json().dump(2) + "\n");
  const auto table = report.table(a.checkpoint.empty() ? "model" : fs::path(a.checkpoint).stem().string());
  write_file(dir / "report.txt", table);
  m.output("report", dir / "report.json");
  m.output("table", dir / "report.txt");
  m.note("quantizer", q.to_json());
  m.write(dir);
  std::cout << table;
}

// ---------------------------------------------------------------- latent

struct LatentArgs {
  std::string checkpoint;
  std::string corpus;
  std::string letters;
  std::string label_key = "rotation";
};

void cmd_latent(const LatentArgs& a, const Common& c, const CLI::App* sub) {
  Manifest m("latent", sub, c);
  m.input("checkpoint", a.checkpoint);
  m.input("corpus", a.corpus);
  const auto ckpt = load_checkpoint(a.checkpoint);
  const auto traces = read_traces(a.corpus);
  const auto table = extract_latents(ckpt, traces, a.letters, a.label_key);
  const auto proj = pca_project(table);
  const auto labels = table.labels();

  const auto dir = prepare_out(c);
  std::ostringstream csv;
  write_latent_csv(csv, table, proj);
  write_file(dir / "latent.csv", csv.str());
  write_file(dir / "latent.svg", scatter_svg(proj.coords, labels, "style vectors, first two principal components"));
  m.output("csv", dir / "latent.csv");
  m.output("svg", dir / "latent.svg");
  m.note("explained", proj.explained);

  std::cout << "latents: " << table.rows.size() << "  explained: " << proj.explained[0] << ", "
            << proj.explained[1] << "\n";
  std::set<std::string> classes(labels.begin(), labels.end());
  if (classes.size() >= 2 && classes.size() <= 8) {
    const double score = separation_score(proj, labels, static_cast<int>(classes.size()));
    m.note("separation", score);
    std::cout << "separation: " << score << "\n";
  } else {
    std::cout << "separation: n/a (" << classes.size() << " label classes)\n";
  }
  m.write(dir);
}

// ---------------------------------------------------------------- plot

struct PlotArgs {
  std::string corpus;
  int columns = 8;
  std::size_t limit = 64;
};

void cmd_plot(const PlotArgs& a, const Common& c, const CLI::App* sub) {
  Manifest m("plot", sub, c);
  m.input("corpus", a.corpus);
  auto traces = read_traces(a.corpus);
  if (traces.empty()) throw DataMismatch("corpus " + a.corpus + " has no traces");
  if (traces.size() > a.limit) traces.resize(a.limit);
  const auto dir = prepare_out(c);
  write_file(dir / "traces.svg", traces_svg(traces, a.columns));
  m.output("svg", dir / "traces.svg");
  m.write(dir);
  std::cout << "plotted " << traces.size() << " traces\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Handwriting style autoencoder toolkit"};
  app.set_version_flag("--version", HWSTYLE_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Common common;

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic trace corpus");
  s->add_option("--letters", synth.letters, "Letters to draw")->check([](const std::string& v) {
    if (v.empty()) return std::string("empty letter set");
    for (char ch : v) {
      if (!has_template(ch)) return std::string("no template for letter '") + ch + "' (have " + template_letters() + ")";
    }
    return std::string();
  });
  s->add_option("--writers", synth.writers, "Number of writers")->check(CLI::PositiveNumber);
  s->add_option("--styles", synth.styles, "Style factors that vary by writer: rotation, tempo, corner, flourish")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  s->add_option("--jitter", synth.jitter, "Per-point noise as a fraction of letter size")
      ->check(CLI::Range(0.0, kMaxSafeJitter));
  add_common(s, common);

  IngestArgs ingest;
  auto* in = app.add_subcommand("ingest", "Validate and clean a trace file");
  in->add_option("--input", ingest.input, "Line-delimited trace file")->required();
  in->add_option("--max-duration-s", ingest.clean.max_duration_s);
  in->add_option("--max-points", ingest.clean.max_points);
  in->add_option("--min-stroke-fraction", ingest.clean.min_stroke_fraction);
  in->add_option("--stroke-gap-periods", ingest.clean.stroke_gap_periods);
  add_common(in, common);

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the style autoencoder or the letter+writer baseline");
  t->add_option("--corpus", tr.corpus, "Trace file; cleaned and split by writer")->required();
  t->add_flag("--baseline", tr.baseline, "Train the letter+writer bias baseline");
  t->add_option("--hidden", tr.cfg.model.hidden);
  t->add_option("--encoder-layers", tr.cfg.model.encoder_layers);
  t->add_option("--decoder-layers", tr.cfg.model.decoder_layers);
  t->add_option("--bias-dim", tr.cfg.model.bias_dim);
  t->add_option("--encoder-dropout", tr.cfg.model.encoder_dropout);
  t->add_option("--decoder-dropout", tr.cfg.model.decoder_dropout);
  t->add_option("--writer-dim", tr.cfg.model.writer_dim);
  t->add_option("--letter-dim", tr.cfg.model.letter_dim);
  t->add_option("--lr", tr.cfg.lr);
  t->add_option("--patience", tr.cfg.patience);
  t->add_option("--batch-size", tr.cfg.batch_size);
  t->add_option("--max-epochs", tr.cfg.max_epochs);
  t->add_option("--clip-norm", tr.cfg.clip_norm);
  t->add_option("--v-max", tr.cfg.v_max, "Fixed speed ceiling; 0 calibrates on the train split");
  t->add_option("--n-transfer", tr.n_transfer, "Writers held out for transfer");
  t->add_option("--val-fraction", tr.val_fraction);
  add_common(t, common);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Regenerate every trace of a corpus from its style");
  g->add_option("--checkpoint", gen.checkpoint)->required();
  g->add_option("--corpus", gen.corpus, "Traces to regenerate")->required();
  g->add_option("--temperature", gen.temperature)->check(CLI::PositiveNumber);
  g->add_option("--n-max", gen.n_max)->check(CLI::PositiveNumber);
  add_common(g, common);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score generated traces against references");
  e->add_option("--reference", ev.reference)->required();
  e->add_option("--generated", ev.generated)->required();
  e->add_option("--checkpoint", ev.checkpoint, "Take the quantizer from this checkpoint");
  e->add_option("--v-max", ev.v_max, "Speed ceiling when no checkpoint is given; 0 calibrates on the references");
  e->add_flag("--per-letter", ev.per_letter);
  add_common(e, common);

  LatentArgs lat;
  auto* l = app.add_subcommand("latent", "Export and project style vectors");
  l->add_option("--checkpoint", lat.checkpoint)->required();
  l->add_option("--corpus", lat.corpus)->required();
  l->add_option("--letters", lat.letters, "Letter filter; empty keeps all");
  l->add_option("--label-key", lat.label_key, "Style annotation used as the label");
  add_common(l, common);

  PlotArgs plot;
  auto* p = app.add_subcommand("plot", "Draw traces as an SVG grid");
  p->add_option("--corpus", plot.corpus)->required();
  p->add_option("--columns", plot.columns)->check(CLI::PositiveNumber);
  p->add_option("--limit", plot.limit)->check(CLI::PositiveNumber);
  add_common(p, common);

  try {
    app.parse(argc, argv);
    if (!common.config.empty()) {
      // Re-parse with the config keys in front; CLI11 takes arguments reversed.
      std::vector<std::string> args{app.get_subcommands().front()->get_name()};
      for (auto& a : config_args(common.config)) args.push_back(std::move(a));
      for (int i = 2; i < argc; ++i) args.emplace_back(argv[i]);
      std::reverse(args.begin(), args.end());
      app.clear();
      app.parse(args);
    }
  } catch (const CLI::Success& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return 2;
  }

  if (s->parsed()) cmd_synth(synth, common, s);
  else if (in->parsed()) cmd_ingest(ingest, common, in);
  else if (t->parsed()) cmd_train(tr, common, t);
  else if (g->parsed()) cmd_generate(gen, common, g);
  else if (e->parsed()) cmd_eval(ev, common, e);
  else if (l->parsed()) cmd_latent(lat, common, l);
  else if (p->parsed()) cmd_plot(plot, common, p);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const DataMismatch& e) {
    std::cerr << "data mismatch: " << e.what() << "\n";
    return 4;
  } catch (const json::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
