#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hwstyle/checkpoint.hpp"
#include "hwstyle/error.hpp"
#include "hwstyle/eval.hpp"
#include "hwstyle/latent.hpp"
#include "hwstyle/sampler.hpp"
#include "hwstyle/synth.hpp"
#include "hwstyle/trainer.hpp"

namespace py = pybind11;
using namespace hwstyle;

namespace {

Eigen::MatrixX3d points_of(const Trace& t) {
  Eigen::MatrixX3d m(static_cast<Eigen::Index>(t.points.size()), 3);
  for (std::size_t i = 0; i < t.points.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    m(r, 0) = t.points[i].x;
    m(r, 1) = t.points[i].y;
    m(r, 2) = t.points[i].t;
  }
  return m;
}

void set_points(Trace& t, const Eigen::MatrixXd& m) {
  if (m.cols() != 3) throw InvalidArgument("points must be an (n, 3) array of x, y, t");
  t.points.clear();
  for (Eigen::Index i = 0; i < m.rows(); ++i) t.points.push_back({m(i, 0), m(i, 1), m(i, 2)});
}

char letter_of(const std::string& s) {
  if (s.size() != 1) throw InvalidArgument("letter must be a single character");
  return s[0];
}

Corpus split(const std::vector<Trace>& traces, std::size_t n_transfer, double val_fraction, std::uint64_t seed) {
  Corpus c;
  for (const auto& t : traces) c.add(t);
  return split_writers(clean(c), {n_transfer, val_fraction, seed});
}

}  // namespace

PYBIND11_MODULE(_hwstyle, m) {
  m.doc() = "Handwriting style autoencoder: traces, codec, training, sampling and evaluation";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<DataMismatch>(m, "DataMismatch", base.ptr());

  py::class_<Trace>(m, "Trace")
      .def(py::init<>())
      .def_readwrite("writer_id", &Trace::writer_id)
      .def_property(
          "letter", [](const Trace& t) { return std::string(1, t.letter); },
          [](Trace& t, const std::string& s) { t.letter = letter_of(s); })
      .def_readwrite("sample_rate_hz", &Trace::sample_rate_hz)
      .def_readwrite("style", &Trace::style)
      .def_property("points", &points_of, &set_points, "(n, 3) array of x, y, t")
      .def("validate", &Trace::validate)
      .def("__len__", [](const Trace& t) { return t.points.size(); })
      .def("__repr__", [](const Trace& t) {
        return "<Trace " + t.writer_id + "/" + t.letter + " " + std::to_string(t.points.size()) + " points>";
      });

  m.def(
      "synth_corpus",
      [](const std::string& letters, std::size_t writers, const std::vector<std::string>& styles, double jitter,
         std::uint64_t seed) {
        SynthCorpusConfig cfg;
        cfg.letters = letters;
        cfg.writers = writers;
        cfg.jitter = jitter;
        cfg.seed = seed;
        cfg.vary_rotation = false;
        for (const auto& s : styles) {
          if (s == "rotation") cfg.vary_rotation = true;
          else if (s == "tempo") cfg.vary_tempo = true;
          else if (s == "corner") cfg.vary_corner = true;
          else if (s == "flourish") cfg.vary_flourish = true;
          else throw InvalidArgument("unknown style '" + s + "'");
        }
        return synth_corpus(cfg);
      },
      py::arg("letters") = "X", py::arg("writers") = 40, py::arg("styles") = std::vector<std::string>{"rotation"},
      py::arg("jitter") = 0.002, py::arg("seed") = 0);

  m.def("load_traces", [](const std::filesystem::path& p) { return load_corpus(p).corpus.traces; }, py::arg("path"));
  m.def("save_traces", &save_traces, py::arg("path"), py::arg("traces"));

  py::class_<QuantizerConfig>(m, "Quantizer")
      .def(py::init<>())
      .def_readwrite("n_levels", &QuantizerConfig::n_levels)
      .def_readwrite("v_max", &QuantizerConfig::v_max);
  m.def(
      "calibrate_quantizer", [](const std::vector<Trace>& traces) { return calibrate_quantizer(traces); },
      py::arg("traces"));

  py::class_<FrameSequence>(m, "FrameSequence")
      .def_readonly("writer_id", &FrameSequence::writer_id)
      .def_property_readonly("letter", [](const FrameSequence& f) { return std::string(1, f.letter); })
      .def_property_readonly("dir_codes", &FrameSequence::dir_codes)
      .def_property_readonly("speed_codes", &FrameSequence::speed_codes)
      .def("__len__", &FrameSequence::size);
  m.def("encode", &encode, py::arg("trace"), py::arg("quantizer"));
  m.def("decode", &decode, py::arg("frames"), py::arg("quantizer"));

  py::class_<Checkpoint>(m, "Checkpoint")
      .def_property_readonly("kind", [](const Checkpoint& c) { return std::string(c.kind()); })
      .def_readonly("epoch", &Checkpoint::epoch)
      .def_readonly("best_val_loss", &Checkpoint::best_val_loss)
      .def_readonly("quantizer", &Checkpoint::quantizer)
      .def("save", [](const Checkpoint& c, const std::filesystem::path& p) { save_checkpoint(p, c); })
      .def("to_bytes", [](const Checkpoint& c) { return py::bytes(serialize_checkpoint(c)); });
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  m.def(
      "train",
      [](const std::vector<Trace>& traces, bool baseline, std::size_t n_transfer, double val_fraction, int hidden,
         int bias_dim, int max_epochs, int batch_size, double lr, int patience, std::uint64_t seed) {
        const auto corpus = split(traces, n_transfer, val_fraction, seed);
        TrainConfig cfg;
        cfg.model.hidden = hidden;
        cfg.model.bias_dim = bias_dim;
        cfg.max_epochs = max_epochs;
        cfg.batch_size = batch_size;
        cfg.lr = lr;
        cfg.patience = patience;
        cfg.seed = seed;
        auto r = [&] {
          py::gil_scoped_release release;
          return baseline ? train_baseline(corpus, cfg) : train(corpus, cfg);
        }();
        std::vector<double> val;
        for (const auto& e : r.history) val.push_back(e.val_loss);
        return py::make_tuple(std::move(r.checkpoint), val, corpus.select(Split::transfer));
      },
      py::arg("traces"), py::arg("baseline") = false, py::arg("n_transfer") = 0, py::arg("val_fraction") = 0.1,
      py::arg("hidden") = 128, py::arg("bias_dim") = 32, py::arg("max_epochs") = 500, py::arg("batch_size") = 32,
      py::arg("lr") = 0.001, py::arg("patience") = 20, py::arg("seed") = 0,
      "Cleans and splits `traces` by writer, trains, and returns (checkpoint, val losses, held-out traces).");

  m.def(
      "encode_style",
      [](const Checkpoint& c, const Trace& t) {
        if (!c.is_autoencoder()) throw InvalidArgument("encode_style needs an autoencoder checkpoint");
        return std::get<StyleAutoencoder>(c.model).encode_style(encode(t, c.quantizer)).values;
      },
      py::arg("checkpoint"), py::arg("trace"));

  m.def(
      "reconstruct",
      [](const Checkpoint& c, const Trace& t, double temperature, int n_max, std::uint64_t seed) {
        SamplerConfig sc;
        sc.temperature = temperature;
        sc.n_max = n_max;
        sc.seed = seed;
        auto out = decode(reconstruct_letter(c, encode(t, c.quantizer), sc), c.quantizer);
        out.style = t.style;
        return out;
      },
      py::arg("checkpoint"), py::arg("trace"), py::arg("temperature") = 0.5, py::arg("n_max") = 100,
      py::arg("seed") = 0);

  m.def(
      "bleu",
      [](const std::vector<CodeSeq>& refs, const std::vector<CodeSeq>& cands, int max_n) {
        return bleu_score(refs, cands, max_n).percent();
      },
      py::arg("references"), py::arg("candidates"), py::arg("max_n") = 3, "Corpus BLEU-N in percent.");
  m.def(
      "ngram_precision",
      [](const std::vector<CodeSeq>& refs, const std::vector<CodeSeq>& cands, int n) {
        const auto p = bleu(refs, cands, n);
        return py::make_tuple(p.clipped, p.total);
      },
      py::arg("references"), py::arg("candidates"), py::arg("n"));
  m.def(
      "eos_pearson",
      [](const std::vector<int>& gen, const std::vector<int>& ref) { return eos_pearson(gen, ref); },
      py::arg("generated_lengths"), py::arg("reference_lengths"));
  m.def(
      "evaluate",
      [](const std::vector<Trace>& refs, const std::vector<Trace>& gens, const QuantizerConfig& q) {
        std::vector<FrameSequence> r, g;
        for (const auto& t : refs) r.push_back(encode(t, q));
        for (const auto& t : gens) g.push_back(encode(t, q));
        return evaluate(r, g).to_json().dump();
      },
      py::arg("references"), py::arg("generated"), py::arg("quantizer"),
      "Scores index-paired traces; returns the report as a JSON string.");

  m.def(
      "pca_project",
      [](const Eigen::MatrixXd& data) {
        const auto p = pca_project(data);
        Eigen::MatrixX2d coords(static_cast<Eigen::Index>(p.coords.size()), 2);
        for (std::size_t i = 0; i < p.coords.size(); ++i) {
          coords(static_cast<Eigen::Index>(i), 0) = p.coords[i][0];
          coords(static_cast<Eigen::Index>(i), 1) = p.coords[i][1];
        }
        return py::make_tuple(coords, p.explained);
      },
      py::arg("data"), "Returns (n x 2 coordinates, explained variance fractions).");
  m.def(
      "separation_score",
      [](const Eigen::MatrixXd& coords, const std::vector<std::string>& labels) {
        if (coords.cols() != 2) throw InvalidArgument("coords must be (n, 2)");
        Projection2D p;
        for (Eigen::Index i = 0; i < coords.rows(); ++i) p.coords.push_back({coords(i, 0), coords(i, 1)});
        return separation_score(p, labels);
      },
      py::arg("coords"), py::arg("labels"));

  m.attr("__version__") = HWSTYLE_VERSION;
}
