#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "hwstyle/codec.hpp"
#include "hwstyle/nn/tensor.hpp"
#include "hwstyle/rng.hpp"
#include "hwstyle/synth.hpp"
#include "hwstyle/trace.hpp"

namespace hwstyle::testing {

inline double rel_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / scale;
}

struct GradCheck {
  double worst = 0.0;
  std::string where;
  std::size_t checked = 0;
};

// Central differences over every scalar of every parameter (or every
// `stride`-th one) against the analytic gradients.
inline GradCheck finite_difference_check(nn::ParameterStore& store, const nn::Gradients& analytic,
                                         const std::function<double()>& loss, double step = 1e-4,
                                         Eigen::Index stride = 1) {
  GradCheck out;
  for (std::size_t p = 0; p < store.size(); ++p) {
    auto& value = store[p].value;
    for (Eigen::Index i = 0; i < value.size(); i += stride) {
      const double orig = value.data()[i];
      value.data()[i] = orig + step;
      const double up = loss();
      value.data()[i] = orig - step;
      const double down = loss();
      value.data()[i] = orig;
      const double fd = (up - down) / (2.0 * step);
      const double err = rel_error(analytic[p].data()[i], fd);
      ++out.checked;
      if (err > out.worst) {
        out.worst = err;
        out.where = store[p].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return out;
}

inline nn::Tensor2 random_tensor(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  nn::Tensor2 t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = scale * normal(rng);
  return t;
}

inline std::vector<Trace> tiny_x_corpus(std::size_t writers, std::uint64_t seed = 1, bool vary_tempo = false,
                                        double jitter = 0.002) {
  SynthCorpusConfig sc;
  sc.letters = "X";
  sc.writers = writers;
  sc.seed = seed;
  sc.vary_tempo = vary_tempo;
  sc.jitter = jitter;
  return synth_corpus(sc);
}

inline Corpus split_corpus(const std::vector<Trace>& traces, std::size_t n_transfer, std::uint64_t seed) {
  Corpus c;
  for (const auto& t : traces) c.add(t);
  return split_writers(clean(c), {n_transfer, 0.1, seed});
}

inline FrameSequence make_sequence(std::vector<Frame> frames, char letter = 'X') {
  FrameSequence fs;
  fs.letter = letter;
  fs.writer_id = "w";
  fs.frames = std::move(frames);
  return fs;
}

inline FrameSequence random_sequence(Rng& rng, std::size_t T, int n_levels = 16) {
  std::vector<Frame> frames(T);
  for (auto& f : frames) {
    f.dir = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n_levels)));
    f.speed = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n_levels)));
  }
  return make_sequence(std::move(frames), static_cast<char>('A' + uniform_index(rng, 26)));
}

}  // namespace hwstyle::testing
