#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hwstyle/trace.hpp"

namespace hwstyle {

enum class Rotation { clockwise, anticlockwise };
std::string_view to_string(Rotation r);

/// Style factors for one synthetic letter drawing.
struct SynthStyleSpec {
  char letter = 'X';
  Rotation rotation = Rotation::clockwise;
  double tempo = 1.0;   // > 0; 2.0 draws the letter in half the time
  double jitter = 0.0;  // std-dev of coordinate noise, letter box is ~1 unit
  int start_corner = 0; // 0..3, which stroke / loop position is drawn first
  bool flourish = false;
  std::uint64_t seed = 0;
  double sample_rate_hz = 100.0;
};

// Jitter up to this bound keeps every synthetic trace encodable (no
// coincident points); larger values are accepted but not guaranteed.
inline constexpr double kMaxSafeJitter = 0.05;

bool has_template(char letter);
std::string template_letters();  // "ACHOSX"

/// Deterministic in spec.seed. Anticlockwise output is the exact reversed
/// traversal of the clockwise one (before jitter). Throws InvalidArgument for
/// letters without a template or non-positive tempo.
Trace synth_trace(const SynthStyleSpec& spec, std::string writer_id = "synth");

struct SynthCorpusConfig {
  std::string letters = "X";
  std::size_t writers = 40;
  bool vary_rotation = true;
  bool vary_tempo = false;  // tempo drawn per writer from {0.8, 1.0, 1.25}
  bool vary_corner = false;
  bool vary_flourish = false;
  double jitter = 0.002;
  std::uint64_t seed = 0;
};

/// One trace per (writer, letter). Style factors are fixed per writer and
/// recorded in Trace::style. Rotation alternates by writer index so both
/// classes are balanced.
std::vector<Trace> synth_corpus(const SynthCorpusConfig& cfg);

}  // namespace hwstyle
