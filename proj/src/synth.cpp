#include "hwstyle/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "hwstyle/error.hpp"
#include "hwstyle/rng.hpp"

namespace hwstyle {
namespace {

struct Vec2 {
  double x, y;
};

Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }

using Stroke = std::vector<Vec2>;

struct LetterTemplate {
  std::vector<Stroke> strokes;  // control points, base ("clockwise") order
  bool closed = false;          // single closed loop (O)
};

constexpr double kSecondsPerUnit = 0.22;
constexpr double kPenUpSeconds = 0.08;
constexpr double kLinearShare = 0.5;  // rest of the timing is minimum-jerk
constexpr int kDenseSamplesPerSegment = 48;

Stroke arc(Vec2 c, double r, double from_deg, double to_deg, int n) {
  Stroke s;
  for (int i = 0; i <= n; ++i) {
    const double a = (from_deg + (to_deg - from_deg) * i / n) * std::numbers::pi / 180.0;
    s.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
  }
  return s;
}

LetterTemplate letter_template(char letter) {
  switch (letter) {
    case 'X':
      // Entry hook on the first stroke only: relative turn codes of a
      // straight stroke do not change under reversal, the hook's do.
      return {{{{0.06, 0.78}, {0.09, 0.93}, {0.19, 0.90}, {0.53, 0.52}, {0.85, 0.08}},
               {{0.80, 0.80}, {0.50, 0.49}, {0.25, 0.22}}}};
    case 'C':
      return {{arc({0.55, 0.5}, 0.4, 50.0, 310.0, 13)}};
    case 'O': {
      Stroke loop = arc({0.5, 0.5}, 0.4, 90.0, -270.0, 12);
      loop.pop_back();  // closure handled by `closed`
      return {{loop}, true};
    }
    case 'A':
      return {{{{0.10, 0.10}, {0.50, 0.90}, {0.90, 0.10}},
               {{0.30, 0.42}, {0.70, 0.42}}}};
    case 'S':
      return {{{{0.80, 0.80}, {0.50, 0.92}, {0.20, 0.75}, {0.35, 0.55},
                {0.65, 0.45}, {0.80, 0.25}, {0.50, 0.08}, {0.20, 0.20}}}};
    case 'H':
      return {{{{0.15, 0.90}, {0.15, 0.10}},
               {{0.85, 0.90}, {0.85, 0.10}},
               {{0.15, 0.50}, {0.85, 0.50}}}};
    default:
      throw InvalidArgument(std::string("no stroke template for letter '") + letter + "'");
  }
}

Vec2 catmull_rom(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 p3, double u) {
  const double u2 = u * u, u3 = u2 * u;
  return 0.5 * ((2.0 * p1) + u * (p2 - p0) + u2 * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) +
                u3 * (3.0 * p1 - p0 - 3.0 * p2 + p3));
}

// Dense polyline through the control points.
Stroke smooth(const Stroke& ctrl, bool closed) {
  const std::size_t n = ctrl.size();
  if (n < 2) return ctrl;
  auto at = [&](std::ptrdiff_t i) -> Vec2 {
    if (closed) return ctrl[static_cast<std::size_t>((i % static_cast<std::ptrdiff_t>(n) + n) % n)];
    if (i < 0) return 2.0 * ctrl[0] - ctrl[1];
    if (i >= static_cast<std::ptrdiff_t>(n)) return 2.0 * ctrl[n - 1] - ctrl[n - 2];
    return ctrl[static_cast<std::size_t>(i)];
  };
  const std::size_t segments = closed ? n : n - 1;
  Stroke dense;
  for (std::size_t s = 0; s < segments; ++s) {
    const auto i = static_cast<std::ptrdiff_t>(s);
    for (int k = 0; k < kDenseSamplesPerSegment; ++k) {
      dense.push_back(catmull_rom(at(i - 1), at(i), at(i + 1), at(i + 2),
                                  static_cast<double>(k) / kDenseSamplesPerSegment));
    }
  }
  dense.push_back(closed ? ctrl[0] : ctrl[n - 1]);
  return dense;
}

std::vector<double> cumulative_length(const Stroke& s) {
  std::vector<double> cum(s.size(), 0.0);
  for (std::size_t i = 1; i < s.size(); ++i) {
    cum[i] = cum[i - 1] + std::hypot(s[i].x - s[i - 1].x, s[i].y - s[i - 1].y);
  }
  return cum;
}

Vec2 point_at_length(const Stroke& s, const std::vector<double>& cum, double target) {
  if (target <= 0.0) return s.front();
  if (target >= cum.back()) return s.back();
  const auto it = std::upper_bound(cum.begin(), cum.end(), target);
  const auto hi = static_cast<std::size_t>(it - cum.begin());
  const std::size_t lo = hi - 1;
  const double span = cum[hi] - cum[lo];
  const double u = span > 0.0 ? (target - cum[lo]) / span : 0.0;
  return s[lo] + u * (s[hi] - s[lo]);
}

// Symmetric in time (progress(1 - u) == 1 - progress(u)), so reversing a
// sampled stroke gives the same points as sampling the reversed stroke.
double progress(double u) {
  const double min_jerk = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
  return kLinearShare * u + (1.0 - kLinearShare) * min_jerk;
}

void apply_flourish(LetterTemplate& tpl) {
  Stroke& first = tpl.strokes.front();
  const Vec2 p = first.front();
  Stroke curl = {p + Vec2{-0.08, 0.06}, p + Vec2{-0.11, -0.02}, p + Vec2{-0.03, -0.06}};
  if (tpl.closed) {
    // Open the loop so the curl leads into it.
    first.push_back(p);
    tpl.closed = false;
  }
  first.insert(first.begin(), curl.begin(), curl.end());
}

void apply_start_corner(LetterTemplate& tpl, int corner) {
  corner = ((corner % 4) + 4) % 4;
  if (corner == 0) return;
  if (tpl.strokes.size() > 1) {
    const auto k = static_cast<std::size_t>(corner) % tpl.strokes.size();
    std::rotate(tpl.strokes.begin(), tpl.strokes.begin() + static_cast<std::ptrdiff_t>(k), tpl.strokes.end());
  } else if (tpl.closed) {
    Stroke& loop = tpl.strokes.front();
    const auto k = static_cast<std::size_t>(corner) * loop.size() / 4;
    std::rotate(loop.begin(), loop.begin() + static_cast<std::ptrdiff_t>(k), loop.end());
  }
  // Single open strokes have one natural entry point; nothing to change.
}

}  // namespace

std::string_view to_string(Rotation r) {
  return r == Rotation::clockwise ? "clockwise" : "anticlockwise";
}

bool has_template(char letter) {
  return template_letters().find(letter) != std::string::npos;
}

std::string template_letters() { return "ACHOSX"; }

Trace synth_trace(const SynthStyleSpec& spec, std::string writer_id) {
  if (!(spec.tempo > 0.0)) throw InvalidArgument("tempo must be positive");
  if (!(spec.jitter >= 0.0)) throw InvalidArgument("jitter must be non-negative");
  if (!(spec.sample_rate_hz > 0.0)) throw InvalidArgument("sample_rate_hz must be positive");

  LetterTemplate tpl = letter_template(spec.letter);
  apply_start_corner(tpl, spec.start_corner);
  if (spec.flourish) apply_flourish(tpl);

  std::vector<Stroke> dense;
  std::vector<std::vector<double>> cums;
  double total_length = 0.0;
  for (const auto& s : tpl.strokes) {
    dense.push_back(smooth(s, tpl.closed));
    cums.push_back(cumulative_length(dense.back()));
    total_length += cums.back().back();
  }

  const double writing_time = kSecondsPerUnit * total_length / spec.tempo;
  std::vector<std::vector<Vec2>> sampled;
  for (std::size_t s = 0; s < dense.size(); ++s) {
    const double len = cums[s].back();
    const double stroke_time = writing_time * len / total_length;
    const auto steps = std::max<long>(2, std::lround(stroke_time * spec.sample_rate_hz));
    std::vector<Vec2> pts;
    for (long k = 0; k <= steps; ++k) {
      pts.push_back(point_at_length(dense[s], cums[s], len * progress(static_cast<double>(k) / steps)));
    }
    sampled.push_back(std::move(pts));
  }

  if (spec.rotation == Rotation::anticlockwise) {
    std::reverse(sampled.begin(), sampled.end());
    for (auto& s : sampled) std::reverse(s.begin(), s.end());
  }

  Rng rng(mix_seed(spec.seed, 0x7e1));
  const double period = 1.0 / spec.sample_rate_hz;
  const auto gap_steps = std::max<long>(2, std::lround(kPenUpSeconds / spec.tempo * spec.sample_rate_hz));

  Trace t;
  t.writer_id = std::move(writer_id);
  t.letter = spec.letter;
  t.sample_rate_hz = spec.sample_rate_hz;
  long tick = 0;
  for (std::size_t s = 0; s < sampled.size(); ++s) {
    if (s > 0) tick += gap_steps;
    for (const auto& p : sampled[s]) {
      const double nx = spec.jitter > 0.0 ? spec.jitter * normal(rng) : 0.0;
      const double ny = spec.jitter > 0.0 ? spec.jitter * normal(rng) : 0.0;
      t.points.push_back({p.x + nx, p.y + ny, static_cast<double>(tick) * period});
      ++tick;
    }
  }

  char tempo_buf[32];
  std::snprintf(tempo_buf, sizeof tempo_buf, "%g", spec.tempo);
  t.style = {{"rotation", std::string(to_string(spec.rotation))},
             {"tempo", tempo_buf},
             {"start_corner", std::to_string(spec.start_corner)},
             {"flourish", spec.flourish ? "true" : "false"}};
  return t;
}

std::vector<Trace> synth_corpus(const SynthCorpusConfig& cfg) {
  for (char c : cfg.letters) {
    if (!has_template(c)) throw InvalidArgument(std::string("no stroke template for letter '") + c + "'");
  }
  constexpr std::array<double, 3> kTempos = {0.8, 1.0, 1.25};
  std::vector<Trace> out;
  for (std::size_t w = 0; w < cfg.writers; ++w) {
    Rng rng(mix_seed(cfg.seed, w));
    SynthStyleSpec spec;
    spec.jitter = cfg.jitter;
    spec.rotation = (cfg.vary_rotation && w % 2 == 1) ? Rotation::anticlockwise : Rotation::clockwise;
    spec.tempo = cfg.vary_tempo ? kTempos[uniform_index(rng, kTempos.size())] : 1.0;
    spec.start_corner = cfg.vary_corner ? static_cast<int>(uniform_index(rng, 4)) : 0;
    spec.flourish = cfg.vary_flourish && uniform01(rng) < 0.5;

    char id[16];
    std::snprintf(id, sizeof id, "w%03zu", w);
    for (char c : cfg.letters) {
      spec.letter = c;
      spec.seed = mix_seed(cfg.seed ^ 0xa5a5a5a5ULL, w * 64 + static_cast<std::size_t>(c));
      out.push_back(synth_trace(spec, id));
    }
  }
  return out;
}

}  // namespace hwstyle
