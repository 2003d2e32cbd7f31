#include "hwstyle/codec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hwstyle/error.hpp"

namespace hwstyle {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double heading(const Point& a, const Point& b) { return std::atan2(b.y - a.y, b.x - a.x); }
double distance(const Point& a, const Point& b) { return std::hypot(b.x - a.x, b.y - a.y); }

std::vector<Point> merge_duplicates(const std::vector<Point>& pts) {
  std::vector<Point> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    if (!out.empty() && out.back().x == p.x && out.back().y == p.y) continue;
    out.push_back(p);
  }
  return out;
}

}  // namespace

void QuantizerConfig::validate() const {
  if (n_levels < 2) throw InvalidArgument("n_levels must be >= 2");
  if (!(v_max > 0.0) || !std::isfinite(v_max)) throw InvalidArgument("v_max must be positive");
}

nlohmann::json QuantizerConfig::to_json() const { return {{"n_levels", n_levels}, {"v_max", v_max}}; }

QuantizerConfig QuantizerConfig::from_json(const nlohmann::json& j) {
  QuantizerConfig q;
  q.n_levels = j.at("n_levels").get<int>();
  q.v_max = j.at("v_max").get<double>();
  q.validate();
  return q;
}

std::vector<int> FrameSequence::dir_codes() const {
  std::vector<int> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.dir);
  return out;
}

std::vector<int> FrameSequence::speed_codes() const {
  std::vector<int> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.speed);
  return out;
}

void FrameSequence::validate(int n_levels, std::size_t max_frames) const {
  if (!is_letter(letter)) throw InvalidArgument(std::string("letter must be A-Z, got '") + letter + "'");
  if (frames.empty()) throw InvalidArgument("frame sequence is empty");
  if (frames.size() > max_frames) {
    throw InvalidArgument("frame sequence too long: " + std::to_string(frames.size()));
  }
  for (const auto& f : frames) {
    if (f.dir < 0 || f.dir >= n_levels || f.speed < 0 || f.speed >= n_levels) {
      throw InvalidArgument("frame code out of range");
    }
  }
  if (!(initial_heading >= 0.0 && initial_heading < kTwoPi)) {
    throw InvalidArgument("initial_heading outside [0, 2pi)");
  }
}

double wrap_angle(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  // fmod of a tiny negative can round up to exactly 2pi.
  if (w >= kTwoPi) w = 0.0;
  return w;
}

int direction_change_code(const Point& p0, const Point& p1, const Point& p2, int n_levels) {
  if (n_levels < 2) throw InvalidArgument("n_levels must be >= 2");
  if ((p0.x == p1.x && p0.y == p1.y) || (p1.x == p2.x && p1.y == p2.y)) {
    throw InvalidArgument("zero-length displacement; merge duplicate points first");
  }
  const double turn = wrap_angle(heading(p1, p2) - heading(p0, p1));
  const double bin = kTwoPi / n_levels;
  const auto code = static_cast<long>(std::lround(turn / bin));
  return static_cast<int>(code % n_levels);
}

int speed_code(const Point& prev, const Point& next, double dt, const QuantizerConfig& cfg) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  const double v = std::clamp(distance(prev, next) / dt, 0.0, cfg.v_max);
  const auto code = static_cast<int>(std::floor(v / cfg.v_max * cfg.n_levels));
  return std::min(code, cfg.n_levels - 1);
}

FrameSequence encode(const Trace& trace, const QuantizerConfig& cfg) {
  cfg.validate();
  const auto pts = merge_duplicates(trace.points);
  if (pts.size() < 3) {
    throw InvalidArgument("trace " + trace.writer_id + "/" + trace.letter +
                          " has fewer than 3 distinct points");
  }
  FrameSequence fs;
  fs.writer_id = trace.writer_id;
  fs.letter = trace.letter;
  fs.sample_rate_hz = trace.sample_rate_hz;
  fs.origin_x = pts[0].x;
  fs.origin_y = pts[0].y;
  fs.initial_heading = wrap_angle(heading(pts[0], pts[1]));
  fs.initial_speed = distance(pts[0], pts[1]) / (pts[1].t - pts[0].t);
  fs.frames.reserve(pts.size() - 2);
  for (std::size_t i = 0; i + 2 < pts.size(); ++i) {
    fs.frames.push_back({direction_change_code(pts[i], pts[i + 1], pts[i + 2], cfg.n_levels),
                         speed_code(pts[i + 1], pts[i + 2], pts[i + 2].t - pts[i + 1].t, cfg)});
  }
  return fs;
}

Trace decode(const FrameSequence& fs, const QuantizerConfig& cfg) {
  cfg.validate();
  const double dt = 1.0 / fs.sample_rate_hz;
  const double bin = kTwoPi / cfg.n_levels;
  const double speed_bin = cfg.v_max / cfg.n_levels;

  Trace t;
  t.writer_id = fs.writer_id;
  t.letter = fs.letter;
  t.sample_rate_hz = fs.sample_rate_hz;
  t.points.reserve(fs.frames.size() + 2);

  Point p{fs.origin_x, fs.origin_y, 0.0};
  t.points.push_back(p);
  double h = fs.initial_heading;
  double step = fs.initial_speed * dt;
  p = {p.x + step * std::cos(h), p.y + step * std::sin(h), dt};
  t.points.push_back(p);
  for (std::size_t i = 0; i < fs.frames.size(); ++i) {
    h += fs.frames[i].dir * bin;
    step = (fs.frames[i].speed + 0.5) * speed_bin * dt;
    p = {p.x + step * std::cos(h), p.y + step * std::sin(h), static_cast<double>(i + 2) * dt};
    t.points.push_back(p);
  }
  return t;
}

std::vector<double> frame_one_hot(const Frame& f, int n_levels) {
  std::vector<double> v(static_cast<std::size_t>(2 * n_levels), 0.0);
  v[static_cast<std::size_t>(f.dir)] = 1.0;
  v[static_cast<std::size_t>(n_levels + f.speed)] = 1.0;
  return v;
}

QuantizerConfig calibrate_quantizer(std::span<const Trace> traces, int n_levels, double quantile) {
  std::vector<double> speeds;
  for (const auto& tr : traces) {
    const auto pts = merge_duplicates(tr.points);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double dt = pts[i].t - pts[i - 1].t;
      if (dt > 0.0) speeds.push_back(distance(pts[i - 1], pts[i]) / dt);
    }
  }
  if (speeds.empty()) throw InvalidArgument("cannot calibrate quantizer: no displacements");
  std::sort(speeds.begin(), speeds.end());
  const auto idx = static_cast<std::size_t>(
      std::clamp(std::ceil(quantile * static_cast<double>(speeds.size())) - 1.0, 0.0,
                 static_cast<double>(speeds.size() - 1)));
  QuantizerConfig q;
  q.n_levels = n_levels;
  q.v_max = speeds[idx] > 0.0 ? speeds[idx] : 1.0;
  q.validate();
  return q;
}

}  // namespace hwstyle
