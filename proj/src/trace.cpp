#include "hwstyle/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hwstyle/error.hpp"
#include "hwstyle/rng.hpp"

namespace hwstyle {

using nlohmann::json;

double Trace::duration() const {
  if (points.empty()) return 0.0;
  return points.back().t - points.front().t;
}

void Trace::validate() const {
  if (!is_letter(letter)) {
    throw InvalidArgument(std::string("letter must be A-Z, got '") + letter + "'");
  }
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw InvalidArgument("sample_rate_hz must be positive");
  }
  if (points.size() < 3) {
    throw InvalidArgument("trace needs at least 3 points, got " + std::to_string(points.size()));
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point& p = points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.t)) {
      throw InvalidArgument("non-finite value at point " + std::to_string(i));
    }
    if (i > 0 && !(p.t > points[i - 1].t)) {
      throw InvalidArgument("timestamps not strictly increasing at point " + std::to_string(i));
    }
  }
}

bool is_letter(char c) { return c >= 'A' && c <= 'Z'; }

int letter_index(char c) {
  if (!is_letter(c)) throw InvalidArgument(std::string("letter must be A-Z, got '") + c + "'");
  return c - 'A';
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::transfer: return "transfer";
  }
  return "?";
}

void Corpus::add(Trace t, Split s) {
  traces.push_back(std::move(t));
  tags.push_back(s);
}

std::vector<Trace> Corpus::select(Split s) const {
  std::vector<Trace> out;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (tags[i] == s) out.push_back(traces[i]);
  }
  return out;
}

std::vector<std::string> Corpus::writers() const {
  std::set<std::string> ws;
  for (const auto& t : traces) ws.insert(t.writer_id);
  return {ws.begin(), ws.end()};
}

void Corpus::check_invariants() const {
  if (tags.size() != traces.size()) throw DataMismatch("corpus tag count mismatch");
  std::set<std::tuple<Split, std::string, char>> seen;
  std::set<std::string> transfer, known;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto& t = traces[i];
    if (!seen.emplace(tags[i], t.writer_id, t.letter).second) {
      throw DataMismatch("duplicate (writer, letter) in split: " + t.writer_id + "/" + t.letter);
    }
    (tags[i] == Split::transfer ? transfer : known).insert(t.writer_id);
  }
  for (const auto& w : transfer) {
    if (known.count(w)) throw DataMismatch("transfer writer also in train/val: " + w);
  }
}

json trace_to_json(const Trace& t) {
  json pts = json::array();
  for (const auto& p : t.points) pts.push_back({p.x, p.y, p.t});
  json j = {{"writer_id", t.writer_id},
            {"letter", std::string(1, t.letter)},
            {"sample_rate_hz", t.sample_rate_hz},
            {"points", std::move(pts)}};
  if (!t.style.empty()) j["style"] = t.style;
  return j;
}

Trace trace_from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("expected a JSON object");
  Trace t;
  t.writer_id = j.at("writer_id").get<std::string>();
  const auto letter = j.at("letter").get<std::string>();
  if (letter.size() != 1) throw InvalidArgument("letter must be a single character");
  t.letter = letter[0];
  if (j.contains("sample_rate_hz")) t.sample_rate_hz = j.at("sample_rate_hz").get<double>();
  for (const auto& p : j.at("points")) {
    if (!p.is_array() || p.size() != 3) throw InvalidArgument("each point must be [x, y, t]");
    t.points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
  }
  if (j.contains("style")) {
    for (const auto& [k, v] : j.at("style").items()) {
      t.style[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  t.validate();
  return t;
}

LoadResult parse_corpus(std::istream& in) {
  LoadResult result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      result.corpus.add(trace_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      result.rejected.push_back({lineno, e.what()});
    }
  }
  return result;
}

LoadResult load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file: " + path.string());
  return parse_corpus(in);
}

void write_traces(std::ostream& out, const std::vector<Trace>& traces) {
  for (const auto& t : traces) out << trace_to_json(t).dump() << '\n';
}

void save_traces(const std::filesystem::path& path, const std::vector<Trace>& traces) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trace file: " + path.string());
  write_traces(out, traces);
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::pair<std::size_t, std::size_t>> stroke_ranges(const Trace& t, double gap_periods) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  if (t.points.empty()) return ranges;
  const double max_gap = gap_periods / t.sample_rate_hz;
  std::size_t begin = 0;
  for (std::size_t i = 1; i < t.points.size(); ++i) {
    if (t.points[i].t - t.points[i - 1].t > max_gap) {
      ranges.emplace_back(begin, i);
      begin = i;
    }
  }
  ranges.emplace_back(begin, t.points.size());
  return ranges;
}

namespace {

double path_length(const std::vector<Point>& pts, std::size_t begin, std::size_t end) {
  double len = 0.0;
  for (std::size_t i = begin + 1; i < end; ++i) {
    len += std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
  }
  return len;
}

// Repeats until no stroke falls under the threshold, so a second pass is a
// no-op. The longest stroke always survives.
void prune_short_strokes(Trace& t, const CleanConfig& cfg) {
  for (;;) {
    const auto ranges = stroke_ranges(t, cfg.stroke_gap_periods);
    if (ranges.size() <= 1) return;
    std::vector<double> lens;
    double total = 0.0;
    for (const auto& [b, e] : ranges) {
      lens.push_back(path_length(t.points, b, e));
      total += lens.back();
    }
    const auto longest = static_cast<std::size_t>(std::max_element(lens.begin(), lens.end()) - lens.begin());
    std::vector<Point> kept;
    bool dropped = false;
    for (std::size_t s = 0; s < ranges.size(); ++s) {
      if (s != longest && lens[s] < cfg.min_stroke_fraction * total) {
        dropped = true;
        continue;
      }
      kept.insert(kept.end(), t.points.begin() + static_cast<std::ptrdiff_t>(ranges[s].first),
                  t.points.begin() + static_cast<std::ptrdiff_t>(ranges[s].second));
    }
    if (!dropped) return;
    t.points = std::move(kept);
  }
}

}  // namespace

Corpus clean(const Corpus& corpus, const CleanConfig& cfg) {
  constexpr double kTimeSlack = 1e-9;
  Corpus out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    Trace t = corpus.traces[i];
    prune_short_strokes(t, cfg);
    if (t.points.size() < 3 || t.points.size() > cfg.max_points) continue;
    if (t.duration() > cfg.max_duration_s + kTimeSlack) continue;
    out.add(std::move(t), corpus.tags[i]);
  }
  return out;
}

Corpus split_writers(const Corpus& corpus, const SplitConfig& cfg) {
  auto writers = corpus.writers();
  if (cfg.n_transfer >= writers.size() && !(cfg.n_transfer == 0 && writers.empty())) {
    throw InvalidArgument("n_transfer (" + std::to_string(cfg.n_transfer) +
                          ") must be smaller than the number of writers (" +
                          std::to_string(writers.size()) + ")");
  }
  if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0) {
    throw InvalidArgument("val_fraction must be in [0, 1)");
  }
  Rng rng(mix_seed(cfg.seed, 0x5b1d));
  shuffle(writers.begin(), writers.end(), rng);

  const std::size_t remaining = writers.size() - cfg.n_transfer;
  const auto n_val = static_cast<std::size_t>(std::lround(cfg.val_fraction * static_cast<double>(remaining)));

  std::map<std::string, Split> assignment;
  for (std::size_t i = 0; i < writers.size(); ++i) {
    Split s = Split::train;
    if (i < cfg.n_transfer) {
      s = Split::transfer;
    } else if (i < cfg.n_transfer + n_val) {
      s = Split::val;
    }
    assignment[writers[i]] = s;
  }

  Corpus out;
  for (const auto& t : corpus.traces) out.add(t, assignment.at(t.writer_id));
  out.check_invariants();
  return out;
}

}  // namespace hwstyle
