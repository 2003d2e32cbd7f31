#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hwstyle {

struct Point {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;  // seconds

  friend bool operator==(const Point&, const Point&) = default;
};

/// A timed pen trajectory for one uppercase letter by one writer.
///
/// Invariants (checked by `validate`): at least three points, strictly
/// increasing timestamps, letter in A..Z, positive sample rate. Pressure and
/// pen state are intentionally absent.
struct Trace {
  std::string writer_id;
  char letter = 'A';
  double sample_rate_hz = 100.0;
  std::vector<Point> points;
  // Optional free-form annotations (e.g. "rotation" -> "clockwise") carried
  // through the trace file. Used for labelling latent plots.
  std::map<std::string, std::string> style;

  double duration() const;
  /// Throws InvalidArgument describing the first violated invariant.
  void validate() const;

  friend bool operator==(const Trace&, const Trace&) = default;
};

inline constexpr int kNumLetters = 26;
bool is_letter(char c);
int letter_index(char c);  // 'A' -> 0; throws on anything outside A..Z

enum class Split { train, val, transfer };
std::string_view to_string(Split s);

/// Traces plus a split tag per trace. `tags.size() == traces.size()`.
struct Corpus {
  std::vector<Trace> traces;
  std::vector<Split> tags;

  std::size_t size() const { return traces.size(); }
  bool empty() const { return traces.empty(); }
  void add(Trace t, Split s = Split::train);
  std::vector<Trace> select(Split s) const;
  std::vector<std::string> writers() const;  // sorted, unique
  /// Checks one-example-per-(writer, letter)-per-split and transfer
  /// disjointness. Throws DataMismatch.
  void check_invariants() const;
};

struct LoadDiagnostic {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct LoadResult {
  Corpus corpus;
  std::vector<LoadDiagnostic> rejected;
};

// Line-delimited JSON trace files:
//   {"writer_id": "w012", "letter": "X", "sample_rate_hz": 100,
//    "points": [[x, y, t], ...], "style": {...}}
// "style" is optional. Blank lines are skipped.
nlohmann::json trace_to_json(const Trace& t);
Trace trace_from_json(const nlohmann::json& j);

/// Throws IoError if the file cannot be opened; bad lines are reported in
/// `rejected` and skipped.
LoadResult load_corpus(const std::filesystem::path& path);
LoadResult parse_corpus(std::istream& in);
void save_traces(const std::filesystem::path& path, const std::vector<Trace>& traces);
void write_traces(std::ostream& out, const std::vector<Trace>& traces);

struct CleanConfig {
  double max_duration_s = 1.0;
  std::size_t max_points = 99;
  // Strokes shorter than this fraction of the trace's path length are
  // dropped (stand-in for manual removal of false starts and corrections).
  double min_stroke_fraction = 0.05;
  // A timestamp gap larger than this many sample periods separates strokes.
  double stroke_gap_periods = 1.5;
};

/// Splits a trace into strokes at pen-up time gaps. Returns [begin, end)
/// index ranges into `t.points`.
std::vector<std::pair<std::size_t, std::size_t>> stroke_ranges(
    const Trace& t, double gap_periods = CleanConfig{}.stroke_gap_periods);

/// Drops short strokes, then removes traces longer than the duration or
/// point-count bounds (both bounds inclusive). Idempotent.
Corpus clean(const Corpus& corpus, const CleanConfig& cfg = {});

struct SplitConfig {
  std::size_t n_transfer = 0;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
};

/// Assigns whole writers to transfer / val / train. Deterministic in seed.
Corpus split_writers(const Corpus& corpus, const SplitConfig& cfg);

}  // namespace hwstyle
