#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hwstyle/trace.hpp"

namespace hwstyle {

struct QuantizerConfig {
  int n_levels = 16;
  double v_max = 1.0;  // speed ceiling in coordinate units per second

  void validate() const;
  nlohmann::json to_json() const;
  static QuantizerConfig from_json(const nlohmann::json& j);
};

struct Frame {
  int dir = 0;    // direction-change code
  int speed = 0;  // speed code of the displacement ending the frame

  friend bool operator==(const Frame&, const Frame&) = default;
};

inline constexpr std::size_t kMaxEncodedFrames = 99;

/// Discrete form of a trace: one frame per interior point. The sidecar
/// fields (heading, speed, origin) let `decode` recover absolute geometry.
struct FrameSequence {
  std::string writer_id;
  char letter = 'A';
  std::vector<Frame> frames;
  double initial_heading = 0.0;  // radians, [0, 2*pi)
  double initial_speed = 0.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double sample_rate_hz = 100.0;

  std::size_t size() const { return frames.size(); }
  std::vector<int> dir_codes() const;
  std::vector<int> speed_codes() const;
  /// Checks 1 <= T <= max_frames, codes in range, heading in [0, 2*pi).
  void validate(int n_levels, std::size_t max_frames = kMaxEncodedFrames) const;

  friend bool operator==(const FrameSequence&, const FrameSequence&) = default;
};

/// Turn between p0->p1 and p1->p2, rounded to the nearest of `n_levels`
/// equal bins (bin 0 = straight ahead, counting anticlockwise).
/// Throws InvalidArgument on a zero-length displacement.
int direction_change_code(const Point& p0, const Point& p1, const Point& p2, int n_levels = 16);

/// floor(min(v, v_max) / v_max * n), capped at n - 1.
int speed_code(const Point& prev, const Point& next, double dt, const QuantizerConfig& cfg);

double wrap_angle(double a);  // into [0, 2*pi)

/// Consecutive duplicate points are merged first; T = points - 2.
FrameSequence encode(const Trace& trace, const QuantizerConfig& cfg);
/// Integrates bin-centre turns and speeds from the stored origin and
/// heading at the stored sample rate.
Trace decode(const FrameSequence& fs, const QuantizerConfig& cfg);

/// Two one-hot blocks of `n_levels` each, direction first.
std::vector<double> frame_one_hot(const Frame& f, int n_levels);

/// v_max as the given quantile of all displacement speeds in `traces`.
QuantizerConfig calibrate_quantizer(std::span<const Trace> traces, int n_levels = 16,
                                    double quantile = 0.99);

}  // namespace hwstyle
