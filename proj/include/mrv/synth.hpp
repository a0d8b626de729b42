#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mrv/media.hpp"
#include "mrv/rng.hpp"

namespace mrv {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

enum class SpeedProfile { ConstantSlow, ConstantFast, Accelerating, Oscillating };

const char* to_string(SpeedProfile p);

/// A recognizable motion pattern. Classes share appearance statistics and
/// differ only in how fast their sprites move over time.
struct MotionClass {
  int class_id = 0;
  SpeedProfile profile = SpeedProfile::ConstantSlow;
  double scale = 1.0;  // multiplies every speed of the family
};

MotionClass motion_class(int class_id);

struct SynthConfig {
  double slow_speed = 1.0;   // pixels per frame of the slow family
  double speed_ratio = 3.0;  // fast / slow
  double jitter = 0.15;      // relative spread of per-video speed parameters
  int sprites = 2;
  int sprite_min = 8;
  int sprite_max = 14;
};

/// Per-transition speeds (length T-1) in pixels per frame.
std::vector<double> speed_profile(const MotionClass& cls, int frames, const SynthConfig& cfg,
                                  Rng& rng);

struct SpriteSpec {
  int height = 0;
  int width = 0;
  Vec2 start;
  std::vector<Vec2> velocities;  // one per frame transition
  std::vector<float> texture;    // height * width intensities
};

struct SceneSpec {
  int height = 0;
  int width = 0;
  Frame background;
  std::vector<SpriteSpec> sprites;  // later sprites are drawn on top
};

/// Axis-aligned sprite motion following the class's speed profile,
/// reflected at the canvas border so every sprite stays fully visible.
SceneSpec make_scene(const MotionClass& cls, int frames, int height, int width,
                     const SynthConfig& cfg, std::uint64_t seed);

/// Integer sprite positions (top-left corners) for every frame, enough to
/// recover exact flow and occlusion between any two frames.
class SpriteTracks {
 public:
  SpriteTracks() = default;
  SpriteTracks(int height, int width, std::vector<Point> sizes,
               std::vector<std::vector<Point>> positions);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int frame_count() const noexcept { return static_cast<int>(positions_.size()); }
  int sprite_count() const noexcept { return static_cast<int>(sizes_.size()); }
  /// Size as {x = width, y = height}.
  Point size(int sprite) const { return sizes_.at(sprite); }
  Point position(int frame, int sprite) const { return positions_.at(frame).at(sprite); }

  /// Per-pixel visible surface at a frame: 0 background, s+1 for sprite s.
  std::vector<int> surface_labels(int frame) const;

  /// Displacement of whatever is visible at each pixel of `from` when the
  /// video reaches `to`. Background is static.
  FlowField displacement(int from, int to) const;

  /// Pixels of `from` whose surface is not visible at its displaced
  /// position in `to` (covered, or moved off the canvas).
  BinaryMask occlusion(int from, int to) const;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<Point> sizes_;
  std::vector<std::vector<Point>> positions_;
};

struct GroundTruth {
  std::vector<FlowField> flows_fwd;  // frame t -> t+1
  std::vector<FlowField> flows_bwd;  // frame t+1 -> t
  std::vector<BinaryMask> occlusion_fwd;
  std::vector<BinaryMask> occlusion_bwd;
};

struct RenderedSequence {
  std::vector<Frame> frames;
  GroundTruth truth;
  SpriteTracks tracks;
};

/// Positions are round(start + sum of velocities). Throws
/// std::invalid_argument if a sprite ends up entirely off the canvas.
RenderedSequence render_sequence(const SceneSpec& spec, int frames);

/// Two frames with smooth random flows between them, for derivative checks.
struct SmoothPair {
  Frame first;
  Frame second;
  FlowField forward;
  FlowField backward;
};

/// Sums of random low-frequency sinusoids for the frames and for both flow
/// fields (|flow| <= max_flow per component). The backward flow is roughly
/// the negated forward flow plus a smaller independent field, so both
/// occlusion outcomes occur.
SmoothPair make_smooth_pair(int height, int width, double max_flow, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Datasets

struct SyntheticVideo {
  std::string id;
  int class_id = 0;
  std::vector<Frame> frames;
  SpriteTracks tracks;

  int length() const noexcept { return static_cast<int>(frames.size()); }
};

struct Dataset {
  int class_count = 0;
  std::vector<SyntheticVideo> videos;
};

struct GenConfig {
  int classes = 4;
  int videos_per_class = 50;
  int frames = 120;
  int height = 48;
  int width = 48;
  std::uint64_t seed = 0;
  SynthConfig synth;

  void validate() const;
};

std::string video_id(int class_id, int index);

/// In-memory corpus; video (c, i) depends only on (seed, c, i).
Dataset generate_dataset(const GenConfig& cfg, int threads = 1);

/// Writes <root>/<class_id>/<video_id>/frame_%05d.pgm, a tracks.tsv per
/// video, and <root>/manifest.tsv (video_id, class_id, num_frames,
/// relative_path). Returns the manifest path.
std::filesystem::path gen_dataset(const GenConfig& cfg, const std::filesystem::path& root,
                                  int threads = 1);

Dataset load_dataset(const std::filesystem::path& root, int threads = 1);

// ---------------------------------------------------------------------------
// Frame-rate perturbation

struct ResampleMode {
  enum class Kind { None, Fixed, FixedEvery, Random };
  Kind kind = Kind::None;
  int k = 0;

  static ResampleMode none() { return {Kind::None, 0}; }
  /// Keep frames k apart: indices 0, k+1, 2(k+1), ...
  static ResampleMode fixed(int k) { return {Kind::Fixed, k}; }
  /// Keep every k-th frame: indices 0, k, 2k, ...
  static ResampleMode fixed_every(int k) { return {Kind::FixedEvery, k}; }
  /// Cumulative steps drawn uniformly from {1, ..., max_k + 1}.
  static ResampleMode random(int max_k) { return {Kind::Random, max_k}; }

  /// "none", "fixed:K", "every:K", "random:K".
  std::string name() const;
  static ResampleMode parse(const std::string& text);
  friend bool operator==(const ResampleMode&, const ResampleMode&) = default;
};

/// Throws std::out_of_range if fewer than two frames survive.
std::vector<int> resample_indices(int frames, const ResampleMode& mode, Rng& rng);

std::vector<Frame> resample_video(std::span<const Frame> frames, const ResampleMode& mode,
                                  Rng& rng);

}  // namespace mrv
