#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mrv/bilinear.hpp"
#include "mrv/media.hpp"
#include "mrv/sampler.hpp"
#include "mrv/synth.hpp"

namespace mrv {

// ---------------------------------------------------------------------------
// Hand-crafted stream features

struct FeatureConfig {
  int grid_rows = 4;
  int grid_cols = 4;
  /// Flow-magnitude thresholds; each gives the fraction of flow vectors
  /// whose magnitude exceeds it.
  std::vector<float> magnitude_edges = {0.5f, 1.5f, 2.5f, 3.5f, 5.0f, 7.0f, 10.0f, 14.0f};

  /// Mean and temporal variance of each 2x2 sub-block of a cell.
  int spatial_channels() const noexcept { return 8; }
  /// Exceedance fractions, mean unit direction (u, v), then two clip-wide
  /// shape channels of the per-pair speed sequence. All are bounded, so
  /// speeds outside the training range do not extrapolate linearly.
  int temporal_channels() const noexcept { return static_cast<int>(magnitude_edges.size()) + 4; }
  void validate() const;
};

/// Appearance (spatial) and motion (temporal) statistics per grid cell.
struct StreamFeatures {
  FeatureMap spatial;
  FeatureMap temporal;  // empty for single-frame clips
};

/// Rectangle of a frame, optionally mirrored left-right.
struct CropWindow {
  int y = 0;
  int x = 0;
  int height = 0;
  int width = 0;
  bool flip = false;
};

/// Per-pixel clip statistics over full frames, shared by every crop of a
/// clip: temporal mean and variance of the gray level, and per-pixel
/// temporal channels averaged over the flows.
struct ClipMaps {
  int height = 0;
  int width = 0;
  std::vector<float> mean;
  std::vector<float> variance;
  int motion_channels = 0;       // per-pixel channels, 0 for single-frame clips
  std::vector<float> motion;     // height * width * motion_channels
  /// Coefficient of variation and mean absolute successive difference
  /// (relative to the mean) of the per-pair speed of moving pixels. Both
  /// are unchanged when every displacement is scaled.
  std::vector<float> shape;
  /// Summed-area table over (mean, variance, motion...) per pixel,
  /// (height + 1) x (width + 1) x (2 + motion_channels).
  std::vector<double> integral;

  int integral_channels() const noexcept { return 2 + motion_channels; }
  /// Sum of channel k over rows [y0, y1) and columns [x0, x1).
  double rect_sum(int k, int y0, int y1, int x0, int x1) const;
};

/// flows[k] is the displacement from clip frame k to k+1.
ClipMaps clip_maps(std::span<const Frame* const> frames, std::span<const FlowField> flows,
                   const FeatureConfig& cfg = {});

/// Grid-cell averages of the maps inside a window. A mirrored window
/// negates the horizontal flow component.
StreamFeatures pool_features(const ClipMaps& maps, const CropWindow& window,
                             const FeatureConfig& cfg = {});

StreamFeatures extract_features(const VideoClip& clip, std::span<const FlowField> flows,
                                const FeatureConfig& cfg = {});

/// pool_features(clip_maps(frames, flows), window).
StreamFeatures extract_features(std::span<const Frame* const> frames,
                                std::span<const FlowField> flows, const CropWindow& window,
                                const FeatureConfig& cfg = {});

enum class Stream { Spatial, Temporal };

const char* to_string(Stream s);

/// aggregate_segments over the stream's maps, then tensor_sketch_pool,
/// then normalize_descriptor.
Descriptor make_descriptor(std::span<const StreamFeatures> segments, const SketchParams& params,
                           Stream stream);

// ---------------------------------------------------------------------------
// Classifier

struct ClassifierModel {
  int classes = 0;
  int dim = 0;
  std::vector<float> weights;  // classes x dim, row-major
  std::vector<float> bias;
  /// Input standardization x' = (x - center) * scale; empty means identity.
  std::vector<float> center;
  std::vector<float> scale;
  // training metadata
  std::uint64_t seed = 0;
  int epochs = 0;
  std::string regime;
  std::vector<double> loss_history;  // training cross-entropy per epoch

  static ClassifierModel zeros(int classes, int dim);
  /// Centers on the mean of `data` and scales each dimension to standard
  /// deviation 1/sqrt(dim), so standardized inputs have unit expected norm.
  void fit_standardization(std::span<const Descriptor> data);
  /// Pre-softmax class scores.
  std::vector<double> scores(const Descriptor& d) const;
};

struct LogisticConfig {
  int epochs = 100;
  double learning_rate = 1.0;
  double l2 = 1e-4;
};

/// Mean softmax cross-entropy (without the l2 term).
double cross_entropy(const ClassifierModel& model, std::span<const Descriptor> data,
                     std::span<const int> labels);

/// One full-batch gradient step of l2-regularized softmax regression.
void gradient_step(ClassifierModel& model, std::span<const Descriptor> data,
                   std::span<const int> labels, double learning_rate, double l2);

/// Full-batch gradient descent from zero weights on a fixed descriptor set,
/// after fitting the standardization to it.
ClassifierModel fit_logistic(std::span<const Descriptor> data, std::span<const int> labels,
                             int classes, const LogisticConfig& cfg);

std::size_t argmax(std::span<const double> scores);

// ---------------------------------------------------------------------------
// Training regimes and the evaluation protocol

struct TrainRegime {
  enum class Kind { WithRts, FixedStride };
  Kind kind = Kind::WithRts;
  int stride = 5;  // max stride for RTS, tau for fixed stride

  static TrainRegime with_rts(int max_stride) { return {Kind::WithRts, max_stride}; }
  static TrainRegime fixed_stride(int tau) { return {Kind::FixedStride, tau}; }
  /// "rts:M" or "fixed:T".
  std::string name() const;
  static TrainRegime parse(const std::string& text);
  friend bool operator==(const TrainRegime&, const TrainRegime&) = default;
};

struct PipelineConfig {
  int clip_len = 11;  // 10 flow pairs
  int segments = 1;
  int crop_height = 40;
  int crop_width = 40;
  FeatureConfig features;
  int sketch_dim = 512;
  int epochs = 30;
  int steps_per_epoch = 4;
  double learning_rate = 4.0;
  double l2 = 1e-4;
  int eval_anchors = 25;
  bool ten_crop = true;
  double weight_spatial = 1.0;
  double weight_temporal = 1.0;
  int threads = 1;

  void validate() const;
};

struct TwoStreamModel {
  TrainRegime regime;
  SketchParams spatial_sketch;
  SketchParams temporal_sketch;
  ClassifierModel spatial;
  ClassifierModel temporal;
};

/// Softmax regression per stream on per-video descriptors. Every epoch
/// draws a fresh clip (per segment) and crop for each video under the
/// regime, then takes `steps_per_epoch` full-batch gradient steps.
/// Throws std::invalid_argument for a single-class training set.
TwoStreamModel train_classifier(std::span<const SyntheticVideo* const> videos,
                                const TrainRegime& regime, const PipelineConfig& cfg,
                                std::uint64_t seed);

/// TL, TR, BL, BR, center, then the horizontal mirror of each.
std::vector<CropWindow> ten_crop_windows(int height, int width, int crop_height, int crop_width);

std::vector<Frame> tencrop(const Frame& frame, int crop_height, int crop_width);

Frame crop_frame(const Frame& frame, const CropWindow& window);
FlowField crop_flow(const FlowField& flow, const CropWindow& window);

struct StreamScores {
  std::vector<double> spatial;
  std::vector<double> temporal;
};

/// Test protocol on a video seen through `kept` frame indices (a frame-rate
/// perturbation, or all frames). K evenly spaced consecutive clips per
/// segment, each scored on ten crops (or the center crop), pre-softmax
/// scores averaged over all evaluations. Throws std::out_of_range when no
/// clip fits.
StreamScores predict_video(const TwoStreamModel& model, const SyntheticVideo& video,
                           std::span<const int> kept, const PipelineConfig& cfg);

/// (w_s s + w_t t) / (w_s + w_t).
std::vector<double> late_fuse(std::span<const double> spatial, std::span<const double> temporal,
                              double weight_spatial, double weight_temporal);

// ---------------------------------------------------------------------------
// Frame-rate robustness experiment

struct ExperimentConfig {
  std::vector<TrainRegime> regimes = {TrainRegime::fixed_stride(1), TrainRegime::with_rts(5)};
  std::vector<ResampleMode> perturbations = {ResampleMode::none(), ResampleMode::fixed(1),
                                             ResampleMode::fixed(3), ResampleMode::fixed(5),
                                             ResampleMode::random(5)};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  /// RTS max strides trained for the context-length sweep; empty skips it.
  std::vector<int> sweep_max_strides = {0, 2, 4, 6};
  ResampleMode sweep_perturbation = ResampleMode::random(5);
  double train_fraction = 0.6;
  PipelineConfig pipeline;

  void validate() const;
};

struct ExperimentRow {
  std::string regime;
  std::string perturbation;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
};

struct SweepRow {
  int max_stride = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
};

struct ExperimentReport {
  std::vector<std::string> regimes;
  std::vector<std::string> perturbations;
  std::vector<std::uint64_t> seeds;
  std::vector<ExperimentRow> rows;
  std::vector<SweepRow> sweep;
  std::string sweep_perturbation;
  double runtime_seconds = 0.0;

  double mean_accuracy(const std::string& regime, const std::string& perturbation) const;
  double sweep_mean(int max_stride) const;
};

/// Deterministic per-class split: the first ceil(fraction * n) videos of
/// each class train, the rest test.
void split_dataset(const Dataset& ds, double train_fraction,
                   std::vector<const SyntheticVideo*>& train,
                   std::vector<const SyntheticVideo*>& test);

double evaluate_accuracy(const TwoStreamModel& model, std::span<const SyntheticVideo* const> test,
                         const ResampleMode& perturbation, const PipelineConfig& cfg,
                         std::uint64_t seed);

/// Trains each regime on the unperturbed training split and evaluates it
/// on every perturbation of the test split, for every seed; then the RTS
/// max-stride sweep.
ExperimentReport robustness_experiment(const Dataset& ds, const ExperimentConfig& cfg);

/// Columns: regime, perturbation, seed, accuracy.
std::string report_tsv(const ExperimentReport& report);
/// Mean accuracy over seeds; one row per perturbation, one column per regime.
std::string grid_tsv(const ExperimentReport& report);
/// Columns: max_stride, seed, accuracy; seed "mean" rows aggregate.
std::string sweep_tsv(const ExperimentReport& report);

struct TrendCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Ordering properties of the robustness grid and the sweep:
/// RTS beats fixed-stride training under random perturbation by
/// `min_margin`, fixed-stride accuracy is nonincreasing over growing fixed
/// perturbations, and sweep accuracy is nondecreasing in max stride.
std::vector<TrendCheck> check_trends(const ExperimentReport& report, double min_margin = 0.03);

}  // namespace mrv
