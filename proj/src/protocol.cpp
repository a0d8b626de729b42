#include <algorithm>
#include <set>
#include <stdexcept>

#include "mrv/parallel.hpp"
#include "mrv/pipeline.hpp"

namespace mrv {

std::string TrainRegime::name() const {
  return (kind == Kind::WithRts ? "rts:" : "fixed:") + std::to_string(stride);
}

TrainRegime TrainRegime::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("bad regime '" + text + "'");
  const std::string head = text.substr(0, colon);
  int k = 0;
  try {
    std::size_t used = 0;
    k = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw std::invalid_argument("bad regime '" + text + "'");
  }
  if (head == "rts" && k >= 0) return with_rts(k);
  if (head == "fixed" && k >= 1) return fixed_stride(k);
  throw std::invalid_argument("bad regime '" + text + "'");
}

void PipelineConfig::validate() const {
  features.validate();
  if (clip_len < 2) throw std::invalid_argument("clip length must be >= 2");
  if (segments < 1) throw std::invalid_argument("segment count must be >= 1");
  if (crop_height < 2 * features.grid_rows || crop_width < 2 * features.grid_cols) {
    throw std::invalid_argument("crop too small for the feature grid");
  }
  if (!is_power_of_two(sketch_dim)) throw std::invalid_argument("sketch dimension must be a power of two");
  if (epochs < 0 || steps_per_epoch < 1) throw std::invalid_argument("bad epoch settings");
  if (!(learning_rate > 0.0) || l2 < 0.0) throw std::invalid_argument("bad optimizer settings");
  if (eval_anchors < 1) throw std::invalid_argument("need at least one evaluation anchor");
  if (weight_spatial < 0.0 || weight_temporal < 0.0 || weight_spatial + weight_temporal <= 0.0) {
    throw std::invalid_argument("fusion weights must be >= 0 and not both 0");
  }
}

// ---------------------------------------------------------------------------

std::vector<CropWindow> ten_crop_windows(int height, int width, int crop_height, int crop_width) {
  if (crop_height < 1 || crop_width < 1 || crop_height > height || crop_width > width) {
    throw std::invalid_argument("ten_crop_windows: crop larger than frame");
  }
  const int bottom = height - crop_height, right = width - crop_width;
  const std::vector<CropWindow> base = {
      {0, 0, crop_height, crop_width, false},
      {0, right, crop_height, crop_width, false},
      {bottom, 0, crop_height, crop_width, false},
      {bottom, right, crop_height, crop_width, false},
      {bottom / 2, right / 2, crop_height, crop_width, false},
  };
  std::vector<CropWindow> out = base;
  for (CropWindow w : base) {
    w.flip = true;
    out.push_back(w);
  }
  return out;
}

Frame crop_frame(const Frame& frame, const CropWindow& w) {
  if (w.y < 0 || w.x < 0 || w.height < 1 || w.width < 1 || w.y + w.height > frame.height() ||
      w.x + w.width > frame.width()) {
    throw std::invalid_argument("crop_frame: window outside frame");
  }
  const int c = frame.channels();
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(w.height) * w.width * c);
  for (int y = 0; y < w.height; ++y) {
    for (int x = 0; x < w.width; ++x) {
      const int sx = w.x + (w.flip ? w.width - 1 - x : x);
      for (int ch = 0; ch < c; ++ch) data.push_back(frame.at(w.y + y, sx, ch));
    }
  }
  return Frame(w.height, w.width, c, std::move(data));
}

FlowField crop_flow(const FlowField& flow, const CropWindow& w) {
  if (w.y < 0 || w.x < 0 || w.height < 1 || w.width < 1 || w.y + w.height > flow.height() ||
      w.x + w.width > flow.width()) {
    throw std::invalid_argument("crop_flow: window outside flow");
  }
  std::vector<float> u, v;
  u.reserve(static_cast<std::size_t>(w.height) * w.width);
  v.reserve(u.capacity());
  for (int y = 0; y < w.height; ++y) {
    for (int x = 0; x < w.width; ++x) {
      const int sx = w.x + (w.flip ? w.width - 1 - x : x);
      u.push_back(w.flip ? -flow.u(w.y + y, sx) : flow.u(w.y + y, sx));
      v.push_back(flow.v(w.y + y, sx));
    }
  }
  return FlowField(w.height, w.width, std::move(u), std::move(v));
}

std::vector<Frame> tencrop(const Frame& frame, int crop_height, int crop_width) {
  std::vector<Frame> out;
  for (const auto& w : ten_crop_windows(frame.height(), frame.width(), crop_height, crop_width)) {
    out.push_back(crop_frame(frame, w));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Features of one clip given as source-frame indices of a video.
StreamFeatures clip_features(const SyntheticVideo& video, std::span<const int> indices,
                             const CropWindow& window, const FeatureConfig& cfg) {
  std::vector<const Frame*> frames;
  frames.reserve(indices.size());
  for (int i : indices) frames.push_back(&video.frames.at(i));
  std::vector<FlowField> flows;
  flows.reserve(indices.size());
  for (std::size_t k = 0; k + 1 < indices.size(); ++k) {
    flows.push_back(video.tracks.displacement(indices[k], indices[k + 1]));
  }
  return extract_features(frames, flows, window, cfg);
}

ClipIndices training_clip(const TrainRegime& regime, Segment seg, int clip_len, Rng& rng) {
  if (regime.kind == TrainRegime::Kind::WithRts) {
    return sample_rts_in(seg, clip_len, regime.stride, rng);
  }
  const int span = (clip_len - 1) * regime.stride;
  if (span > seg.size() - 1) {
    throw std::out_of_range("fixed-stride clip does not fit a segment of " +
                            std::to_string(seg.size()) + " frames");
  }
  const int start = seg.begin + uniform_int(rng, 0, seg.size() - 1 - span);
  return sample_fixed_stride(seg.end, start, clip_len, regime.stride);
}

}  // namespace

TwoStreamModel train_classifier(std::span<const SyntheticVideo* const> videos,
                                const TrainRegime& regime, const PipelineConfig& cfg,
                                std::uint64_t seed) {
  cfg.validate();
  if (videos.empty()) throw std::invalid_argument("train_classifier: empty dataset");
  std::set<int> classes;
  int class_count = 0;
  for (const SyntheticVideo* v : videos) {
    classes.insert(v->class_id);
    class_count = std::max(class_count, v->class_id + 1);
    if (v->tracks.frame_count() != v->length()) {
      throw std::invalid_argument("train_classifier: video without matching tracks");
    }
  }
  if (classes.size() < 2) throw std::invalid_argument("train_classifier: single-class dataset");

  const Frame& probe = videos.front()->frames.front();
  const auto windows = ten_crop_windows(probe.height(), probe.width(), cfg.crop_height, cfg.crop_width);

  TwoStreamModel model;
  model.regime = regime;
  model.spatial_sketch = make_sketch_params(cfg.features.spatial_channels(), cfg.sketch_dim,
                                            derive_seed(seed, {0x73706174ull}));
  model.temporal_sketch = make_sketch_params(cfg.features.temporal_channels(), cfg.sketch_dim,
                                             derive_seed(seed, {0x74656d70ull}));
  model.spatial = ClassifierModel::zeros(class_count, cfg.sketch_dim);
  model.temporal = ClassifierModel::zeros(class_count, cfg.sketch_dim);
  for (ClassifierModel* m : {&model.spatial, &model.temporal}) {
    m->seed = seed;
    m->epochs = cfg.epochs;
    m->regime = regime.name();
  }

  std::vector<int> labels;
  for (const SyntheticVideo* v : videos) labels.push_back(v->class_id);
  std::vector<Descriptor> spatial(videos.size()), temporal(videos.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    parallel_for(videos.size(), cfg.threads, [&](std::size_t i) {
      const SyntheticVideo& video = *videos[i];
      Rng rng = make_rng(seed, {0x747261696eull, std::uint64_t(epoch), i});
      const SegmentLayout layout = partition_segments(video.length(), cfg.segments);
      std::vector<ClipIndices> clips;
      for (const Segment& seg : layout.segments) {
        clips.push_back(training_clip(regime, seg, cfg.clip_len, rng));
      }
      const CropWindow window =
          cfg.ten_crop ? windows[uniform_int(rng, 0, static_cast<int>(windows.size()) - 1)] : windows[4];
      std::vector<StreamFeatures> feats;
      for (const auto& clip : clips) feats.push_back(clip_features(video, clip.values, window, cfg.features));
      spatial[i] = make_descriptor(feats, model.spatial_sketch, Stream::Spatial);
      temporal[i] = make_descriptor(feats, model.temporal_sketch, Stream::Temporal);
    });
    if (epoch == 0) {
      model.spatial.fit_standardization(spatial);
      model.temporal.fit_standardization(temporal);
    }
    model.spatial.loss_history.push_back(cross_entropy(model.spatial, spatial, labels));
    model.temporal.loss_history.push_back(cross_entropy(model.temporal, temporal, labels));
    for (int s = 0; s < cfg.steps_per_epoch; ++s) {
      gradient_step(model.spatial, spatial, labels, cfg.learning_rate, cfg.l2);
      gradient_step(model.temporal, temporal, labels, cfg.learning_rate, cfg.l2);
    }
  }
  return model;
}

StreamScores predict_video(const TwoStreamModel& model, const SyntheticVideo& video,
                           std::span<const int> kept, const PipelineConfig& cfg) {
  cfg.validate();
  if (kept.empty()) throw std::out_of_range("predict_video: no frames");
  for (int k : kept) {
    if (k < 0 || k >= video.length()) throw std::out_of_range("predict_video: frame index out of range");
  }
  const int length = static_cast<int>(kept.size());
  if (length < cfg.segments * cfg.clip_len) {
    throw std::out_of_range("predict_video: " + std::to_string(length) +
                            " frames cannot hold a clip of " + std::to_string(cfg.clip_len) +
                            " in each of " + std::to_string(cfg.segments) + " segments");
  }
  const SegmentLayout layout = partition_segments(length, cfg.segments);
  std::vector<ClipIndices> starts;
  for (const Segment& seg : layout.segments) {
    ClipIndices s = eval_sample_indices(seg.size() - cfg.clip_len + 1, cfg.eval_anchors);
    for (int& v : s.values) v += seg.begin;
    starts.push_back(std::move(s));
  }
  const Frame& probe = video.frames.front();
  std::vector<CropWindow> windows =
      ten_crop_windows(probe.height(), probe.width(), cfg.crop_height, cfg.crop_width);
  if (!cfg.ten_crop) windows = {windows[4]};

  const int classes = model.spatial.classes;
  StreamScores out{std::vector<double>(classes, 0.0), std::vector<double>(classes, 0.0)};
  std::vector<int> clip;
  std::vector<const Frame*> frames;
  std::vector<FlowField> flows;
  std::vector<ClipMaps> maps(layout.segments.size());
  std::vector<StreamFeatures> feats(layout.segments.size());
  for (int a = 0; a < cfg.eval_anchors; ++a) {
    for (std::size_t s = 0; s < layout.segments.size(); ++s) {
      clip.clear();
      frames.clear();
      flows.clear();
      for (int k = 0; k < cfg.clip_len; ++k) clip.push_back(kept[starts[s][a] + k]);
      for (int i : clip) frames.push_back(&video.frames[i]);
      for (int k = 0; k + 1 < cfg.clip_len; ++k) flows.push_back(video.tracks.displacement(clip[k], clip[k + 1]));
      maps[s] = clip_maps(frames, flows, cfg.features);
    }
    for (const CropWindow& w : windows) {
      for (std::size_t s = 0; s < maps.size(); ++s) feats[s] = pool_features(maps[s], w, cfg.features);
      const auto sp = model.spatial.scores(make_descriptor(feats, model.spatial_sketch, Stream::Spatial));
      const auto tp = model.temporal.scores(make_descriptor(feats, model.temporal_sketch, Stream::Temporal));
      for (int k = 0; k < classes; ++k) {
        out.spatial[k] += sp[k];
        out.temporal[k] += tp[k];
      }
    }
  }
  const double inv = 1.0 / (static_cast<double>(cfg.eval_anchors) * windows.size());
  for (int k = 0; k < classes; ++k) {
    out.spatial[k] *= inv;
    out.temporal[k] *= inv;
  }
  return out;
}

std::vector<double> late_fuse(std::span<const double> spatial, std::span<const double> temporal,
                              double weight_spatial, double weight_temporal) {
  if (spatial.size() != temporal.size()) throw std::invalid_argument("late_fuse: length mismatch");
  if (weight_spatial < 0.0 || weight_temporal < 0.0) throw std::invalid_argument("late_fuse: negative weight");
  const double total = weight_spatial + weight_temporal;
  if (total <= 0.0) throw std::invalid_argument("late_fuse: zero total weight");
  std::vector<double> out(spatial.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = (weight_spatial * spatial[k] + weight_temporal * temporal[k]) / total;
  }
  return out;
}

}  // namespace mrv
