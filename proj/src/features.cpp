#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mrv/pipeline.hpp"

namespace mrv {

void FeatureConfig::validate() const {
  if (grid_rows < 1 || grid_cols < 1) throw std::invalid_argument("feature grid must be >= 1x1");
  if (magnitude_edges.empty()) throw std::invalid_argument("need at least one magnitude bin edge");
  if (!std::is_sorted(magnitude_edges.begin(), magnitude_edges.end()) ||
      std::adjacent_find(magnitude_edges.begin(), magnitude_edges.end()) != magnitude_edges.end() ||
      magnitude_edges.front() <= 0.0f) {
    throw std::invalid_argument("magnitude bin edges must be positive and strictly increasing");
  }
}

const char* to_string(Stream s) { return s == Stream::Spatial ? "spatial" : "temporal"; }

namespace {

// Per-pixel motion channels averaged over the pairs that contain motion,
// plus the clip-wide speed-shape channels.
void add_motion(ClipMaps& m, std::span<const FlowField> flows, const FeatureConfig& cfg) {
  const std::size_t npix = static_cast<std::size_t>(m.height) * m.width;
  const auto& edges = cfg.magnitude_edges;
  const int ne = static_cast<int>(edges.size());
  const int mc = ne + 2;
  m.motion_channels = mc;
  std::vector<double> acc(npix * mc, 0.0);
  std::vector<double> speed;
  // Pairs without motion (repeated frames) add nothing to the sums and are
  // left out of every average.
  for (const FlowField& fl : flows) {
    const auto u = fl.u(), v = fl.v();
    double moving_sum = 0.0;
    int moving = 0;
    for (std::size_t i = 0; i < npix; ++i) {
      if (u[i] == 0.0f && v[i] == 0.0f) continue;
      const double mag = std::sqrt(double(u[i]) * u[i] + double(v[i]) * v[i]);
      if (mag > edges.front()) {
        moving_sum += mag;
        ++moving;
      }
      double* a = acc.data() + i * mc;
      for (int k = 0; k < ne && mag > edges[k]; ++k) a[k] += 1.0;
      a[ne] += u[i] / mag;
      a[ne + 1] += v[i] / mag;
    }
    if (moving > 0) speed.push_back(moving_sum / moving);
  }
  const double inv = 1.0 / static_cast<double>(std::max<std::size_t>(speed.size(), 1));
  m.motion.resize(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) m.motion[i] = static_cast<float>(acc[i] * inv);

  double mu = 0.0;
  for (double sp : speed) mu += sp;
  if (!speed.empty()) mu /= speed.size();
  double var = 0.0, step = 0.0;
  for (std::size_t k = 0; k < speed.size(); ++k) {
    var += (speed[k] - mu) * (speed[k] - mu);
    if (k > 0) step += std::abs(speed[k] - speed[k - 1]);
  }
  m.shape = {0.0f, 0.0f};
  if (mu > 0.0) {
    m.shape[0] = static_cast<float>(std::sqrt(var / speed.size()) / mu);
    if (speed.size() > 1) m.shape[1] = static_cast<float>(step / (speed.size() - 1) / mu);
  }
}

void build_integral(ClipMaps& m) {
  const int ch = m.integral_channels();
  const std::size_t stride = static_cast<std::size_t>(m.width + 1) * ch;
  m.integral.assign(static_cast<std::size_t>(m.height + 1) * stride, 0.0);
  std::vector<double> row(static_cast<std::size_t>(ch));
  for (int y = 0; y < m.height; ++y) {
    std::fill(row.begin(), row.end(), 0.0);
    const double* above = m.integral.data() + static_cast<std::size_t>(y) * stride;
    double* out = m.integral.data() + static_cast<std::size_t>(y + 1) * stride;
    for (int x = 0; x < m.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * m.width + x;
      row[0] += m.mean[i];
      row[1] += m.variance[i];
      for (int k = 0; k < m.motion_channels; ++k) row[2 + k] += m.motion[i * m.motion_channels + k];
      const std::size_t col = static_cast<std::size_t>(x + 1) * ch;
      for (int k = 0; k < ch; ++k) out[col + k] = above[col + k] + row[k];
    }
  }
}

}  // namespace

ClipMaps clip_maps(std::span<const Frame* const> frames, std::span<const FlowField> flows,
                   const FeatureConfig& cfg) {
  cfg.validate();
  if (frames.empty()) throw std::invalid_argument("clip_maps: empty clip");
  const Frame& first = *frames.front();
  for (const Frame* f : frames) {
    if (!f->same_shape(first)) throw std::invalid_argument("clip_maps: frame shapes differ");
  }
  if (flows.size() + 1 != frames.size()) {
    throw std::invalid_argument("clip_maps: need one flow per consecutive frame pair");
  }
  for (const auto& fl : flows) {
    if (fl.height() != first.height() || fl.width() != first.width()) {
      throw std::invalid_argument("clip_maps: flow and frame sizes differ");
    }
  }

  ClipMaps m;
  m.height = first.height();
  m.width = first.width();
  const std::size_t npix = static_cast<std::size_t>(m.height) * m.width;
  const int channels = first.channels();
  std::vector<double> sum(npix, 0.0), sum_sq(npix, 0.0);
  for (const Frame* f : frames) {
    const float* px = f->data().data();
    for (std::size_t i = 0; i < npix; ++i) {
      double g = 0.0;
      for (int c = 0; c < channels; ++c) g += px[i * channels + c];
      g /= channels;
      sum[i] += g;
      sum_sq[i] += g * g;
    }
  }
  const double nt = static_cast<double>(frames.size());
  m.mean.resize(npix);
  m.variance.resize(npix);
  for (std::size_t i = 0; i < npix; ++i) {
    const double mu = sum[i] / nt;
    m.mean[i] = static_cast<float>(mu);
    m.variance[i] = static_cast<float>(std::max(sum_sq[i] / nt - mu * mu, 0.0));
  }
  if (!flows.empty()) add_motion(m, flows, cfg);
  build_integral(m);
  return m;
}

double ClipMaps::rect_sum(int k, int y0, int y1, int x0, int x1) const {
  const std::size_t ch = static_cast<std::size_t>(integral_channels());
  const std::size_t stride = static_cast<std::size_t>(width + 1) * ch;
  auto at = [&](int y, int x) { return integral[y * stride + x * ch + k]; };
  return at(y1, x1) - at(y0, x1) - at(y1, x0) + at(y0, x0);
}

StreamFeatures pool_features(const ClipMaps& m, const CropWindow& window, const FeatureConfig& cfg) {
  cfg.validate();
  if (window.y < 0 || window.x < 0 || window.height < 2 * cfg.grid_rows ||
      window.width < 2 * cfg.grid_cols || window.y + window.height > m.height ||
      window.x + window.width > m.width) {
    throw std::invalid_argument("pool_features: crop window outside the frame or too small");
  }
  if (m.motion_channels != 0 &&
      m.motion_channels + static_cast<int>(m.shape.size()) != cfg.temporal_channels()) {
    throw std::invalid_argument("pool_features: maps built with a different feature config");
  }
  if (m.integral.size() !=
      static_cast<std::size_t>(m.height + 1) * (m.width + 1) * m.integral_channels()) {
    throw std::invalid_argument("pool_features: maps without a summed-area table");
  }
  // Window columns [x0, x1) as source columns, honoring the mirror.
  auto source_cols = [&](int x0, int x1) {
    return window.flip ? std::pair{window.x + window.width - x1, window.x + window.width - x0}
                       : std::pair{window.x + x0, window.x + x1};
  };

  const SegmentLayout rows = partition_segments(window.height, cfg.grid_rows);
  const SegmentLayout cols = partition_segments(window.width, cfg.grid_cols);
  const int sc = cfg.spatial_channels();
  const int tc = cfg.temporal_channels();
  const int mc = m.motion_channels;
  const std::size_t cells = static_cast<std::size_t>(cfg.grid_rows) * cfg.grid_cols;
  std::vector<float> spatial(cells * sc, 0.0f);
  std::vector<float> temporal(cells * tc, 0.0f);

  for (int r = 0; r < cfg.grid_rows; ++r) {
    for (int c = 0; c < cfg.grid_cols; ++c) {
      const Segment ry = rows.segments[r], cx = cols.segments[c];
      const std::size_t cell = static_cast<std::size_t>(r) * cfg.grid_cols + c;

      const SegmentLayout sub_r = partition_segments(ry.size(), 2);
      const SegmentLayout sub_c = partition_segments(cx.size(), 2);
      for (int a = 0; a < 2; ++a) {
        const int y0 = window.y + ry.begin + sub_r.segments[a].begin;
        const int y1 = window.y + ry.begin + sub_r.segments[a].end;
        for (int b = 0; b < 2; ++b) {
          const auto [x0, x1] =
              source_cols(cx.begin + sub_c.segments[b].begin, cx.begin + sub_c.segments[b].end);
          const double n = static_cast<double>(y1 - y0) * (x1 - x0);
          const int k = 2 * (2 * a + b);
          spatial[cell * sc + k] = static_cast<float>(m.rect_sum(0, y0, y1, x0, x1) / n);
          spatial[cell * sc + k + 1] = static_cast<float>(m.rect_sum(1, y0, y1, x0, x1) / n);
        }
      }

      if (mc == 0) continue;
      const int y0 = window.y + ry.begin, y1 = window.y + ry.end;
      const auto [x0, x1] = source_cols(cx.begin, cx.end);
      const double n = static_cast<double>(y1 - y0) * (x1 - x0);
      float* out = temporal.data() + cell * tc;
      for (int k = 0; k < mc; ++k) out[k] = static_cast<float>(m.rect_sum(2 + k, y0, y1, x0, x1) / n);
      if (window.flip) out[mc - 2] = -out[mc - 2];
      std::copy(m.shape.begin(), m.shape.end(), out + mc);
    }
  }

  StreamFeatures out;
  out.spatial = FeatureMap(cfg.grid_rows, cfg.grid_cols, sc, std::move(spatial));
  if (mc != 0) out.temporal = FeatureMap(cfg.grid_rows, cfg.grid_cols, tc, std::move(temporal));
  return out;
}

StreamFeatures extract_features(std::span<const Frame* const> frames,
                                std::span<const FlowField> flows, const CropWindow& window,
                                const FeatureConfig& cfg) {
  return pool_features(clip_maps(frames, flows, cfg), window, cfg);
}

StreamFeatures extract_features(const VideoClip& clip, std::span<const FlowField> flows,
                                const FeatureConfig& cfg) {
  clip.validate();
  std::vector<const Frame*> frames;
  for (const auto& f : clip.frames) frames.push_back(&f);
  const CropWindow full{0, 0, clip.frames.front().height(), clip.frames.front().width(), false};
  return extract_features(frames, flows, full, cfg);
}

Descriptor make_descriptor(std::span<const StreamFeatures> segments, const SketchParams& params,
                           Stream stream) {
  if (segments.empty()) throw std::invalid_argument("make_descriptor: no segments");
  std::vector<FeatureMap> maps;
  maps.reserve(segments.size());
  for (const auto& s : segments) {
    const FeatureMap& m = stream == Stream::Spatial ? s.spatial : s.temporal;
    if (m.cell_count() == 0) throw std::invalid_argument("make_descriptor: empty feature map");
    maps.push_back(m);
  }
  return normalize_descriptor(tensor_sketch_pool(aggregate_segments(maps), params));
}

}  // namespace mrv
