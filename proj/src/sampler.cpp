#include "mrv/sampler.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace mrv {

void SamplerConfig::validate() const {
  if (clip_len < 1) throw std::invalid_argument("SamplerConfig: clip_len must be >= 1");
  if (max_stride < 0) throw std::invalid_argument("SamplerConfig: max_stride must be >= 0");
}

ClipIndices sample_consecutive(int video_len, int start, int clip_len) {
  return sample_fixed_stride(video_len, start, clip_len, 1);
}

ClipIndices sample_fixed_stride(int video_len, int start, int clip_len, int stride) {
  if (clip_len < 1 || stride < 0 || start < 0) {
    throw std::invalid_argument("sample_fixed_stride: bad arguments");
  }
  const long long last = start + static_cast<long long>(clip_len - 1) * stride;
  if (last > video_len - 1) {
    throw std::out_of_range("clip [" + std::to_string(start) + ", " + std::to_string(last) +
                            "] exceeds video of length " + std::to_string(video_len));
  }
  ClipIndices out;
  out.values.reserve(clip_len);
  for (int k = 0; k < clip_len; ++k) out.values.push_back(start + k * stride);
  return out;
}

ClipIndices sample_rts_in(Segment range, int clip_len, int max_stride, Rng& rng) {
  if (clip_len < 1 || max_stride < 0) throw std::invalid_argument("sample_rts: bad arguments");
  if (range.size() < clip_len) {
    throw std::out_of_range("sample_rts: range of " + std::to_string(range.size()) +
                            " frames is shorter than clip length " + std::to_string(clip_len));
  }
  const int limit = range.size() - 1;
  std::vector<int> strides(static_cast<std::size_t>(clip_len - 1), 0);
  int span = 0;
  bool fits = false;
  for (int attempt = 0; attempt <= kMaxStrideRejections && !fits; ++attempt) {
    for (auto& s : strides) s = uniform_int(rng, 0, max_stride);
    span = std::accumulate(strides.begin(), strides.end(), 0);
    fits = span <= limit;
  }
  if (!fits) {
    std::fill(strides.begin(), strides.end(), 0);
    span = 0;
  }
  int t = range.begin + uniform_int(rng, 0, limit - span);
  ClipIndices out;
  out.values.reserve(clip_len);
  out.values.push_back(t);
  for (int s : strides) out.values.push_back(t += s);
  return out;
}

ClipIndices sample_rts(int video_len, int clip_len, int max_stride, Rng& rng) {
  if (video_len < clip_len) {
    throw std::out_of_range("sample_rts: video length " + std::to_string(video_len) +
                            " < clip length " + std::to_string(clip_len));
  }
  return sample_rts_in(Segment{0, video_len}, clip_len, max_stride, rng);
}

SegmentLayout partition_segments(int video_len, int segment_count) {
  if (segment_count < 1) throw std::invalid_argument("partition_segments: need >= 1 segment");
  if (video_len < segment_count) {
    throw std::out_of_range("partition_segments: " + std::to_string(video_len) +
                            " frames cannot form " + std::to_string(segment_count) + " segments");
  }
  const int base = video_len / segment_count;
  const int extra = video_len % segment_count;
  SegmentLayout layout;
  int begin = 0;
  for (int s = 0; s < segment_count; ++s) {
    const int size = base + (s < extra ? 1 : 0);
    layout.segments.push_back({begin, begin + size});
    begin += size;
  }
  return layout;
}

std::vector<ClipIndices> sample_segment_clips(int video_len, int segment_count,
                                              const SamplerConfig& cfg, Rng& rng) {
  cfg.validate();
  const SegmentLayout layout = partition_segments(video_len, segment_count);
  for (const auto& seg : layout.segments) {
    if (seg.size() < cfg.clip_len) {
      throw std::out_of_range("sample_segment_clips: segment of " + std::to_string(seg.size()) +
                              " frames is shorter than clip length " +
                              std::to_string(cfg.clip_len));
    }
  }
  std::vector<ClipIndices> clips;
  clips.reserve(layout.segments.size());
  for (const auto& seg : layout.segments) {
    clips.push_back(sample_rts_in(seg, cfg.clip_len, cfg.max_stride, rng));
  }
  return clips;
}

ClipIndices eval_sample_indices(int video_len, int count) {
  if (video_len < 1 || count < 1) throw std::invalid_argument("eval_sample_indices: T, K >= 1");
  ClipIndices out;
  out.values.reserve(count);
  if (count == 1) {
    out.values.push_back(video_len / 2);
    return out;
  }
  const long long span = video_len - 1;
  const long long gaps = count - 1;
  for (long long i = 0; i < count; ++i) {
    // floor(i * span / gaps + 1/2) in exact integer arithmetic
    out.values.push_back(static_cast<int>((2 * i * span + gaps) / (2 * gaps)));
  }
  return out;
}

}  // namespace mrv
