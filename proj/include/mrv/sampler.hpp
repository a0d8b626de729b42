#pragma once

#include <cstdint>
#include <vector>

#include "mrv/media.hpp"
#include "mrv/rng.hpp"

namespace mrv {

struct SamplerConfig {
  int clip_len = 11;
  int max_stride = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Half-open frame range [begin, end).
struct Segment {
  int begin = 0;
  int end = 0;

  int size() const noexcept { return end - begin; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct SegmentLayout {
  std::vector<Segment> segments;

  std::size_t segment_count() const noexcept { return segments.size(); }
};

/// Strides redrawn this many times before falling back to all-zero strides.
inline constexpr int kMaxStrideRejections = 100;

/// [t, t+1, ..., t+L-1]. Throws std::out_of_range if the clip leaves [0, T).
ClipIndices sample_consecutive(int video_len, int start, int clip_len);

/// [t, t+tau, ..., t+(L-1)tau].
ClipIndices sample_fixed_stride(int video_len, int start, int clip_len, int stride);

/// Random temporal skipping: L-1 strides drawn independently and uniformly
/// from {0, ..., max_stride}, then a start drawn uniformly over the
/// positions where the realized span fits. A span longer than the video is
/// redrawn; after kMaxStrideRejections failures all strides are zero.
ClipIndices sample_rts(int video_len, int clip_len, int max_stride, Rng& rng);

/// Same law as sample_rts, confined to one segment of a longer video.
ClipIndices sample_rts_in(Segment range, int clip_len, int max_stride, Rng& rng);

/// Sizes are ceil(T/S) or floor(T/S); earlier segments take the larger size.
SegmentLayout partition_segments(int video_len, int segment_count);

/// One RTS clip per segment, each confined to its segment.
std::vector<ClipIndices> sample_segment_clips(int video_len, int segment_count,
                                              const SamplerConfig& cfg, Rng& rng);

/// K evenly spaced indices round-half-up(i (T-1) / (K-1)); K = 1 picks the
/// middle frame.
ClipIndices eval_sample_indices(int video_len, int count);

}  // namespace mrv
