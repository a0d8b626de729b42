#include "mrv/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "mrv/parallel.hpp"

namespace mrv {

namespace {

float quantized(double v) {
  return static_cast<float>(quantize_intensity(static_cast<float>(std::clamp(v, 0.0, 1.0)))) / 255.0f;
}

Frame make_background(int height, int width, Rng& rng) {
  constexpr int kCell = 8;
  const int gh = height / kCell + 2, gw = width / kCell + 2;
  std::vector<double> coarse(static_cast<std::size_t>(gh) * gw);
  for (auto& c : coarse) c = uniform_real(rng, 0.0, 1.0);
  std::vector<float> data(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double gy = static_cast<double>(y) / kCell, gx = static_cast<double>(x) / kCell;
      const int y0 = static_cast<int>(gy), x0 = static_cast<int>(gx);
      const double fy = gy - y0, fx = gx - x0;
      auto at = [&](int yy, int xx) { return coarse[static_cast<std::size_t>(yy) * gw + xx]; };
      const double smooth = (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
                            fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1));
      data[static_cast<std::size_t>(y) * width + x] =
          quantized(0.12 + 0.33 * smooth + uniform_real(rng, -0.04, 0.04));
    }
  }
  return Frame(height, width, 1, std::move(data));
}

std::vector<float> make_sprite_texture(int height, int width, Rng& rng) {
  const double base = uniform_real(rng, 0.6, 0.88);
  const int period = uniform_int(rng, 2, 3);
  std::vector<float> tex(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const bool odd = ((x / period) + (y / period)) % 2 != 0;
      tex[static_cast<std::size_t>(y) * width + x] =
          quantized(base + (odd ? 0.08 : -0.08) + uniform_real(rng, -0.03, 0.03));
    }
  }
  return tex;
}

// Moves p by `step` along `dir`, reflecting off [0, limit].
void advance_reflect(double& p, double& dir, double step, double limit) {
  p += dir * step;
  while (p < 0.0 || p > limit) {
    if (limit <= 0.0) {
      p = 0.0;
      return;
    }
    if (p < 0.0) {
      p = -p;
    } else {
      p = 2.0 * limit - p;
    }
    dir = -dir;
  }
}

std::vector<Point> rounded_positions(const SpriteSpec& s, int frames) {
  std::vector<Point> out;
  out.reserve(frames);
  double x = s.start.x, y = s.start.y;
  for (int t = 0; t < frames; ++t) {
    if (t > 0) {
      x += s.velocities[t - 1].x;
      y += s.velocities[t - 1].y;
    }
    out.push_back({static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y))});
  }
  return out;
}

}  // namespace

const char* to_string(SpeedProfile p) {
  switch (p) {
    case SpeedProfile::ConstantSlow: return "constant-slow";
    case SpeedProfile::ConstantFast: return "constant-fast";
    case SpeedProfile::Accelerating: return "accelerating";
    case SpeedProfile::Oscillating: return "oscillating";
  }
  return "unknown";
}

MotionClass motion_class(int class_id) {
  if (class_id < 0) throw std::invalid_argument("motion_class: negative id");
  return {class_id, static_cast<SpeedProfile>(class_id % 4), 1.0 + 0.5 * (class_id / 4)};
}

std::vector<double> speed_profile(const MotionClass& cls, int frames, const SynthConfig& cfg,
                                  Rng& rng) {
  if (frames < 2) throw std::invalid_argument("speed_profile: need at least two frames");
  const int n = frames - 1;
  const double base = cfg.slow_speed * cls.scale;
  auto jitter = [&] { return uniform_real(rng, 1.0 - cfg.jitter, 1.0 + cfg.jitter); };
  std::vector<double> s(static_cast<std::size_t>(n));
  switch (cls.profile) {
    case SpeedProfile::ConstantSlow:
      std::fill(s.begin(), s.end(), base * jitter());
      break;
    case SpeedProfile::ConstantFast:
      std::fill(s.begin(), s.end(), base * cfg.speed_ratio * jitter());
      break;
    case SpeedProfile::Accelerating: {
      const double lo = 0.25 * base * jitter();
      const double hi = 1.25 * base * cfg.speed_ratio * jitter();
      for (int t = 0; t < n; ++t) s[t] = n == 1 ? lo : lo + (hi - lo) * t / (n - 1);
      break;
    }
    case SpeedProfile::Oscillating: {
      const double amp = base * cfg.speed_ratio * jitter();
      const double period = uniform_real(rng, 10.0, 20.0);
      const double phase = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
      for (int t = 0; t < n; ++t) {
        s[t] = amp * (0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * t / period + phase));
      }
      break;
    }
  }
  return s;
}

SceneSpec make_scene(const MotionClass& cls, int frames, int height, int width,
                     const SynthConfig& cfg, std::uint64_t seed) {
  if (frames < 2) throw std::invalid_argument("make_scene: need at least two frames");
  if (cfg.sprite_min < 1 || cfg.sprite_max < cfg.sprite_min) {
    throw std::invalid_argument("make_scene: bad sprite size range");
  }
  if (cfg.sprite_max > height || cfg.sprite_max > width) {
    throw std::invalid_argument("make_scene: sprites larger than the canvas");
  }
  Rng rng = make_rng(seed, {0x7363656e65ull});
  SceneSpec spec;
  spec.height = height;
  spec.width = width;
  spec.background = make_background(height, width, rng);
  for (int k = 0; k < cfg.sprites; ++k) {
    SpriteSpec s;
    s.height = uniform_int(rng, cfg.sprite_min, cfg.sprite_max);
    s.width = uniform_int(rng, cfg.sprite_min, cfg.sprite_max);
    s.texture = make_sprite_texture(s.height, s.width, rng);
    const double limit_x = width - s.width, limit_y = height - s.height;
    s.start = {static_cast<double>(uniform_int(rng, 0, static_cast<int>(limit_x))),
               static_cast<double>(uniform_int(rng, 0, static_cast<int>(limit_y)))};
    const bool horizontal = uniform_int(rng, 0, 1) == 1;
    double dir = uniform_int(rng, 0, 1) ? 1.0 : -1.0;
    const std::vector<double> speeds = speed_profile(cls, frames, cfg, rng);
    double p = horizontal ? s.start.x : s.start.y;
    const double limit = horizontal ? limit_x : limit_y;
    for (double speed : speeds) {
      const double before = p;
      advance_reflect(p, dir, speed, limit);
      s.velocities.push_back(horizontal ? Vec2{p - before, 0.0} : Vec2{0.0, p - before});
    }
    spec.sprites.push_back(std::move(s));
  }
  return spec;
}

// ---------------------------------------------------------------------------

SpriteTracks::SpriteTracks(int height, int width, std::vector<Point> sizes,
                           std::vector<std::vector<Point>> positions)
    : height_(height), width_(width), sizes_(std::move(sizes)), positions_(std::move(positions)) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("SpriteTracks: bad canvas");
  for (const auto& frame : positions_) {
    if (frame.size() != sizes_.size()) throw std::invalid_argument("SpriteTracks: ragged positions");
  }
}

std::vector<int> SpriteTracks::surface_labels(int frame) const {
  std::vector<int> labels(static_cast<std::size_t>(height_) * width_, 0);
  for (int s = 0; s < sprite_count(); ++s) {
    const Point p = positions_.at(frame)[s];
    const Point sz = sizes_[s];
    for (int y = std::max(p.y, 0); y < std::min(p.y + sz.y, height_); ++y) {
      for (int x = std::max(p.x, 0); x < std::min(p.x + sz.x, width_); ++x) {
        labels[static_cast<std::size_t>(y) * width_ + x] = s + 1;
      }
    }
  }
  return labels;
}

FlowField SpriteTracks::displacement(int from, int to) const {
  const std::vector<int> labels = surface_labels(from);
  const std::size_t n = labels.size();
  std::vector<float> u(n, 0.0f), v(n, 0.0f);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 0) continue;
    const int s = labels[i] - 1;
    u[i] = static_cast<float>(positions_.at(to)[s].x - positions_[from][s].x);
    v[i] = static_cast<float>(positions_.at(to)[s].y - positions_[from][s].y);
  }
  return FlowField(height_, width_, std::move(u), std::move(v));
}

BinaryMask SpriteTracks::occlusion(int from, int to) const {
  const std::vector<int> src = surface_labels(from);
  const std::vector<int> dst = surface_labels(to);
  std::vector<std::uint8_t> bits(src.size(), 0);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
      const int label = src[i];
      int tx = x, ty = y;
      if (label != 0) {
        const int s = label - 1;
        tx += positions_.at(to)[s].x - positions_[from][s].x;
        ty += positions_.at(to)[s].y - positions_[from][s].y;
      }
      const bool outside = tx < 0 || ty < 0 || tx >= width_ || ty >= height_;
      bits[i] = (outside || dst[static_cast<std::size_t>(ty) * width_ + tx] != label) ? 1 : 0;
    }
  }
  return BinaryMask(height_, width_, std::move(bits));
}

RenderedSequence render_sequence(const SceneSpec& spec, int frames) {
  if (frames < 2) throw std::invalid_argument("render_sequence: need at least two frames");
  if (spec.background.height() != spec.height || spec.background.width() != spec.width ||
      spec.background.channels() != 1) {
    throw std::invalid_argument("render_sequence: background does not match canvas");
  }
  std::vector<Point> sizes;
  std::vector<std::vector<Point>> per_sprite;
  for (const auto& s : spec.sprites) {
    if (static_cast<int>(s.velocities.size()) < frames - 1) {
      throw std::invalid_argument("render_sequence: velocity profile shorter than the sequence");
    }
    if (s.texture.size() != static_cast<std::size_t>(s.height) * s.width) {
      throw std::invalid_argument("render_sequence: texture size mismatch");
    }
    sizes.push_back({s.width, s.height});
    per_sprite.push_back(rounded_positions(s, frames));
    for (const Point& p : per_sprite.back()) {
      if (p.x + s.width <= 0 || p.y + s.height <= 0 || p.x >= spec.width || p.y >= spec.height) {
        throw std::invalid_argument("render_sequence: sprite fully off-canvas");
      }
    }
  }
  std::vector<std::vector<Point>> positions(frames, std::vector<Point>(spec.sprites.size()));
  for (std::size_t s = 0; s < spec.sprites.size(); ++s) {
    for (int t = 0; t < frames; ++t) positions[t][s] = per_sprite[s][t];
  }

  RenderedSequence out;
  out.tracks = SpriteTracks(spec.height, spec.width, sizes, positions);
  const auto bg = spec.background.data();
  for (int t = 0; t < frames; ++t) {
    std::vector<float> data(bg.begin(), bg.end());
    for (std::size_t s = 0; s < spec.sprites.size(); ++s) {
      const SpriteSpec& sp = spec.sprites[s];
      const Point p = positions[t][s];
      for (int y = 0; y < sp.height; ++y) {
        const int cy = p.y + y;
        if (cy < 0 || cy >= spec.height) continue;
        for (int x = 0; x < sp.width; ++x) {
          const int cx = p.x + x;
          if (cx < 0 || cx >= spec.width) continue;
          data[static_cast<std::size_t>(cy) * spec.width + cx] =
              sp.texture[static_cast<std::size_t>(y) * sp.width + x];
        }
      }
    }
    out.frames.emplace_back(spec.height, spec.width, 1, std::move(data));
  }
  for (int t = 0; t + 1 < frames; ++t) {
    out.truth.flows_fwd.push_back(out.tracks.displacement(t, t + 1));
    out.truth.flows_bwd.push_back(out.tracks.displacement(t + 1, t));
    out.truth.occlusion_fwd.push_back(out.tracks.occlusion(t, t + 1));
    out.truth.occlusion_bwd.push_back(out.tracks.occlusion(t + 1, t));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Sum of `terms` random sinusoids, rescaled to [-1, 1].
std::vector<double> smooth_field(int height, int width, int terms, Rng& rng) {
  std::vector<double> f(static_cast<std::size_t>(height) * width, 0.0);
  for (int t = 0; t < terms; ++t) {
    const double ky = uniform_real(rng, 0.5, 2.5) * 2.0 * std::numbers::pi / height;
    const double kx = uniform_real(rng, 0.5, 2.5) * 2.0 * std::numbers::pi / width;
    const double phase = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
    const double amp = uniform_real(rng, 0.5, 1.0);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        f[static_cast<std::size_t>(y) * width + x] += amp * std::sin(ky * y + kx * x + phase);
      }
    }
  }
  const double top = *std::max_element(f.begin(), f.end(), [](double a, double b) {
    return std::abs(a) < std::abs(b);
  });
  if (top != 0.0) {
    for (double& v : f) v /= std::abs(top);
  }
  return f;
}

Frame smooth_frame(int height, int width, Rng& rng) {
  const std::vector<double> f = smooth_field(height, width, 4, rng);
  std::vector<float> data(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) data[i] = static_cast<float>(0.5 + 0.35 * f[i]);
  return Frame(height, width, 1, std::move(data));
}

}  // namespace

SmoothPair make_smooth_pair(int height, int width, double max_flow, std::uint64_t seed) {
  if (height < 2 || width < 2) throw std::invalid_argument("make_smooth_pair: frame too small");
  if (!(max_flow >= 0.0) || !std::isfinite(max_flow)) {
    throw std::invalid_argument("make_smooth_pair: max_flow must be finite and >= 0");
  }
  Rng rng = make_rng(seed, {0x736d6f6f7468ull});
  SmoothPair p;
  p.first = smooth_frame(height, width, rng);
  p.second = smooth_frame(height, width, rng);
  const std::size_t n = static_cast<std::size_t>(height) * width;
  const auto fu = smooth_field(height, width, 3, rng), fv = smooth_field(height, width, 3, rng);
  const auto bu = smooth_field(height, width, 3, rng), bv = smooth_field(height, width, 3, rng);
  std::vector<float> u(n), v(n), ub(n), vb(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = static_cast<float>(max_flow * fu[i]);
    v[i] = static_cast<float>(max_flow * fv[i]);
    ub[i] = static_cast<float>(-0.7 * max_flow * fu[i] + 0.3 * max_flow * bu[i]);
    vb[i] = static_cast<float>(-0.7 * max_flow * fv[i] + 0.3 * max_flow * bv[i]);
  }
  p.forward = FlowField(height, width, std::move(u), std::move(v));
  p.backward = FlowField(height, width, std::move(ub), std::move(vb));
  return p;
}

void GenConfig::validate() const {
  if (classes < 2) throw std::invalid_argument("need at least two classes");
  if (videos_per_class < 1) throw std::invalid_argument("need at least one video per class");
  if (frames < 2) throw std::invalid_argument("need at least two frames per video");
  if (height < synth.sprite_max || width < synth.sprite_max) {
    throw std::invalid_argument("canvas smaller than the largest sprite");
  }
}

std::string video_id(int class_id, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "c%02d_v%03d", class_id, index);
  return buf;
}

namespace {

SyntheticVideo generate_video(const GenConfig& cfg, int class_id, int index) {
  const SceneSpec spec = make_scene(motion_class(class_id), cfg.frames, cfg.height, cfg.width,
                                    cfg.synth, derive_seed(cfg.seed, {std::uint64_t(class_id), std::uint64_t(index)}));
  RenderedSequence seq = render_sequence(spec, cfg.frames);
  return {video_id(class_id, index), class_id, std::move(seq.frames), std::move(seq.tracks)};
}

std::string frame_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05d.pgm", t);
  return buf;
}

std::filesystem::path relative_video_dir(int class_id, const std::string& id) {
  return std::filesystem::path(std::to_string(class_id)) / id;
}

void write_tracks(const SpriteTracks& tracks, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoErrc::Unwritable, path.string());
  out << "canvas\t" << tracks.width() << '\t' << tracks.height() << '\n';
  for (int s = 0; s < tracks.sprite_count(); ++s) {
    out << "sprite\t" << s << '\t' << tracks.size(s).x << '\t' << tracks.size(s).y << '\n';
  }
  for (int t = 0; t < tracks.frame_count(); ++t) {
    for (int s = 0; s < tracks.sprite_count(); ++s) {
      const Point p = tracks.position(t, s);
      out << "pos\t" << t << '\t' << s << '\t' << p.x << '\t' << p.y << '\n';
    }
  }
  if (!out) throw IoError(IoErrc::Unwritable, path.string());
}

SpriteTracks read_tracks(const std::filesystem::path& path, int frames) {
  std::ifstream in(path);
  if (!in) throw IoError(IoErrc::MissingFile, path.string());
  int width = 0, height = 0;
  std::vector<Point> sizes;
  std::vector<std::vector<Point>> positions(static_cast<std::size_t>(frames));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string kind;
    fields >> kind;
    if (kind == "canvas") {
      fields >> width >> height;
    } else if (kind == "sprite") {
      int s = 0;
      Point sz;
      fields >> s >> sz.x >> sz.y;
      if (s != static_cast<int>(sizes.size())) throw IoError(IoErrc::MalformedHeader, path.string());
      sizes.push_back(sz);
    } else if (kind == "pos") {
      int t = 0, s = 0;
      Point p;
      fields >> t >> s >> p.x >> p.y;
      if (!fields || t < 0 || t >= frames || s != static_cast<int>(positions[t].size())) {
        throw IoError(IoErrc::MalformedHeader, path.string());
      }
      positions[t].push_back(p);
    } else {
      throw IoError(IoErrc::MalformedHeader, path.string());
    }
    if (!fields) throw IoError(IoErrc::MalformedHeader, path.string());
  }
  for (const auto& f : positions) {
    if (f.size() != sizes.size()) throw IoError(IoErrc::TruncatedPayload, path.string());
  }
  return SpriteTracks(height, width, std::move(sizes), std::move(positions));
}

}  // namespace

Dataset generate_dataset(const GenConfig& cfg, int threads) {
  cfg.validate();
  Dataset ds;
  ds.class_count = cfg.classes;
  const std::size_t n = static_cast<std::size_t>(cfg.classes) * cfg.videos_per_class;
  ds.videos.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const int c = static_cast<int>(i) / cfg.videos_per_class;
    const int k = static_cast<int>(i) % cfg.videos_per_class;
    ds.videos[i] = generate_video(cfg, c, k);
  });
  return ds;
}

std::filesystem::path gen_dataset(const GenConfig& cfg, const std::filesystem::path& root,
                                  int threads) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) throw IoError(IoErrc::Unwritable, root.string() + ": " + ec.message());
  const std::size_t n = static_cast<std::size_t>(cfg.classes) * cfg.videos_per_class;
  parallel_for(n, threads, [&](std::size_t i) {
    const int c = static_cast<int>(i) / cfg.videos_per_class;
    const int k = static_cast<int>(i) % cfg.videos_per_class;
    const SyntheticVideo video = generate_video(cfg, c, k);
    const auto dir = root / relative_video_dir(c, video.id);
    std::error_code mk;
    std::filesystem::create_directories(dir, mk);
    if (mk) throw IoError(IoErrc::Unwritable, dir.string() + ": " + mk.message());
    for (int t = 0; t < video.length(); ++t) save_frame(video.frames[t], dir / frame_name(t));
    write_tracks(video.tracks, dir / "tracks.tsv");
  });
  const auto manifest = root / "manifest.tsv";
  std::ofstream out(manifest, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoErrc::Unwritable, manifest.string());
  for (int c = 0; c < cfg.classes; ++c) {
    for (int k = 0; k < cfg.videos_per_class; ++k) {
      const std::string id = video_id(c, k);
      out << id << '\t' << c << '\t' << cfg.frames << '\t'
          << relative_video_dir(c, id).generic_string() << '\n';
    }
  }
  if (!out) throw IoError(IoErrc::Unwritable, manifest.string());
  return manifest;
}

Dataset load_dataset(const std::filesystem::path& root, int threads) {
  const auto manifest = root / "manifest.tsv";
  std::ifstream in(manifest);
  if (!in) throw IoError(IoErrc::MissingFile, manifest.string());
  struct Record {
    std::string id;
    int class_id;
    int frames;
    std::string rel;
  };
  std::vector<Record> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    Record r;
    std::getline(fields, r.id, '\t');
    std::string cls, count;
    std::getline(fields, cls, '\t');
    std::getline(fields, count, '\t');
    std::getline(fields, r.rel);
    try {
      r.class_id = std::stoi(cls);
      r.frames = std::stoi(count);
    } catch (const std::exception&) {
      throw IoError(IoErrc::MalformedHeader, "bad manifest line: " + line);
    }
    if (r.id.empty() || r.rel.empty() || r.class_id < 0 || r.frames < 1) {
      throw IoError(IoErrc::MalformedHeader, "bad manifest line: " + line);
    }
    records.push_back(std::move(r));
  }
  Dataset ds;
  ds.videos.resize(records.size());
  parallel_for(records.size(), threads, [&](std::size_t i) {
    const Record& r = records[i];
    SyntheticVideo v;
    v.id = r.id;
    v.class_id = r.class_id;
    const auto dir = root / r.rel;
    for (int t = 0; t < r.frames; ++t) v.frames.push_back(load_frame(dir / frame_name(t)));
    v.tracks = read_tracks(dir / "tracks.tsv", r.frames);
    ds.videos[i] = std::move(v);
  });
  for (const auto& v : ds.videos) ds.class_count = std::max(ds.class_count, v.class_id + 1);
  return ds;
}

// ---------------------------------------------------------------------------

std::string ResampleMode::name() const {
  switch (kind) {
    case Kind::None: return "none";
    case Kind::Fixed: return "fixed:" + std::to_string(k);
    case Kind::FixedEvery: return "every:" + std::to_string(k);
    case Kind::Random: return "random:" + std::to_string(k);
  }
  return "none";
}

ResampleMode ResampleMode::parse(const std::string& text) {
  if (text == "none") return none();
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("bad perturbation '" + text + "'");
  const std::string head = text.substr(0, colon);
  int k = 0;
  try {
    std::size_t used = 0;
    k = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw std::invalid_argument("bad perturbation '" + text + "'");
  }
  if (k < 0) throw std::invalid_argument("negative perturbation stride in '" + text + "'");
  if (head == "fixed") return fixed(k);
  if (head == "every") {
    if (k < 1) throw std::invalid_argument("every:K needs K >= 1");
    return fixed_every(k);
  }
  if (head == "random") return random(k);
  throw std::invalid_argument("bad perturbation '" + text + "'");
}

std::vector<int> resample_indices(int frames, const ResampleMode& mode, Rng& rng) {
  std::vector<int> idx;
  switch (mode.kind) {
    case ResampleMode::Kind::None:
      for (int t = 0; t < frames; ++t) idx.push_back(t);
      break;
    case ResampleMode::Kind::Fixed:
    case ResampleMode::Kind::FixedEvery: {
      const int step = mode.kind == ResampleMode::Kind::Fixed ? mode.k + 1 : mode.k;
      if (step < 1) throw std::invalid_argument("resample: non-positive step");
      for (int t = 0; t < frames; t += step) idx.push_back(t);
      break;
    }
    case ResampleMode::Kind::Random:
      if (mode.k < 0) throw std::invalid_argument("resample: negative max stride");
      for (int t = 0; t < frames; t += uniform_int(rng, 1, mode.k + 1)) idx.push_back(t);
      break;
  }
  if (idx.size() < 2) {
    throw std::out_of_range("video of " + std::to_string(frames) + " frames too short for " +
                            mode.name());
  }
  return idx;
}

std::vector<Frame> resample_video(std::span<const Frame> frames, const ResampleMode& mode,
                                  Rng& rng) {
  std::vector<Frame> out;
  for (int t : resample_indices(static_cast<int>(frames.size()), mode, rng)) out.push_back(frames[t]);
  return out;
}

}  // namespace mrv
