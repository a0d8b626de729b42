#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <vector>

#include <CLI11.hpp>

#include "mrv/flow_kernels.hpp"
#include "mrv/parallel.hpp"
#include "mrv/pipeline.hpp"
#include "mrv/sampler.hpp"
#include "mrv/synth.hpp"

namespace mrv::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
  int threads = 1;
};

// Runs a library precondition check, reporting std::invalid_argument as a
// usage error.
void usage_check(const std::function<void()>& check) {
  try {
    check();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(IoErrc::Unwritable, "cannot write " + path.string());
  f << text;
  if (!f) throw IoError(IoErrc::Unwritable, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// gen

struct GenOptions {
  int classes = 4;
  int videos = 50;
  int frames = 120;
  int canvas = 48;
};

int cmd_gen(const GenOptions& o, const Globals& g, std::ostream& out) {
  GenConfig cfg;
  cfg.classes = o.classes;
  cfg.videos_per_class = o.videos;
  cfg.frames = o.frames;
  cfg.height = cfg.width = o.canvas;
  cfg.seed = g.seed;
  usage_check([&] { cfg.validate(); });
  require(!g.out.empty(), "gen: --out is required");
  out << gen_dataset(cfg, g.out, g.threads).string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sample

struct SampleOptions {
  int len = 11;
  int max_stride = 5;
  int video_len = 120;
  int count = 10;
  int segments = 1;
  bool hist = false;
};

int cmd_sample(const SampleOptions& o, const Globals& g, std::ostream& out) {
  require(o.len >= 1, "sample: --len must be >= 1");
  require(o.max_stride >= 0, "sample: --max-stride must be >= 0");
  require(o.count >= 1, "sample: --count must be >= 1");
  require(o.segments >= 1, "sample: --segments must be >= 1");
  require(o.video_len >= o.len, "sample: --video-len must be >= --len");
  require(o.video_len / o.segments >= o.len,
          "sample: every segment must hold --len frames (video-len / segments >= len)");

  Rng rng = make_rng(g.seed);
  const SamplerConfig cfg{o.len, o.max_stride, g.seed};
  std::vector<long long> hist(static_cast<std::size_t>(o.max_stride) + 1, 0);
  for (int n = 0; n < o.count; ++n) {
    std::vector<ClipIndices> clips;
    if (o.segments == 1) {
      clips.push_back(sample_rts(o.video_len, o.len, o.max_stride, rng));
    } else {
      clips = sample_segment_clips(o.video_len, o.segments, cfg, rng);
    }
    if (o.hist) {
      for (const auto& c : clips) {
        for (std::size_t i = 1; i < c.size(); ++i) ++hist[c[i] - c[i - 1]];
      }
      continue;
    }
    for (std::size_t k = 0; k < clips.size(); ++k) {
      if (k > 0) out << " |";
      for (std::size_t i = 0; i < clips[k].size(); ++i) out << (k > 0 || i > 0 ? " " : "") << clips[k][i];
    }
    out << '\n';
  }
  if (o.hist) {
    long long total = 0;
    out << "stride\tcount\n";
    for (std::size_t s = 0; s < hist.size(); ++s) {
      out << s << '\t' << hist[s] << '\n';
      total += hist[s];
    }
    out << "total\t" << total << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// flowcheck

struct FlowcheckOptions {
  int size = 32;
  double alpha1 = 0.01;
  double alpha2 = 0.5;
  double eps = 1e-3;
  double charbonnier_alpha = 0.45;
  std::string flow = "gt";
  std::string frame1, frame2, flow_fwd, flow_bwd;
};

inline constexpr double kFdStep = 1e-3;
inline constexpr double kGradTolerance = 1e-4;
inline constexpr double kGradFraction = 0.99;
inline constexpr double kMinIou = 0.9;

struct CheckRow {
  std::string name;
  std::string status;  // PASS, FAIL or INFO
  std::string value;
  std::string requirement;
};

// Warps `frame` by constant integer shifts and compares with moving pixels
// directly; returns the number of mismatching samples.
std::size_t shift_mismatches(const Frame& frame) {
  std::size_t bad = 0;
  const int h = frame.height(), w = frame.width(), c = frame.channels();
  for (const auto& [du, dv] : {std::pair{1, 0}, std::pair{-2, 1}, std::pair{0, -3}}) {
    const WarpResult r = inverse_warp(frame, FlowField::constant(h, w, float(du), float(dv)));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int sx = x + du, sy = y + dv;
        const bool inside = sx >= 0 && sx < w && sy >= 0 && sy < h;
        if (r.valid.at(y, x) != inside) ++bad;
        if (!inside) continue;
        for (int ch = 0; ch < c; ++ch) bad += r.warped.at(y, x, ch) != frame.at(sy, sx, ch);
      }
    }
  }
  return bad;
}

int cmd_flowcheck(const FlowcheckOptions& o, const Globals& g, std::ostream& out) {
  const CharbonnierParams cp{o.charbonnier_alpha, o.eps};
  const OcclusionParams op{o.alpha1, o.alpha2};
  usage_check([&] {
    cp.validate();
    op.validate();
  });
  const int given = !o.frame1.empty() + !o.frame2.empty() + !o.flow_fwd.empty() + !o.flow_bwd.empty();
  require(given == 0 || given == 4,
          "flowcheck: --frame1, --frame2, --flow-fwd and --flow-bwd go together");
  const bool from_files = given == 4;

  Frame first, second;
  FlowField forward, backward;
  std::optional<OcclusionMasks> truth;
  if (from_files) {
    for (const auto& p : {o.frame1, o.frame2, o.flow_fwd, o.flow_bwd}) {
      require(fs::exists(p), "flowcheck: no such file " + p);
    }
    first = load_frame(o.frame1);
    second = load_frame(o.frame2);
    forward = load_flow(o.flow_fwd);
    backward = load_flow(o.flow_bwd);
    require(first.same_shape(second), "flowcheck: frame sizes differ");
    require(forward.height() == first.height() && forward.width() == first.width() &&
                backward.same_shape(forward),
            "flowcheck: flow and frame sizes differ");
  } else {
    require(o.size >= 16, "flowcheck: --size must be >= 16");
    // constant fast motion, so the pair always translates
    const SceneSpec spec = make_scene(motion_class(1), 2, o.size, o.size, SynthConfig{}, g.seed);
    RenderedSequence seq = render_sequence(spec, 2);
    first = seq.frames[0];
    second = seq.frames[1];
    forward = seq.truth.flows_fwd[0];
    backward = seq.truth.flows_bwd[0];
    truth = OcclusionMasks{seq.truth.occlusion_fwd[0], seq.truth.occlusion_bwd[0]};
  }
  const int h = first.height(), w = first.width();

  std::vector<CheckRow> rows;
  auto check = [&](std::string name, bool ok, std::string value, std::string req) {
    rows.push_back({std::move(name), ok ? "PASS" : "FAIL", std::move(value), std::move(req)});
  };

  {
    const WarpResult r = inverse_warp(first, FlowField::zeros(h, w));
    const bool ok = r.warped == first && r.valid.count() == r.valid.pixel_count();
    check("warp_identity", ok, ok ? "bit-identical" : "differs", "bit-identical");
  }
  {
    const std::size_t bad = shift_mismatches(first);
    check("warp_integer_shift", bad == 0, std::to_string(bad) + " mismatches", "0 mismatches");
  }
  if (truth) {
    const OcclusionMasks pred = occlusion_flags(forward, backward, op);
    const double iou = std::min(mask_iou(pred.forward, truth->forward, 1),
                                mask_iou(pred.backward, truth->backward, 1));
    check("occlusion_iou", iou >= kMinIou, fmt(iou, "%.4f"), ">= " + fmt(kMinIou));
  }
  {
    const FlowField zero = FlowField::zeros(h, w);
    const double loss_given = occlusion_aware_loss(first, second, forward, backward, cp, op).value;
    const double loss_zero = occlusion_aware_loss(first, second, zero, zero, cp, op).value;
    const std::string label = from_files ? "loss_given_flow" : "loss_gt_flow";
    rows.push_back({label, "INFO", fmt(loss_given), ""});
    rows.push_back({"loss_zero_flow", "INFO", fmt(loss_zero), ""});
    if (!from_files) {
      const double selected = o.flow == "zero" ? loss_zero : loss_given;
      rows.push_back({"loss_selected_flow", "INFO", fmt(selected), "--flow " + o.flow});
      check("gt_flow_lowers_loss", loss_given < loss_zero,
            fmt(loss_given) + " < " + fmt(loss_zero), "gt < zero");
    }
  }
  {
    // Smooth flows keep most sample points away from the bilinear kinks.
    SmoothPair pair;
    if (!from_files) {
      pair = make_smooth_pair(h, w, 1.5, g.seed);
    } else {
      pair = {first, second, forward, backward};
    }
    const LossMasks masks = loss_masks(pair.first, pair.second, pair.forward, pair.backward, op);
    const FlowGradient analytic =
        masked_pair_gradient(pair.first, pair.second, pair.forward, pair.backward, masks, cp);
    const FlowGradient numeric = finite_difference_gradient(
        [&](const FlowField& f, const FlowField& b) {
          return masked_pair_loss(pair.first, pair.second, f, b, masks, cp).value;
        },
        pair.forward, pair.backward, kFdStep, g.threads);
    const GradientAgreement a =
        compare_flow_gradients(analytic, numeric, pair.forward, pair.backward, kFdStep, kGradTolerance);
    check("gradient_agreement", a.fraction_within() >= kGradFraction,
          fmt(a.fraction_within(), "%.4f") + " of " + std::to_string(a.compared) + " within " +
              fmt(kGradTolerance),
          ">= " + fmt(kGradFraction));
    rows.push_back({"gradient_max_rel_error", "INFO", fmt(a.max_relative_error),
                    std::to_string(a.skipped) + " kink/border components skipped"});
  }

  bool all = true;
  out << "check\tstatus\tvalue\trequirement\n";
  for (const auto& r : rows) {
    out << r.name << '\t' << r.status << '\t' << r.value << '\t' << r.requirement << '\n';
    all = all && r.status != "FAIL";
  }
  return all ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// encode

struct EncodeOptions {
  int dim = kDefaultSketchDim;
  bool exact = false;
  bool normalize = false;
  std::string dataset;
  int channels = 16;
  int grid = 14;
  int count = 10;
  int clip_len = 11;
  int trials = 1;
  std::optional<std::uint64_t> sketch_seed;
};

struct NamedMap {
  std::string name;
  FeatureMap map;
};

// Features of the middle clip of every video (full frame, ground-truth flow).
std::vector<NamedMap> dataset_maps(const Dataset& ds, int clip_len, int threads) {
  std::vector<std::vector<NamedMap>> per(ds.videos.size());
  const FeatureConfig fc;
  parallel_for(ds.videos.size(), threads, [&](std::size_t i) {
    const SyntheticVideo& v = ds.videos[i];
    const int len = std::min(clip_len, v.length());
    const int start = (v.length() - len) / 2;
    std::vector<const Frame*> frames;
    std::vector<FlowField> flows;
    for (int t = start; t < start + len; ++t) {
      frames.push_back(&v.frames[t]);
      if (t > start) flows.push_back(v.tracks.displacement(t - 1, t));
    }
    const CropWindow full{0, 0, v.frames.front().height(), v.frames.front().width(), false};
    StreamFeatures f = pool_features(clip_maps(frames, flows, fc), full, fc);
    per[i].push_back({v.id + ".spatial", std::move(f.spatial)});
    if (f.temporal.cell_count() != 0) per[i].push_back({v.id + ".temporal", std::move(f.temporal)});
  });
  std::vector<NamedMap> out;
  for (auto& p : per) {
    for (auto& m : p) out.push_back(std::move(m));
  }
  return out;
}

std::vector<NamedMap> random_maps(int channels, int grid, int count, std::uint64_t seed) {
  Rng rng = make_rng(seed, {0x6d617073});
  std::vector<NamedMap> out;
  for (int n = 0; n < count; ++n) {
    std::vector<float> data(static_cast<std::size_t>(grid) * grid * channels);
    for (float& x : data) x = static_cast<float>(uniform_real(rng, 0.0, 1.0));
    char name[32];
    std::snprintf(name, sizeof name, "map_%04d", n);
    out.push_back({name, FeatureMap(grid, grid, channels, std::move(data))});
  }
  return out;
}

int cmd_encode(const EncodeOptions& o, const Globals& g, std::ostream& out) {
  require(o.dim >= 1 && is_power_of_two(o.dim), "encode: --dim must be a power of two");
  require(o.trials >= 1, "encode: --trials must be >= 1");
  std::vector<NamedMap> maps;
  if (!o.dataset.empty()) {
    require(fs::exists(o.dataset), "encode: no dataset at " + o.dataset);
    require(o.clip_len >= 2, "encode: --clip-len must be >= 2");
    maps = dataset_maps(load_dataset(o.dataset, g.threads), o.clip_len, g.threads);
  } else {
    require(o.channels >= 1 && o.grid >= 1 && o.count >= 1,
            "encode: --channels, --grid and --count must be >= 1");
    maps = random_maps(o.channels, o.grid, o.count, g.seed);
  }
  const std::uint64_t sketch_seed = o.sketch_seed.value_or(g.seed);

  // Tables per (channel count, trial); trial 0 produces the written files.
  auto sketch_all = [&](int trial) {
    std::vector<std::pair<int, SketchParams>> tables;
    std::vector<Descriptor> out(maps.size());
    for (std::size_t i = 0; i < maps.size(); ++i) {
      const int c = maps[i].map.channels();
      auto it = std::find_if(tables.begin(), tables.end(), [&](const auto& t) { return t.first == c; });
      if (it == tables.end()) {
        tables.emplace_back(c, make_sketch_params(c, o.dim, derive_seed(sketch_seed, {std::uint64_t(c), std::uint64_t(trial)})));
        it = tables.end() - 1;
      }
      out[i] = tensor_sketch_pool(maps[i].map, it->second);
    }
    return out;
  };
  const std::vector<Descriptor> sketches = sketch_all(0);
  std::vector<Descriptor> exacts;
  if (o.exact) {
    for (const auto& m : maps) exacts.push_back(exact_bilinear(m.map));
  }

  if (!g.out.empty()) {
    fs::create_directories(g.out);
    for (std::size_t i = 0; i < maps.size(); ++i) {
      const fs::path base = fs::path(g.out) / maps[i].name;
      save_descriptor(o.normalize ? normalize_descriptor(sketches[i]) : sketches[i],
                      base.string() + ".cbpd");
      if (o.exact) {
        save_descriptor(o.normalize ? normalize_descriptor(exacts[i]) : exacts[i],
                        base.string() + ".exact.cbpd");
      }
    }
  }
  out << "descriptors\t" << maps.size() << '\n';
  out << "dim\t" << o.dim << '\n';
  if (maps.size() == 1 && maps[0].map.cell_count() == 1 && o.dim == 1) {
    out << "value\t" << fmt(sketches[0].values[0], "%.9g") << '\n';
  }
  if (o.exact) {
    // Kernel approximation error over all pairs sharing a channel count,
    // repeated with independent tables per trial.
    std::vector<double> errors;
    for (int t = 0; t < o.trials; ++t) {
      const std::vector<Descriptor> sk = t == 0 ? sketches : sketch_all(t);
      for (std::size_t i = 0; i < maps.size(); ++i) {
        for (std::size_t j = i + 1; j < maps.size(); ++j) {
          if (maps[i].map.channels() != maps[j].map.channels()) continue;
          const double truth = dot(exacts[i], exacts[j]);
          if (truth == 0.0) continue;
          errors.push_back(std::abs(dot(sk[i], sk[j]) - truth) / std::abs(truth));
        }
      }
    }
    if (errors.empty()) {
      out << "median_relative_error\tn/a\n";
    } else {
      std::sort(errors.begin(), errors.end());
      const std::size_t n = errors.size();
      const double median = n % 2 ? errors[n / 2] : 0.5 * (errors[n / 2 - 1] + errors[n / 2]);
      out << "pairs\t" << n << '\n';
      out << "median_relative_error\t" << fmt(median) << '\n';
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentOptions {
  std::string dataset;
  GenOptions corpus;
  std::vector<std::string> regimes = {"fixed:1", "rts:5"};
  std::vector<std::string> perturbations = {"none", "fixed:1", "fixed:3", "fixed:5", "random:5"};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<std::string> sweep = {"0", "2", "4", "6"};
  std::string sweep_perturbation = "random:5";
  bool every = false;
  bool assert_trends = false;
  double margin = 0.03;
  double train_fraction = 0.6;
  PipelineConfig pipeline;
};

// "fixed:K" read as keep-every-K-th when --every is set.
ResampleMode parse_perturbation(const std::string& text, bool every) {
  ResampleMode m = ResampleMode::parse(text);
  if (every && m.kind == ResampleMode::Kind::Fixed) m = ResampleMode::fixed_every(m.k);
  return m;
}

int cmd_experiment(const ExperimentOptions& o, const Globals& g, std::ostream& out,
                   std::ostream& err) {
  ExperimentConfig cfg;
  cfg.pipeline = o.pipeline;
  cfg.pipeline.threads = g.threads;
  cfg.seeds = o.seeds;
  cfg.train_fraction = o.train_fraction;
  usage_check([&] {
    cfg.regimes.clear();
    for (const auto& r : o.regimes) cfg.regimes.push_back(TrainRegime::parse(r));
    cfg.perturbations.clear();
    for (const auto& p : o.perturbations) cfg.perturbations.push_back(parse_perturbation(p, o.every));
    cfg.sweep_max_strides.clear();
    if (!(o.sweep.size() == 1 && o.sweep[0] == "none")) {
      for (const auto& s : o.sweep) {
        std::size_t used = 0;
        int m = -1;
        try {
          m = std::stoi(s, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != s.size()) throw std::invalid_argument("bad sweep max stride '" + s + "'");
        cfg.sweep_max_strides.push_back(m);
      }
    }
    cfg.sweep_perturbation = parse_perturbation(o.sweep_perturbation, o.every);
    cfg.validate();
  });

  Dataset ds;
  if (!o.dataset.empty()) {
    require(fs::exists(fs::path(o.dataset) / "manifest.tsv"),
            "experiment: no dataset manifest under " + o.dataset);
    ds = load_dataset(o.dataset, g.threads);
  } else {
    GenConfig gc;
    gc.classes = o.corpus.classes;
    gc.videos_per_class = o.corpus.videos;
    gc.frames = o.corpus.frames;
    gc.height = gc.width = o.corpus.canvas;
    gc.seed = g.seed;
    usage_check([&] { gc.validate(); });
    ds = generate_dataset(gc, g.threads);
  }

  const ExperimentReport report = robustness_experiment(ds, cfg);
  if (!g.out.empty()) {
    fs::create_directories(g.out);
    write_text(fs::path(g.out) / "report.tsv", report_tsv(report));
    write_text(fs::path(g.out) / "grid.tsv", grid_tsv(report));
    write_text(fs::path(g.out) / "sweep.tsv", sweep_tsv(report));
  }
  out << grid_tsv(report);
  if (!report.sweep.empty()) out << sweep_tsv(report);
  bool all = true;
  for (const auto& c : check_trends(report, o.margin)) {
    out << (c.passed ? "PASS" : "FAIL") << '\t' << c.name << '\t' << c.detail << '\n';
    all = all && c.passed;
  }
  err << "runtime_seconds\t" << fmt(report.runtime_seconds, "%.1f") << '\n';
  return o.assert_trends && !all ? kExitFailure : kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multirate video analysis toolkit", "mrv"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic multirate corpus");
  gen_cmd->add_option("--classes", gen.classes)->capture_default_str();
  gen_cmd->add_option("--videos", gen.videos, "Videos per class")->capture_default_str();
  gen_cmd->add_option("--frames", gen.frames)->capture_default_str();
  gen_cmd->add_option("--canvas", gen.canvas, "Frame height and width")->capture_default_str();

  SampleOptions sample;
  auto* sample_cmd = app.add_subcommand("sample", "Draw random temporal skipping clips");
  sample_cmd->add_option("--len", sample.len, "Clip length")->capture_default_str();
  sample_cmd->add_option("--max-stride", sample.max_stride)->capture_default_str();
  sample_cmd->add_option("--video-len", sample.video_len)->capture_default_str();
  sample_cmd->add_option("--count", sample.count, "Number of draws")->capture_default_str();
  sample_cmd->add_option("--segments", sample.segments)->capture_default_str();
  sample_cmd->add_flag("--hist", sample.hist, "Print the stride histogram instead");

  FlowcheckOptions fc;
  auto* flow_cmd = app.add_subcommand("flowcheck", "Check warp, occlusion, loss and gradient kernels");
  flow_cmd->add_option("--size", fc.size, "Synthetic scene size")->capture_default_str();
  flow_cmd->add_option("--alpha1", fc.alpha1)->capture_default_str();
  flow_cmd->add_option("--alpha2", fc.alpha2)->capture_default_str();
  flow_cmd->add_option("--eps", fc.eps, "Charbonnier epsilon")->capture_default_str();
  flow_cmd->add_option("--charbonnier-alpha", fc.charbonnier_alpha)->capture_default_str();
  flow_cmd->add_option("--flow", fc.flow, "Flow whose loss is reported")
      ->capture_default_str()
      ->check(CLI::IsMember({"gt", "zero"}));
  flow_cmd->add_option("--frame1", fc.frame1);
  flow_cmd->add_option("--frame2", fc.frame2);
  flow_cmd->add_option("--flow-fwd", fc.flow_fwd);
  flow_cmd->add_option("--flow-bwd", fc.flow_bwd);

  EncodeOptions enc;
  auto* enc_cmd = app.add_subcommand("encode", "Compact bilinear descriptors");
  enc_cmd->add_option("--dim", enc.dim, "Sketch dimension (power of two)")->capture_default_str();
  enc_cmd->add_flag("--exact", enc.exact, "Also write the exact C*C descriptor and report the error");
  enc_cmd->add_flag("--normalize", enc.normalize, "Signed sqrt and unit norm before writing");
  enc_cmd->add_option("--dataset", enc.dataset, "Corpus directory; random maps otherwise");
  enc_cmd->add_option("--channels", enc.channels)->capture_default_str();
  enc_cmd->add_option("--grid", enc.grid)->capture_default_str();
  enc_cmd->add_option("--count", enc.count)->capture_default_str();
  enc_cmd->add_option("--clip-len", enc.clip_len)->capture_default_str();
  enc_cmd->add_option("--sketch-seed", enc.sketch_seed, "Defaults to --seed");
  enc_cmd->add_option("--trials", enc.trials, "Independent sketch tables for the error estimate")
      ->capture_default_str();

  ExperimentOptions ex;
  auto* ex_cmd = app.add_subcommand("experiment", "Frame-rate robustness grid and max-stride sweep");
  ex_cmd->add_option("--dataset", ex.dataset, "Corpus directory; the default corpus otherwise");
  ex_cmd->add_option("--classes", ex.corpus.classes)->capture_default_str();
  ex_cmd->add_option("--videos", ex.corpus.videos)->capture_default_str();
  ex_cmd->add_option("--frames", ex.corpus.frames)->capture_default_str();
  ex_cmd->add_option("--canvas", ex.corpus.canvas)->capture_default_str();
  ex_cmd->add_option("--regimes", ex.regimes)->delimiter(',')->capture_default_str();
  ex_cmd->add_option("--perturbations", ex.perturbations)->delimiter(',')->capture_default_str();
  ex_cmd->add_option("--seeds", ex.seeds)->delimiter(',')->capture_default_str();
  ex_cmd->add_option("--sweep", ex.sweep, "Max strides, or none")->delimiter(',')->capture_default_str();
  ex_cmd->add_option("--sweep-perturbation", ex.sweep_perturbation)->capture_default_str();
  ex_cmd->add_flag("--every", ex.every, "Read fixed:K as keep every K-th frame");
  ex_cmd->add_flag("--assert-trends", ex.assert_trends, "Exit 1 when a trend check fails");
  ex_cmd->add_option("--margin", ex.margin)->capture_default_str();
  ex_cmd->add_option("--segments", ex.pipeline.segments)->capture_default_str();
  ex_cmd->add_option("--clip-len", ex.pipeline.clip_len)->capture_default_str();
  ex_cmd->add_option("--epochs", ex.pipeline.epochs)->capture_default_str();
  ex_cmd->add_option("--anchors", ex.pipeline.eval_anchors)->capture_default_str();
  ex_cmd->add_option("--sketch-dim", ex.pipeline.sketch_dim)->capture_default_str();
  ex_cmd->add_option("--train-fraction", ex.train_fraction)->capture_default_str();

  for (auto* sub : {gen_cmd, sample_cmd, flow_cmd, enc_cmd, ex_cmd}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen, g, out);
    if (*sample_cmd) return cmd_sample(sample, g, out);
    if (*flow_cmd) return cmd_flowcheck(fc, g, out);
    if (*enc_cmd) return cmd_encode(enc, g, out);
    if (*ex_cmd) return cmd_experiment(ex, g, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace mrv::cli
