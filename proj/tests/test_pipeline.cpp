#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mrv/pipeline.hpp"
#include "support.hpp"

using namespace mrv;

namespace {

std::vector<const Frame*> pointers(const std::vector<Frame>& frames) {
  std::vector<const Frame*> out;
  for (const auto& f : frames) out.push_back(&f);
  return out;
}

CropWindow full_window(int h, int w) { return {0, 0, h, w, false}; }

StreamFeatures features_of(const std::vector<Frame>& frames, const std::vector<FlowField>& flows) {
  return extract_features(pointers(frames), flows, full_window(frames[0].height(), frames[0].width()));
}

SyntheticVideo still_video(int frames, int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SyntheticVideo v;
  v.id = "still";
  const Frame f = testing::random_frame(size, size, 1, rng);
  v.frames.assign(static_cast<std::size_t>(frames), f);
  v.tracks = SpriteTracks(size, size, {}, std::vector<std::vector<Point>>(frames));
  return v;
}

Dataset small_dataset(int classes, int videos, int frames) {
  GenConfig cfg;
  cfg.classes = classes;
  cfg.videos_per_class = videos;
  cfg.frames = frames;
  cfg.seed = 21;
  return generate_dataset(cfg);
}

PipelineConfig small_pipeline() {
  PipelineConfig cfg;
  cfg.sketch_dim = 64;
  cfg.epochs = 3;
  cfg.steps_per_epoch = 2;
  cfg.eval_anchors = 2;
  return cfg;
}

std::vector<const SyntheticVideo*> all_videos(const Dataset& ds) {
  std::vector<const SyntheticVideo*> out;
  for (const auto& v : ds.videos) out.push_back(&v);
  return out;
}

}  // namespace

TEST_CASE("static clip has no motion features") {
  std::mt19937_64 rng(1);
  const std::vector<Frame> frames(4, testing::random_frame(16, 16, 1, rng));
  const std::vector<FlowField> flows(3, FlowField::zeros(16, 16));
  const StreamFeatures f = features_of(frames, flows);
  REQUIRE(f.temporal.channels() == FeatureConfig{}.temporal_channels());
  for (float v : f.temporal.data()) CHECK(v == 0.0f);
  // identical frames: every variance channel is zero
  for (std::size_t cell = 0; cell < f.spatial.cell_count(); ++cell) {
    for (int k = 1; k < 8; k += 2) CHECK(f.spatial.cell(cell)[k] == 0.0f);
  }
}

TEST_CASE("constant motion features") {
  std::mt19937_64 rng(2);
  const std::vector<Frame> frames{testing::random_frame(16, 16, 1, rng), testing::random_frame(16, 16, 1, rng)};
  const StreamFeatures f = features_of(frames, {FlowField::constant(16, 16, 3.0f, 0.0f)});
  // thresholds 0.5, 1.5, 2.5 are exceeded; the rest are not
  const std::vector<float> expected{1, 1, 1, 0, 0, 0, 0, 0, 1, 0, 0, 0};
  for (std::size_t cell = 0; cell < f.temporal.cell_count(); ++cell) {
    const auto c = f.temporal.cell(cell);
    CHECK(std::vector<float>(c.begin(), c.end()) == expected);
  }
}

TEST_CASE("doubling the flow moves mass to higher thresholds") {
  std::mt19937_64 rng(3);
  std::vector<Frame> frames;
  for (int t = 0; t < 5; ++t) frames.push_back(testing::random_frame(20, 20, 1, rng));
  std::vector<FlowField> flows, doubled;
  for (int t = 0; t < 4; ++t) {
    flows.push_back(testing::random_flow(20, 20, 4.0f, rng));
    std::vector<float> u(flows.back().u().begin(), flows.back().u().end());
    std::vector<float> v(flows.back().v().begin(), flows.back().v().end());
    for (float& x : u) x *= 2.0f;
    for (float& x : v) x *= 2.0f;
    doubled.emplace_back(20, 20, u, v);
  }
  const StreamFeatures a = features_of(frames, flows), b = features_of(frames, doubled);
  CHECK(a.spatial == b.spatial);
  const int edges = static_cast<int>(FeatureConfig{}.magnitude_edges.size());
  double mass_a = 0.0, mass_b = 0.0;
  for (std::size_t cell = 0; cell < a.temporal.cell_count(); ++cell) {
    const auto ca = a.temporal.cell(cell), cb = b.temporal.cell(cell);
    for (int k = 0; k < edges; ++k) {
      CHECK(cb[k] >= ca[k]);
      mass_a += ca[k];
      mass_b += cb[k];
    }
    // mean direction ignores scale
    for (int k = edges; k < edges + 2; ++k) CHECK(cb[k] == doctest::Approx(ca[k]).epsilon(1e-5));
  }
  CHECK(mass_b > mass_a);
}

TEST_CASE("speed shape ignores scale once everything moves") {
  std::mt19937_64 rng(9);
  std::vector<Frame> frames;
  for (int t = 0; t < 5; ++t) frames.push_back(testing::random_frame(16, 16, 1, rng));
  std::vector<FlowField> flows, doubled;
  for (float speed : {1.0f, 3.0f, 2.0f, 4.0f}) {
    flows.push_back(FlowField::constant(16, 16, speed, 0.0f));
    doubled.push_back(FlowField::constant(16, 16, 0.0f, 2.0f * speed));
  }
  const StreamFeatures a = features_of(frames, flows), b = features_of(frames, doubled);
  const int shape = FeatureConfig{}.temporal_channels() - 2;
  const auto ca = a.temporal.cell(5), cb = b.temporal.cell(5);
  // speeds 1,3,2,4: mean 2.5, population sd sqrt(1.25), mean step 5/3
  CHECK(ca[shape] == doctest::Approx(std::sqrt(1.25) / 2.5).epsilon(1e-6));
  CHECK(ca[shape + 1] == doctest::Approx((5.0 / 3.0) / 2.5).epsilon(1e-6));
  CHECK(cb[shape] == doctest::Approx(ca[shape]).epsilon(1e-6));
  CHECK(cb[shape + 1] == doctest::Approx(ca[shape + 1]).epsilon(1e-6));
}

TEST_CASE("spatial features are sub-block means and variances") {
  std::mt19937_64 rng(4);
  std::vector<Frame> frames;
  for (int t = 0; t < 3; ++t) frames.push_back(testing::random_frame(16, 16, 1, rng));
  const std::vector<FlowField> flows(2, FlowField::zeros(16, 16));
  const CropWindow w{2, 4, 8, 12, false};
  const StreamFeatures f = extract_features(pointers(frames), flows, w);
  // 4x4 grid over 8x12: cells of 2x3, split into sub-blocks of 1x2 and 1x1
  auto pixel_stats = [&](int y, int x) {
    double s = 0.0, q = 0.0;
    for (const auto& fr : frames) {
      s += fr.at(y, x);
      q += double(fr.at(y, x)) * fr.at(y, x);
    }
    const double m = s / 3.0;
    return std::pair{m, q / 3.0 - m * m};
  };
  // cell (1, 2) covers frame rows 4..5 and columns 10..12
  const auto cell = f.spatial.cell(1 * 4 + 2);
  const auto [m1, v1] = pixel_stats(4, 10);
  const auto [m2, v2] = pixel_stats(4, 11);
  CHECK(cell[0] == doctest::Approx((m1 + m2) / 2).epsilon(1e-5));
  CHECK(cell[1] == doctest::Approx((v1 + v2) / 2).epsilon(1e-4));
  const auto [m3, v3] = pixel_stats(5, 12);
  CHECK(cell[6] == doctest::Approx(m3).epsilon(1e-5));
  CHECK(cell[7] == doctest::Approx(v3).epsilon(1e-4));
}

TEST_CASE("mirrored window negates horizontal motion") {
  std::mt19937_64 rng(5);
  const std::vector<Frame> frames{testing::random_frame(16, 16, 1, rng), testing::random_frame(16, 16, 1, rng)};
  const std::vector<FlowField> flows{FlowField::constant(16, 16, 2.0f, 1.0f)};
  const StreamFeatures plain = extract_features(pointers(frames), flows, {0, 0, 16, 16, false});
  const StreamFeatures flipped = extract_features(pointers(frames), flows, {0, 0, 16, 16, true});
  const int du = FeatureConfig{}.temporal_channels() - 4;
  CHECK(plain.temporal.cell(0)[du] == doctest::Approx(2.0 / std::sqrt(5.0)));
  CHECK(flipped.temporal.cell(0)[du] == doctest::Approx(-2.0 / std::sqrt(5.0)));
  CHECK(flipped.temporal.cell(0)[du + 1] == plain.temporal.cell(0)[du + 1]);
  // mirroring moves the left column of cells to the right
  CHECK(flipped.spatial.cell(3)[0] == plain.spatial.cell(0)[2]);
}

TEST_CASE("feature errors") {
  std::mt19937_64 rng(6);
  const std::vector<Frame> frames{testing::random_frame(16, 16, 1, rng), testing::random_frame(16, 16, 1, rng)};
  CHECK_THROWS(features_of(frames, {}));
  CHECK_THROWS(features_of(frames, {FlowField::zeros(8, 16)}));
  CHECK_THROWS(extract_features(pointers(frames), std::vector<FlowField>{FlowField::zeros(16, 16)},
                                CropWindow{10, 10, 8, 8, false}));
  const StreamFeatures single = features_of({frames[0]}, {});
  CHECK(single.temporal.cell_count() == 0);
  CHECK(single.spatial.cell_count() == 16);
}

TEST_CASE("descriptors from segment features") {
  std::mt19937_64 rng(7);
  auto random_features = [&] {
    const std::vector<Frame> frames{testing::random_frame(16, 16, 1, rng), testing::random_frame(16, 16, 1, rng)};
    return features_of(frames, {testing::random_flow(16, 16, 3.0f, rng)});
  };
  const StreamFeatures a = random_features(), b = random_features();
  const SketchParams sp = make_sketch_params(8, 128, 1), tp = make_sketch_params(12, 128, 2);
  CHECK(make_descriptor(std::vector{a}, sp, Stream::Spatial) ==
        normalize_descriptor(tensor_sketch_pool(a.spatial, sp)));
  CHECK(make_descriptor(std::vector{a, b}, tp, Stream::Temporal) ==
        make_descriptor(std::vector{b, a}, tp, Stream::Temporal));
  CHECK(make_descriptor(std::vector{a, b}, tp, Stream::Temporal) ==
        make_descriptor(std::vector{a, b}, tp, Stream::Temporal));
  CHECK_THROWS(make_descriptor(std::vector{a}, tp, Stream::Spatial));
  CHECK_THROWS(make_descriptor(std::vector<StreamFeatures>{}, sp, Stream::Spatial));
}

TEST_CASE("ten crops") {
  const Frame f(4, 4, 1, {0.00f, 0.01f, 0.02f, 0.03f, 0.10f, 0.11f, 0.12f, 0.13f,
                          0.20f, 0.21f, 0.22f, 0.23f, 0.30f, 0.31f, 0.32f, 0.33f});
  const auto crops = tencrop(f, 2, 2);
  REQUIRE(crops.size() == 10);
  CHECK(crops[0] == Frame(2, 2, 1, {0.00f, 0.01f, 0.10f, 0.11f}));
  CHECK(crops[1] == Frame(2, 2, 1, {0.02f, 0.03f, 0.12f, 0.13f}));
  CHECK(crops[2] == Frame(2, 2, 1, {0.20f, 0.21f, 0.30f, 0.31f}));
  CHECK(crops[3] == Frame(2, 2, 1, {0.22f, 0.23f, 0.32f, 0.33f}));
  CHECK(crops[4] == Frame(2, 2, 1, {0.11f, 0.12f, 0.21f, 0.22f}));
  CHECK(crops[5] == Frame(2, 2, 1, {0.01f, 0.00f, 0.11f, 0.10f}));

  const auto same = tencrop(f, 4, 4);
  for (int i = 0; i < 5; ++i) CHECK(same[i] == f);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) CHECK(same[7].at(y, x) == f.at(y, 3 - x));
  }
  const Frame sym(2, 4, 1, {0.1f, 0.2f, 0.2f, 0.1f, 0.5f, 0.6f, 0.6f, 0.5f});
  const auto sc = tencrop(sym, 2, 4);
  for (int i = 0; i < 5; ++i) CHECK(sc[i] == sc[i + 5]);
  CHECK_THROWS(tencrop(f, 5, 2));

  const FlowField flow = FlowField::constant(4, 4, 1.5f, -0.5f);
  const FlowField mirrored = crop_flow(flow, {0, 0, 2, 2, true});
  CHECK(mirrored.u(0, 0) == -1.5f);
  CHECK(mirrored.v(1, 1) == -0.5f);
}

TEST_CASE("late fusion") {
  const std::vector<double> s{2, 0}, t{0, 1};
  const auto fused = late_fuse(s, t, 1, 1);
  CHECK(fused == std::vector<double>{1.0, 0.5});
  CHECK(argmax(fused) == 0);
  CHECK(late_fuse(s, t, 1, 0) == s);
  CHECK(late_fuse(s, s, 1, 1) == s);
  CHECK_THROWS(late_fuse(s, std::vector<double>{1}, 1, 1));
  CHECK_THROWS(late_fuse(s, t, 0, 0));
  CHECK_THROWS(late_fuse(s, t, -1, 2));
}

TEST_CASE("logistic regression on separable data") {
  std::mt19937_64 rng(8);
  std::vector<Descriptor> data;
  std::vector<int> labels;
  for (int n = 0; n < 40; ++n) {
    const int y = n % 2;
    Descriptor d{{std::uniform_real_distribution<float>(-1, 1)(rng), 0.0f, 0.0f}};
    d.values[1] = (y == 1 ? 1.0f : -1.0f) * std::uniform_real_distribution<float>(0.2f, 1.0f)(rng);
    d.values[2] = std::uniform_real_distribution<float>(-1, 1)(rng);
    data.push_back(d);
    labels.push_back(y);
  }
  const ClassifierModel m = fit_logistic(data, labels, 2, {200, 1.0, 0.0});
  int correct = 0;
  for (int n = 0; n < 40; ++n) correct += static_cast<int>(argmax(m.scores(data[n]))) == labels[n];
  CHECK(correct == 40);
  CHECK(m.loss_history.back() < m.loss_history.front());

  const ClassifierModel zero = fit_logistic(data, labels, 2, {0, 1.0, 0.0});
  for (const auto& d : data) {
    const auto s = zero.scores(d);
    CHECK(s[0] == s[1]);
  }
  CHECK(cross_entropy(zero, data, labels) == doctest::Approx(std::log(2.0)));

  // small steps: cross-entropy never rises by more than 1e-3
  const ClassifierModel slow = fit_logistic(data, labels, 2, {50, 0.05, 1e-4});
  for (std::size_t e = 1; e < slow.loss_history.size(); ++e) {
    CHECK(slow.loss_history[e] <= slow.loss_history[e - 1] + 1e-3);
  }
  const ClassifierModel again = fit_logistic(data, labels, 2, {200, 1.0, 0.0});
  CHECK(again.weights == m.weights);
  CHECK_THROWS(fit_logistic(data, std::vector<int>(40, 2), 2, {}));
}

TEST_CASE("training regimes") {
  CHECK(TrainRegime::parse("rts:5") == TrainRegime::with_rts(5));
  CHECK(TrainRegime::parse("fixed:1") == TrainRegime::fixed_stride(1));
  CHECK(TrainRegime::with_rts(0).name() == "rts:0");
  for (const char* s : {"rts", "rts:", "fixed:x", "slow:1", "rts:-1"}) CHECK_THROWS(TrainRegime::parse(s));
}

TEST_CASE("training is deterministic and independent of threads") {
  const Dataset ds = small_dataset(2, 3, 40);
  const auto videos = all_videos(ds);
  PipelineConfig cfg = small_pipeline();
  const TwoStreamModel a = train_classifier(videos, TrainRegime::with_rts(2), cfg, 5);
  cfg.threads = 3;
  const TwoStreamModel b = train_classifier(videos, TrainRegime::with_rts(2), cfg, 5);
  CHECK(a.spatial.weights == b.spatial.weights);
  CHECK(a.temporal.weights == b.temporal.weights);
  CHECK(a.temporal.loss_history.size() == 3);
  const TwoStreamModel c = train_classifier(videos, TrainRegime::with_rts(2), cfg, 6);
  CHECK(c.temporal.weights != a.temporal.weights);

  std::vector<const SyntheticVideo*> one_class{&ds.videos[0], &ds.videos[1]};
  CHECK_THROWS_AS(train_classifier(one_class, TrainRegime::with_rts(2), cfg, 5), std::invalid_argument);
  cfg.clip_len = 11;
  CHECK_THROWS_AS(train_classifier(videos, TrainRegime::fixed_stride(5), cfg, 5), std::out_of_range);
}

TEST_CASE("prediction protocol") {
  const Dataset ds = small_dataset(2, 2, 30);
  PipelineConfig cfg = small_pipeline();
  const TwoStreamModel model = train_classifier(all_videos(ds), TrainRegime::with_rts(1), cfg, 3);
  const SyntheticVideo& video = ds.videos[2];
  std::vector<int> kept(30);
  std::iota(kept.begin(), kept.end(), 0);

  // one anchor, center crop only: the middle clip scored once
  cfg.eval_anchors = 1;
  cfg.ten_crop = false;
  const StreamScores s = predict_video(model, video, kept, cfg);
  const int start = (30 - cfg.clip_len + 1) / 2;
  std::vector<const Frame*> frames;
  std::vector<FlowField> flows;
  for (int k = 0; k < cfg.clip_len; ++k) frames.push_back(&video.frames[start + k]);
  for (int k = 0; k + 1 < cfg.clip_len; ++k) flows.push_back(video.tracks.displacement(start + k, start + k + 1));
  const auto windows = ten_crop_windows(48, 48, cfg.crop_height, cfg.crop_width);
  const std::vector<StreamFeatures> feats{extract_features(frames, flows, windows[4])};
  const auto sp = model.spatial.scores(make_descriptor(feats, model.spatial_sketch, Stream::Spatial));
  const auto tp = model.temporal.scores(make_descriptor(feats, model.temporal_sketch, Stream::Temporal));
  for (std::size_t k = 0; k < sp.size(); ++k) {
    CHECK(s.spatial[k] == doctest::Approx(sp[k]).epsilon(1e-12));
    CHECK(s.temporal[k] == doctest::Approx(tp[k]).epsilon(1e-12));
  }

  CHECK_THROWS_AS(predict_video(model, video, std::vector<int>{0, 1, 2}, cfg), std::out_of_range);
  CHECK_THROWS_AS(predict_video(model, video, std::vector<int>{0, 99}, cfg), std::out_of_range);
}

TEST_CASE("still video scores equal across anchors and crops") {
  const Dataset ds = small_dataset(2, 2, 30);
  PipelineConfig cfg = small_pipeline();
  const TwoStreamModel model = train_classifier(all_videos(ds), TrainRegime::with_rts(1), cfg, 3);
  const SyntheticVideo still = still_video(30, 48, 1);
  std::vector<int> kept(30);
  std::iota(kept.begin(), kept.end(), 0);
  cfg.ten_crop = false;
  cfg.eval_anchors = 1;
  const StreamScores one = predict_video(model, still, kept, cfg);
  cfg.eval_anchors = 25;
  const StreamScores many = predict_video(model, still, kept, cfg);
  for (std::size_t k = 0; k < one.spatial.size(); ++k) {
    CHECK(many.spatial[k] == doctest::Approx(one.spatial[k]).epsilon(1e-9));
    CHECK(many.temporal[k] == doctest::Approx(one.temporal[k]).epsilon(1e-9));
  }
}

TEST_CASE("dataset split") {
  const Dataset ds = small_dataset(3, 5, 4);
  std::vector<const SyntheticVideo*> train, test;
  split_dataset(ds, 0.6, train, test);
  CHECK(train.size() == 9);
  CHECK(test.size() == 6);
  split_dataset(ds, 0.5, train, test);
  CHECK(train.size() == 9);
  CHECK_THROWS(split_dataset(ds, 1.0, train, test));
}

TEST_CASE("small robustness experiment") {
  const Dataset ds = small_dataset(2, 4, 60);
  ExperimentConfig cfg;
  cfg.regimes = {TrainRegime::fixed_stride(1), TrainRegime::with_rts(2)};
  cfg.perturbations = {ResampleMode::none(), ResampleMode::fixed(1)};
  cfg.seeds = {1};
  cfg.sweep_max_strides = {0, 2};
  cfg.sweep_perturbation = ResampleMode::random(2);
  cfg.train_fraction = 0.5;
  cfg.pipeline = small_pipeline();
  cfg.pipeline.ten_crop = false;
  const ExperimentReport a = robustness_experiment(ds, cfg);
  CHECK(a.rows.size() == 4);
  CHECK(a.sweep.size() == 2);
  for (const auto& r : a.rows) CHECK((r.accuracy >= 0.0 && r.accuracy <= 1.0));
  const std::string grid = grid_tsv(a);
  CHECK(grid.substr(0, grid.find('\n')) == "perturbation\tfixed:1\trts:2");
  CHECK(std::count(grid.begin(), grid.end(), '\n') == 3);
  const std::string sweep = sweep_tsv(a);
  CHECK(std::count(sweep.begin(), sweep.end(), '\n') == 5);

  cfg.pipeline.threads = 3;
  const ExperimentReport b = robustness_experiment(ds, cfg);
  CHECK(report_tsv(a) == report_tsv(b));
  CHECK(sweep_tsv(a) == sweep_tsv(b));

  cfg.perturbations = {ResampleMode::fixed(40)};
  CHECK_THROWS(robustness_experiment(ds, cfg));
}

TEST_CASE("trend checks") {
  ExperimentReport r;
  r.regimes = {"fixed:1", "rts:5"};
  r.perturbations = {"none", "fixed:1", "random:5"};
  r.seeds = {1};
  r.sweep_perturbation = "random:5";
  auto add = [&](const char* reg, const char* p, double a) { r.rows.push_back({reg, p, 1, a}); };
  add("fixed:1", "none", 0.9);
  add("fixed:1", "fixed:1", 0.8);
  add("fixed:1", "random:5", 0.5);
  add("rts:5", "none", 0.9);
  add("rts:5", "fixed:1", 0.85);
  add("rts:5", "random:5", 0.7);
  r.sweep = {{0, 1, 0.4}, {2, 1, 0.6}, {4, 1, 0.6}};
  auto checks = check_trends(r, 0.03);
  REQUIRE(checks.size() == 3);
  for (const auto& c : checks) CHECK_MESSAGE(c.passed, c.name << ": " << c.detail);

  r.rows[1].accuracy = 0.95;
  r.sweep[2].accuracy = 0.59;
  checks = check_trends(r, 0.25);
  CHECK_FALSE(checks[0].passed);
  CHECK_FALSE(checks[1].passed);
  CHECK_FALSE(checks[2].passed);
}
