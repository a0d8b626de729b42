#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mrv/parallel.hpp"
#include "mrv/pipeline.hpp"

namespace mrv {

namespace {

// FNV-1a, for keying random streams by name.
std::uint64_t name_key(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string format_accuracy(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", a);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  pipeline.validate();
  if (regimes.empty() || perturbations.empty() || seeds.empty()) {
    throw std::invalid_argument("experiment needs at least one regime, perturbation and seed");
  }
  for (const auto& r : regimes) {
    if (r.kind == TrainRegime::Kind::FixedStride ? r.stride < 1 : r.stride < 0) {
      throw std::invalid_argument("bad regime " + r.name());
    }
  }
  for (int m : sweep_max_strides) {
    if (m < 0) throw std::invalid_argument("sweep max strides must be >= 0");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train fraction must be in (0, 1)");
  }
}

void split_dataset(const Dataset& ds, double train_fraction,
                   std::vector<const SyntheticVideo*>& train,
                   std::vector<const SyntheticVideo*>& test) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split_dataset: fraction must be in (0, 1)");
  }
  train.clear();
  test.clear();
  std::map<int, std::vector<const SyntheticVideo*>> by_class;
  for (const auto& v : ds.videos) by_class[v.class_id].push_back(&v);
  for (auto& [cls, videos] : by_class) {
    const auto n_train = static_cast<std::size_t>(std::ceil(train_fraction * videos.size()));
    for (std::size_t i = 0; i < videos.size(); ++i) (i < n_train ? train : test).push_back(videos[i]);
  }
}

double evaluate_accuracy(const TwoStreamModel& model, std::span<const SyntheticVideo* const> test,
                         const ResampleMode& perturbation, const PipelineConfig& cfg,
                         std::uint64_t seed) {
  if (test.empty()) throw std::invalid_argument("evaluate_accuracy: empty test set");
  std::vector<char> correct(test.size(), 0);
  const std::uint64_t key = name_key(perturbation.name());
  parallel_for(test.size(), cfg.threads, [&](std::size_t i) {
    const SyntheticVideo& video = *test[i];
    Rng rng = make_rng(seed, {key, i});
    const std::vector<int> kept = resample_indices(video.length(), perturbation, rng);
    PipelineConfig serial = cfg;
    serial.threads = 1;
    const StreamScores s = predict_video(model, video, kept, serial);
    const auto fused = late_fuse(s.spatial, s.temporal, cfg.weight_spatial, cfg.weight_temporal);
    correct[i] = static_cast<int>(argmax(fused)) == video.class_id;
  });
  return static_cast<double>(std::count(correct.begin(), correct.end(), 1)) / test.size();
}

ExperimentReport robustness_experiment(const Dataset& ds, const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<const SyntheticVideo*> train, test;
  split_dataset(ds, cfg.train_fraction, train, test);
  if (test.empty()) throw std::invalid_argument("robustness_experiment: empty test split");

  ExperimentReport report;
  for (const auto& r : cfg.regimes) report.regimes.push_back(r.name());
  for (const auto& p : cfg.perturbations) report.perturbations.push_back(p.name());
  report.seeds = cfg.seeds;
  report.sweep_perturbation = cfg.sweep_perturbation.name();

  for (std::uint64_t seed : cfg.seeds) {
    for (const auto& regime : cfg.regimes) {
      const TwoStreamModel model =
          train_classifier(train, regime, cfg.pipeline, derive_seed(seed, {name_key(regime.name())}));
      for (const auto& p : cfg.perturbations) {
        report.rows.push_back(
            {regime.name(), p.name(), seed, evaluate_accuracy(model, test, p, cfg.pipeline, seed)});
      }
    }
    for (int m : cfg.sweep_max_strides) {
      const TrainRegime regime = TrainRegime::with_rts(m);
      const TwoStreamModel model =
          train_classifier(train, regime, cfg.pipeline, derive_seed(seed, {name_key(regime.name())}));
      report.sweep.push_back(
          {m, seed, evaluate_accuracy(model, test, cfg.sweep_perturbation, cfg.pipeline, seed)});
    }
  }
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

double ExperimentReport::mean_accuracy(const std::string& regime,
                                       const std::string& perturbation) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.regime == regime && r.perturbation == perturbation) {
      sum += r.accuracy;
      ++n;
    }
  }
  if (n == 0) throw std::out_of_range("no rows for " + regime + " / " + perturbation);
  return sum / n;
}

double ExperimentReport::sweep_mean(int max_stride) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : sweep) {
    if (r.max_stride == max_stride) {
      sum += r.accuracy;
      ++n;
    }
  }
  if (n == 0) throw std::out_of_range("no sweep rows for max stride " + std::to_string(max_stride));
  return sum / n;
}

std::string report_tsv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "regime\tperturbation\tseed\taccuracy\n";
  for (const auto& r : report.rows) {
    os << r.regime << '\t' << r.perturbation << '\t' << r.seed << '\t' << format_accuracy(r.accuracy)
       << '\n';
  }
  return os.str();
}

std::string grid_tsv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "perturbation";
  for (const auto& r : report.regimes) os << '\t' << r;
  os << '\n';
  for (const auto& p : report.perturbations) {
    os << p;
    for (const auto& r : report.regimes) os << '\t' << format_accuracy(report.mean_accuracy(r, p));
    os << '\n';
  }
  return os.str();
}

std::string sweep_tsv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "max_stride\tseed\taccuracy\n";
  std::vector<int> strides;
  for (const auto& r : report.sweep) {
    os << r.max_stride << '\t' << r.seed << '\t' << format_accuracy(r.accuracy) << '\n';
    if (std::find(strides.begin(), strides.end(), r.max_stride) == strides.end()) {
      strides.push_back(r.max_stride);
    }
  }
  for (int m : strides) os << m << "\tmean\t" << format_accuracy(report.sweep_mean(m)) << '\n';
  return os.str();
}

std::vector<TrendCheck> check_trends(const ExperimentReport& report, double min_margin) {
  std::vector<TrendCheck> out;
  std::string rts, fixed;
  for (const auto& name : report.regimes) {
    const TrainRegime r = TrainRegime::parse(name);
    if (r.kind == TrainRegime::Kind::WithRts && rts.empty()) rts = name;
    if (r.kind == TrainRegime::Kind::FixedStride && fixed.empty()) fixed = name;
  }
  std::string random;
  std::vector<std::pair<int, std::string>> fixed_perts;
  for (const auto& name : report.perturbations) {
    const ResampleMode m = ResampleMode::parse(name);
    if (m.kind == ResampleMode::Kind::Random && random.empty()) random = name;
    // keyed by the gap between kept frames; none sorts first
    if (m.kind == ResampleMode::Kind::None) fixed_perts.emplace_back(0, name);
    if (m.kind == ResampleMode::Kind::Fixed) fixed_perts.emplace_back(m.k + 1, name);
    if (m.kind == ResampleMode::Kind::FixedEvery) fixed_perts.emplace_back(m.k, name);
  }
  std::sort(fixed_perts.begin(), fixed_perts.end());

  if (!rts.empty() && !fixed.empty() && !random.empty()) {
    const double a = report.mean_accuracy(rts, random), b = report.mean_accuracy(fixed, random);
    TrendCheck c{"rts_beats_fixed_under_random", a - b >= min_margin - 1e-12, ""};
    c.detail = rts + " " + format_accuracy(a) + " vs " + fixed + " " + format_accuracy(b) + " under " +
               random + ", margin " + format_accuracy(a - b) + " (need " + format_accuracy(min_margin) + ")";
    out.push_back(c);
  }
  if (!fixed.empty() && fixed_perts.size() >= 2) {
    TrendCheck c{"fixed_nonincreasing_over_fixed_perturbations", true, fixed + ":"};
    double prev = 0.0;
    for (std::size_t i = 0; i < fixed_perts.size(); ++i) {
      const double a = report.mean_accuracy(fixed, fixed_perts[i].second);
      if (i > 0 && a > prev) c.passed = false;
      c.detail += " " + fixed_perts[i].second + "=" + format_accuracy(a);
      prev = a;
    }
    out.push_back(c);
  }
  std::vector<int> strides;
  for (const auto& r : report.sweep) strides.push_back(r.max_stride);
  std::sort(strides.begin(), strides.end());
  strides.erase(std::unique(strides.begin(), strides.end()), strides.end());
  if (strides.size() >= 2) {
    TrendCheck c{"sweep_nondecreasing_in_max_stride", true, "under " + report.sweep_perturbation + ":"};
    double prev = 0.0;
    for (std::size_t i = 0; i < strides.size(); ++i) {
      const double a = report.sweep_mean(strides[i]);
      if (i > 0 && a < prev) c.passed = false;
      c.detail += " rts:" + std::to_string(strides[i]) + "=" + format_accuracy(a);
      prev = a;
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace mrv
