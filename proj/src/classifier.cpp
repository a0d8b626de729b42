#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mrv/pipeline.hpp"

namespace mrv {

ClassifierModel ClassifierModel::zeros(int classes, int dim) {
  if (classes < 1 || dim < 1) throw std::invalid_argument("ClassifierModel: bad shape");
  ClassifierModel m;
  m.classes = classes;
  m.dim = dim;
  m.weights.assign(static_cast<std::size_t>(classes) * dim, 0.0f);
  m.bias.assign(static_cast<std::size_t>(classes), 0.0f);
  return m;
}

void ClassifierModel::fit_standardization(std::span<const Descriptor> data) {
  if (data.empty()) throw std::invalid_argument("fit_standardization: no data");
  std::vector<double> mean(static_cast<std::size_t>(dim), 0.0), sq(mean.size(), 0.0);
  for (const auto& d : data) {
    if (static_cast<int>(d.size()) != dim) throw std::invalid_argument("fit_standardization: length mismatch");
    for (int i = 0; i < dim; ++i) mean[i] += d.values[i];
  }
  for (double& m : mean) m /= data.size();
  for (const auto& d : data) {
    for (int i = 0; i < dim; ++i) sq[i] += (d.values[i] - mean[i]) * (d.values[i] - mean[i]);
  }
  center.assign(mean.begin(), mean.end());
  scale.resize(mean.size());
  const double target = 1.0 / std::sqrt(static_cast<double>(dim));
  for (int i = 0; i < dim; ++i) {
    const double sd = std::sqrt(sq[i] / data.size());
    scale[i] = static_cast<float>(sd > 1e-8 ? target / sd : 0.0);
  }
}

namespace {

// Standardized copy of a descriptor.
std::vector<double> standardize(const ClassifierModel& m, const Descriptor& d) {
  if (static_cast<int>(d.size()) != m.dim) throw std::invalid_argument("scores: descriptor length mismatch");
  std::vector<double> x(d.values.begin(), d.values.end());
  if (!m.center.empty()) {
    for (int i = 0; i < m.dim; ++i) x[i] = (x[i] - m.center[i]) * m.scale[i];
  }
  return x;
}

std::vector<double> raw_scores(const ClassifierModel& m, std::span<const double> x) {
  std::vector<double> out(static_cast<std::size_t>(m.classes));
  for (int k = 0; k < m.classes; ++k) {
    const float* w = m.weights.data() + static_cast<std::size_t>(k) * m.dim;
    double s = m.bias[k];
    for (int i = 0; i < m.dim; ++i) s += double(w[i]) * x[i];
    out[k] = s;
  }
  return out;
}

}  // namespace

std::vector<double> ClassifierModel::scores(const Descriptor& d) const {
  return raw_scores(*this, standardize(*this, d));
}

std::size_t argmax(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("argmax: empty scores");
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

namespace {

void check_data(const ClassifierModel& model, std::span<const Descriptor> data,
                std::span<const int> labels) {
  if (data.empty() || data.size() != labels.size()) {
    throw std::invalid_argument("classifier: descriptors and labels must be nonempty and aligned");
  }
  for (int y : labels) {
    if (y < 0 || y >= model.classes) throw std::invalid_argument("classifier: label out of range");
  }
}

// Softmax probabilities, computed stably.
std::vector<double> softmax(std::vector<double> s) {
  const double top = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (double& v : s) z += (v = std::exp(v - top));
  for (double& v : s) v /= z;
  return s;
}

}  // namespace

double cross_entropy(const ClassifierModel& model, std::span<const Descriptor> data,
                     std::span<const int> labels) {
  check_data(model, data, labels);
  double total = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const std::vector<double> s = model.scores(data[n]);
    const double top = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double v : s) z += std::exp(v - top);
    total += std::log(z) + top - s[labels[n]];
  }
  return total / data.size();
}

void gradient_step(ClassifierModel& model, std::span<const Descriptor> data,
                   std::span<const int> labels, double learning_rate, double l2) {
  check_data(model, data, labels);
  const int k_count = model.classes, dim = model.dim;
  std::vector<double> gw(model.weights.size(), 0.0), gb(model.bias.size(), 0.0);
  for (std::size_t n = 0; n < data.size(); ++n) {
    const std::vector<double> x = standardize(model, data[n]);
    const std::vector<double> p = softmax(raw_scores(model, x));
    for (int k = 0; k < k_count; ++k) {
      const double r = p[k] - (labels[n] == k ? 1.0 : 0.0);
      gb[k] += r;
      double* row = gw.data() + static_cast<std::size_t>(k) * dim;
      for (int i = 0; i < dim; ++i) row[i] += r * x[i];
    }
  }
  const double inv_n = 1.0 / data.size();
  for (std::size_t i = 0; i < gw.size(); ++i) {
    const double g = gw[i] * inv_n + l2 * model.weights[i];
    model.weights[i] = static_cast<float>(model.weights[i] - learning_rate * g);
  }
  for (std::size_t k = 0; k < gb.size(); ++k) {
    model.bias[k] = static_cast<float>(model.bias[k] - learning_rate * gb[k] * inv_n);
  }
}

ClassifierModel fit_logistic(std::span<const Descriptor> data, std::span<const int> labels,
                             int classes, const LogisticConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("fit_logistic: no data");
  ClassifierModel model = ClassifierModel::zeros(classes, static_cast<int>(data.front().size()));
  model.epochs = cfg.epochs;
  model.fit_standardization(data);
  for (int e = 0; e < cfg.epochs; ++e) {
    model.loss_history.push_back(cross_entropy(model, data, labels));
    gradient_step(model, data, labels, cfg.learning_rate, cfg.l2);
  }
  return model;
}

}  // namespace mrv
