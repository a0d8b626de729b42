#include "mrv/flow_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mrv/parallel.hpp"

namespace mrv {

namespace {

// Bilinear sampling stencil at a (possibly out-of-range) point.
struct Tap {
  int x0, x1, y0, y1;
  double fx, fy;
  bool inside;
  bool clamped_x, clamped_y;
};

Tap make_tap(double x, double y, int width, int height) {
  Tap t{};
  const double max_x = width - 1;
  const double max_y = height - 1;
  t.inside = x >= 0.0 && x <= max_x && y >= 0.0 && y <= max_y;
  t.clamped_x = x < 0.0 || x > max_x;
  t.clamped_y = y < 0.0 || y > max_y;
  const double cx = std::clamp(x, 0.0, max_x);
  const double cy = std::clamp(y, 0.0, max_y);
  // cx, cy >= 0, so truncation is floor
  t.x0 = std::min(static_cast<int>(cx), std::max(width - 2, 0));
  t.y0 = std::min(static_cast<int>(cy), std::max(height - 2, 0));
  t.x1 = std::min(t.x0 + 1, width - 1);
  t.y1 = std::min(t.y0 + 1, height - 1);
  t.fx = cx - t.x0;
  t.fy = cy - t.y0;
  return t;
}

template <typename Get>
double interpolate(const Tap& t, Get&& get) {
  const double a = (1.0 - t.fx) * get(t.y0, t.x0) + t.fx * get(t.y0, t.x1);
  const double b = (1.0 - t.fx) * get(t.y1, t.x0) + t.fx * get(t.y1, t.x1);
  return (1.0 - t.fy) * a + t.fy * b;
}

// Partial derivatives of the interpolant with respect to the sample point.
// Zero along an axis where the coordinate was clamped.
template <typename Get>
std::pair<double, double> interpolate_grad(const Tap& t, Get&& get) {
  const double v00 = get(t.y0, t.x0), v01 = get(t.y0, t.x1);
  const double v10 = get(t.y1, t.x0), v11 = get(t.y1, t.x1);
  double dx = (1.0 - t.fy) * (v01 - v00) + t.fy * (v11 - v10);
  double dy = (1.0 - t.fx) * (v10 - v00) + t.fx * (v11 - v01);
  if (t.clamped_x || t.x1 == t.x0) dx = 0.0;
  if (t.clamped_y || t.y1 == t.y0) dy = 0.0;
  return {dx, dy};
}

void require_same(const Frame& a, const Frame& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": frame shape mismatch");
}

void require_same(const Frame& f, const FlowField& flow, const char* what) {
  if (f.height() != flow.height() || f.width() != flow.width()) {
    throw std::invalid_argument(std::string(what) + ": frame and flow sizes differ");
  }
}

void require_same(const FlowField& a, const FlowField& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": flow size mismatch");
}

void require_same(const Frame& f, const BinaryMask& m, const char* what) {
  if (f.height() != m.height() || f.width() != m.width()) {
    throw std::invalid_argument(std::string(what) + ": mask size mismatch");
  }
}

struct TermResult {
  double value;
  double included_fraction;
};

// One direction of the masked photometric loss: reference vs. `source`
// sampled along `flow`. Optionally accumulates d/d(flow) into grad_u/grad_v.
TermResult photometric_term(const Frame& reference, const Frame& source, const FlowField& flow,
                            const BinaryMask& include, const CharbonnierParams& params,
                            std::vector<float>* grad_u, std::vector<float>* grad_v) {
  const int h = reference.height(), w = reference.width(), c = reference.channels();
  const std::size_t included = include.count();
  if (included == 0) return {0.0, 0.0};
  const double norm = 1.0 / (static_cast<double>(included) * c);
  const auto ref = reference.data(), src = source.data();
  const auto fu = flow.u(), fv = flow.v();
  const auto bits = include.bits();
  double sum = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!bits[i]) continue;
      const Tap tap = make_tap(x + static_cast<double>(fu[i]), y + static_cast<double>(fv[i]), w, h);
      double gu = 0.0, gv = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        auto get = [&](int yy, int xx) {
          return static_cast<double>(src[(static_cast<std::size_t>(yy) * w + xx) * c + ch]);
        };
        const double residual = ref[i * c + ch] - interpolate(tap, get);
        sum += charbonnier(residual, params);
        if (grad_u) {
          const auto [dx, dy] = interpolate_grad(tap, get);
          // residual = I1 - I2(x+u, y+v) so d residual / du = -dI2/dx
          const double d = charbonnier_derivative(residual, params);
          gu -= d * dx;
          gv -= d * dy;
        }
      }
      if (grad_u) {
        (*grad_u)[i] = static_cast<float>(gu * norm);
        (*grad_v)[i] = static_cast<float>(gv * norm);
      }
    }
  }
  return {sum * norm, static_cast<double>(included) / include.pixel_count()};
}

}  // namespace

void CharbonnierParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("Charbonnier alpha must be in (0,1]");
  if (!(epsilon > 0.0)) throw std::invalid_argument("Charbonnier epsilon must be > 0");
}

void OcclusionParams::validate() const {
  if (!(alpha1 >= 0.0) || !(alpha2 >= 0.0)) {
    throw std::invalid_argument("occlusion tolerances must be >= 0");
  }
}

WarpResult inverse_warp(const Frame& target, const FlowField& flow) {
  require_same(target, flow, "inverse_warp");
  const int h = target.height(), w = target.width(), c = target.channels();
  std::vector<float> out(target.data().size());
  std::vector<std::uint8_t> valid(target.pixel_count());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Tap tap = make_tap(x + static_cast<double>(flow.u(y, x)),
                               y + static_cast<double>(flow.v(y, x)), w, h);
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      valid[i] = tap.inside ? 1 : 0;
      for (int ch = 0; ch < c; ++ch) {
        const double s = interpolate(tap, [&](int yy, int xx) {
          return static_cast<double>(target.at(yy, xx, ch));
        });
        out[i * c + ch] = static_cast<float>(std::clamp(s, 0.0, 1.0));
      }
    }
  }
  return {Frame(h, w, c, std::move(out)), BinaryMask(h, w, std::move(valid))};
}

double charbonnier(double x, const CharbonnierParams& params) {
  // base > 0 always, so exp/log is safe and cheaper than pow here
  return std::exp(params.alpha * std::log(x * x + params.epsilon * params.epsilon));
}

double charbonnier_derivative(double x, const CharbonnierParams& params) {
  return 2.0 * params.alpha * x *
         std::exp((params.alpha - 1.0) * std::log(x * x + params.epsilon * params.epsilon));
}

double reconstruction_loss(const Frame& reference, const Frame& reconstructed,
                           const BinaryMask& include, const CharbonnierParams& params) {
  require_same(reference, reconstructed, "reconstruction_loss");
  require_same(reference, include, "reconstruction_loss");
  const std::size_t included = include.count();
  if (included == 0) return 0.0;
  const int c = reference.channels();
  const auto a = reference.data();
  const auto b = reconstructed.data();
  double sum = 0.0;
  for (std::size_t p = 0; p < include.pixel_count(); ++p) {
    if (!include.bits()[p]) continue;
    for (int ch = 0; ch < c; ++ch) {
      sum += charbonnier(static_cast<double>(a[p * c + ch]) - b[p * c + ch], params);
    }
  }
  return sum / (static_cast<double>(included) * c);
}

FlowField warp_flow(const FlowField& backward, const FlowField& forward) {
  require_same(backward, forward, "warp_flow");
  const int h = forward.height(), w = forward.width();
  std::vector<float> u(forward.pixel_count()), v(forward.pixel_count());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Tap tap = make_tap(x + static_cast<double>(forward.u(y, x)),
                               y + static_cast<double>(forward.v(y, x)), w, h);
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      u[i] = static_cast<float>(
          interpolate(tap, [&](int yy, int xx) { return static_cast<double>(backward.u(yy, xx)); }));
      v[i] = static_cast<float>(
          interpolate(tap, [&](int yy, int xx) { return static_cast<double>(backward.v(yy, xx)); }));
    }
  }
  return FlowField(h, w, std::move(u), std::move(v));
}

namespace {

BinaryMask one_sided_flags(const FlowField& flow, const FlowField& other,
                           const OcclusionParams& params) {
  const FlowField sampled = warp_flow(other, flow);
  std::vector<std::uint8_t> bits(flow.pixel_count());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const double fu = flow.u()[i], fv = flow.v()[i];
    const double bu = sampled.u()[i], bv = sampled.v()[i];
    const double mismatch = (fu + bu) * (fu + bu) + (fv + bv) * (fv + bv);
    const double bound = params.alpha1 * (fu * fu + fv * fv + bu * bu + bv * bv) + params.alpha2;
    bits[i] = mismatch >= bound ? 1 : 0;
  }
  return BinaryMask(flow.height(), flow.width(), std::move(bits));
}

}  // namespace

OcclusionMasks occlusion_flags(const FlowField& forward, const FlowField& backward,
                               const OcclusionParams& params) {
  params.validate();
  require_same(forward, backward, "occlusion_flags");
  return {one_sided_flags(forward, backward, params), one_sided_flags(backward, forward, params)};
}

LossMasks loss_masks(const Frame& first, const Frame& second, const FlowField& forward,
                     const FlowField& backward, const OcclusionParams& params) {
  require_same(first, second, "loss_masks");
  require_same(first, forward, "loss_masks");
  require_same(first, backward, "loss_masks");
  const OcclusionMasks occ = occlusion_flags(forward, backward, params);
  const WarpResult fwd = inverse_warp(second, forward);
  const WarpResult bwd = inverse_warp(first, backward);
  return {~occ.forward & fwd.valid, ~occ.backward & bwd.valid};
}

LossReport masked_pair_loss(const Frame& first, const Frame& second, const FlowField& forward,
                            const FlowField& backward, const LossMasks& masks,
                            const CharbonnierParams& cparams) {
  cparams.validate();
  require_same(first, second, "masked_pair_loss");
  require_same(first, forward, "masked_pair_loss");
  require_same(first, backward, "masked_pair_loss");
  require_same(first, masks.forward, "masked_pair_loss");
  require_same(first, masks.backward, "masked_pair_loss");
  const TermResult f = photometric_term(first, second, forward, masks.forward, cparams, nullptr, nullptr);
  const TermResult b = photometric_term(second, first, backward, masks.backward, cparams, nullptr, nullptr);
  LossReport r;
  r.forward_term = f.value;
  r.backward_term = b.value;
  r.value = f.value + b.value;
  r.nonoccluded_fraction_fwd = f.included_fraction;
  r.nonoccluded_fraction_bwd = b.included_fraction;
  return r;
}

LossReport occlusion_aware_loss(const Frame& first, const Frame& second,
                                const FlowField& forward, const FlowField& backward,
                                const CharbonnierParams& cparams, const OcclusionParams& oparams) {
  return masked_pair_loss(first, second, forward, backward,
                          loss_masks(first, second, forward, backward, oparams), cparams);
}

FlowGradient masked_pair_gradient(const Frame& first, const Frame& second,
                                  const FlowField& forward, const FlowField& backward,
                                  const LossMasks& masks, const CharbonnierParams& cparams) {
  cparams.validate();
  require_same(first, second, "masked_pair_gradient");
  require_same(first, forward, "masked_pair_gradient");
  require_same(first, backward, "masked_pair_gradient");
  require_same(first, masks.forward, "masked_pair_gradient");
  require_same(first, masks.backward, "masked_pair_gradient");
  const int h = first.height(), w = first.width();
  const std::size_t n = first.pixel_count();
  std::vector<float> fu(n, 0.0f), fv(n, 0.0f), bu(n, 0.0f), bv(n, 0.0f);
  photometric_term(first, second, forward, masks.forward, cparams, &fu, &fv);
  photometric_term(second, first, backward, masks.backward, cparams, &bu, &bv);
  return {FlowField(h, w, std::move(fu), std::move(fv)), FlowField(h, w, std::move(bu), std::move(bv))};
}

FlowGradient loss_gradient_wrt_flow(const Frame& first, const Frame& second,
                                    const FlowField& forward, const FlowField& backward,
                                    const CharbonnierParams& cparams,
                                    const OcclusionParams& oparams) {
  return masked_pair_gradient(first, second, forward, backward,
                              loss_masks(first, second, forward, backward, oparams), cparams);
}

FlowGradient finite_difference_gradient(const FlowLossFn& loss, const FlowField& forward,
                                        const FlowField& backward, double step, int threads) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_difference_gradient: step must be > 0");
  require_same(forward, backward, "finite_difference_gradient");
  const std::size_t n = forward.pixel_count();
  const int h = forward.height(), w = forward.width();
  // components: [fwd u | fwd v | bwd u | bwd v]
  std::vector<float> grad(4 * n, 0.0f);

  const int workers = std::max(threads, 1);
  const std::size_t chunk = (4 * n + workers - 1) / workers;
  parallel_for(static_cast<std::size_t>(workers), workers, [&](std::size_t wi) {
    std::vector<float> comp[4] = {
        {forward.u().begin(), forward.u().end()}, {forward.v().begin(), forward.v().end()},
        {backward.u().begin(), backward.u().end()}, {backward.v().begin(), backward.v().end()}};
    auto eval = [&] {
      return loss(FlowField(h, w, comp[0], comp[1]), FlowField(h, w, comp[2], comp[3]));
    };
    const std::size_t lo = wi * chunk, hi = std::min(4 * n, lo + chunk);
    for (std::size_t k = lo; k < hi; ++k) {
      float& x = comp[k / n][k % n];
      const float base = x;
      const float plus = static_cast<float>(base + step);
      const float minus = static_cast<float>(base - step);
      x = plus;
      const double f_plus = eval();
      x = minus;
      const double f_minus = eval();
      x = base;
      grad[k] = static_cast<float>((f_plus - f_minus) /
                                   (static_cast<double>(plus) - static_cast<double>(minus)));
    }
  });

  auto slice = [&](int part) {
    return std::vector<float>(grad.begin() + part * n, grad.begin() + (part + 1) * n);
  };
  return {FlowField(h, w, slice(0), slice(1)), FlowField(h, w, slice(2), slice(3))};
}

GradientAgreement compare_flow_gradients(const FlowGradient& analytic, const FlowGradient& numeric,
                                         const FlowField& forward, const FlowField& backward,
                                         double step, double tolerance) {
  require_same(forward, backward, "compare_flow_gradients");
  require_same(forward, analytic.forward, "compare_flow_gradients");
  require_same(forward, analytic.backward, "compare_flow_gradients");
  require_same(forward, numeric.forward, "compare_flow_gradients");
  require_same(forward, numeric.backward, "compare_flow_gradients");
  const int h = forward.height(), w = forward.width();
  const double margin = 2.0 * step;
  auto smooth_at = [&](double coord, int extent) {
    const double frac = coord - std::floor(coord);
    return coord > margin && coord < extent - 1 - margin && frac > margin && frac < 1.0 - margin;
  };

  GradientAgreement out;
  auto visit = [&](double a, double n, bool usable) {
    if (!usable) {
      ++out.skipped;
      return;
    }
    const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-12});
    ++out.compared;
    if (rel < tolerance) ++out.within;
    out.max_relative_error = std::max(out.max_relative_error, rel);
  };
  const FlowField* flows[2] = {&forward, &backward};
  const FlowGradient* grads[2] = {&analytic, &numeric};
  for (int dir = 0; dir < 2; ++dir) {
    const FlowField& f = *flows[dir];
    const FlowField& ga = dir == 0 ? grads[0]->forward : grads[0]->backward;
    const FlowField& gn = dir == 0 ? grads[1]->forward : grads[1]->backward;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const bool interior = y > 0 && x > 0 && y < h - 1 && x < w - 1;
        visit(ga.u(y, x), gn.u(y, x), interior && smooth_at(x + f.u(y, x), w));
        visit(ga.v(y, x), gn.v(y, x), interior && smooth_at(y + f.v(y, x), h));
      }
    }
  }
  return out;
}

}  // namespace mrv
