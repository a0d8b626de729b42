#pragma once

#include <functional>

#include "mrv/media.hpp"

namespace mrv {

/// Generalized Charbonnier penalty rho(x) = (x^2 + eps^2)^alpha.
struct CharbonnierParams {
  double alpha = 0.45;
  double epsilon = 1e-3;

  void validate() const;
};

/// Forward-backward consistency tolerances: relative (alpha1) and
/// absolute in squared pixels (alpha2).
struct OcclusionParams {
  double alpha1 = 0.01;
  double alpha2 = 0.5;

  void validate() const;
};

struct WarpResult {
  Frame warped;
  BinaryMask valid;
};

struct OcclusionMasks {
  BinaryMask forward;
  BinaryMask backward;
};

struct LossReport {
  double value = 0.0;
  double forward_term = 0.0;
  double backward_term = 0.0;
  double nonoccluded_fraction_fwd = 0.0;
  double nonoccluded_fraction_bwd = 0.0;
};

struct FlowGradient {
  FlowField forward;   // d loss / d forward flow
  FlowField backward;  // d loss / d backward flow
};

/// Samples `target` at (x + u, y + v) with bilinear interpolation. Sample
/// coordinates are clamped to the image rectangle; `valid` is set where
/// the unclamped point lies inside [0, W-1] x [0, H-1].
WarpResult inverse_warp(const Frame& target, const FlowField& flow);

double charbonnier(double x, const CharbonnierParams& params);
/// d rho / dx.
double charbonnier_derivative(double x, const CharbonnierParams& params);

/// Mean of rho(I1 - I1') over included pixels and all channels; 0 when no
/// pixel is included.
double reconstruction_loss(const Frame& reference, const Frame& reconstructed,
                           const BinaryMask& include, const CharbonnierParams& params);

/// Backward flow resampled at forward-displaced positions, component-wise,
/// with clamped coordinates.
FlowField warp_flow(const FlowField& backward, const FlowField& forward);

/// Flags a pixel (1) when
///   |Mf + Mb(Mf)|^2 >= alpha1 (|Mf|^2 + |Mb(Mf)|^2) + alpha2,
/// i.e. the consistency constraint fails; ties count as failures. The
/// backward mask swaps the roles of the two flows.
OcclusionMasks occlusion_flags(const FlowField& forward, const FlowField& backward,
                               const OcclusionParams& params);

/// Pixels that take part in each direction's photometric term: not
/// occluded and sampled inside the image.
struct LossMasks {
  BinaryMask forward;
  BinaryMask backward;
};

LossMasks loss_masks(const Frame& first, const Frame& second, const FlowField& forward,
                     const FlowField& backward, const OcclusionParams& params);

/// Photometric loss of both directions with the inclusion masks held fixed.
/// Forward term: reconstruct `first` from `second` with the forward flow;
/// backward term: reconstruct `second` from `first` with the backward flow.
LossReport masked_pair_loss(const Frame& first, const Frame& second, const FlowField& forward,
                            const FlowField& backward, const LossMasks& masks,
                            const CharbonnierParams& cparams);

/// Occlusion-aware loss: masks from occlusion_flags and warp validity,
/// then the sum of the two masked photometric terms.
LossReport occlusion_aware_loss(const Frame& first, const Frame& second,
                                const FlowField& forward, const FlowField& backward,
                                const CharbonnierParams& cparams, const OcclusionParams& oparams);

/// Analytic gradient of occlusion_aware_loss(...).value with respect to
/// every flow component. Masks are constants; excluded pixels get zero.
FlowGradient loss_gradient_wrt_flow(const Frame& first, const Frame& second,
                                    const FlowField& forward, const FlowField& backward,
                                    const CharbonnierParams& cparams,
                                    const OcclusionParams& oparams);

/// Same as loss_gradient_wrt_flow for caller-supplied masks.
FlowGradient masked_pair_gradient(const Frame& first, const Frame& second,
                                  const FlowField& forward, const FlowField& backward,
                                  const LossMasks& masks, const CharbonnierParams& cparams);

using FlowLossFn = std::function<double(const FlowField& forward, const FlowField& backward)>;

/// Central differences (f(x+h) - f(x-h)) / (x+h - (x-h)) per flow
/// component. The denominator uses the realized single-precision step so
/// the quotient matches the points actually evaluated.
FlowGradient finite_difference_gradient(const FlowLossFn& loss, const FlowField& forward,
                                        const FlowField& backward, double step,
                                        int threads = 1);

/// Agreement between an analytic and a numerical gradient.
struct GradientAgreement {
  std::size_t compared = 0;
  std::size_t skipped = 0;  // border pixels and components near a bilinear kink
  std::size_t within = 0;   // relative error below the tolerance
  double max_relative_error = 0.0;

  double fraction_within() const noexcept {
    return compared == 0 ? 1.0 : static_cast<double>(within) / compared;
  }
};

/// Relative error |a - n| / max(|a|, |n|, 1e-12) per component of both flows.
/// Skips border pixels and components whose sample coordinate along the
/// differentiated axis lies within 2 * step of a pixel line or of the image
/// edge, where the bilinear warp is not differentiable.
GradientAgreement compare_flow_gradients(const FlowGradient& analytic, const FlowGradient& numeric,
                                         const FlowField& forward, const FlowField& backward,
                                         double step, double tolerance);

}  // namespace mrv
