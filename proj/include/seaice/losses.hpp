#pragma once

// Cross-entropy, soft Dice and Focal losses over [B, K, H, W] logits and
// [B, H, W] integer targets. Each loss computes its value and its gradient
// with respect to the logits in closed form; `segmentation_loss` wraps them
// as an autograd function. Pixels whose target equals the ignore value
// contribute exactly zero to the value and the gradient.

#include <torch/torch.h>

#include <string>

#include "seaice/errors.hpp"
#include "seaice/loss_spec.hpp"

namespace seaice {

struct LossAndGrad {
  torch::Tensor value;  // 0-d
  torch::Tensor grad;   // same shape as logits
};

namespace loss_detail {

struct Prepared {
  torch::Tensor mask;      // [B, H, W] bool
  torch::Tensor mask4;     // [B, 1, H, W] bool
  torch::Tensor target;    // [B, H, W] int64, ignored pixels mapped to class 0
  torch::Tensor log_prob;  // [B, K, H, W]
  torch::Tensor prob;      // [B, K, H, W]
  torch::Tensor one_hot;   // [B, K, H, W], zero at ignored pixels
  torch::Tensor count;     // 0-d, number of labeled pixels
};

inline Prepared prepare(const torch::Tensor& logits, const torch::Tensor& targets,
                        std::int64_t ignore_value) {
  if (logits.dim() != 4) throw Error("logits must be [B, K, H, W]");
  if (targets.dim() != 3 || targets.size(0) != logits.size(0) || targets.size(1) != logits.size(2) ||
      targets.size(2) != logits.size(3)) {
    throw Error("targets must be [B, H, W] matching the logits");
  }
  const auto k = logits.size(1);
  auto t = targets.to(torch::kLong);
  Prepared p;
  p.mask = t != ignore_value;
  const auto bad = p.mask & ((t < 0) | (t >= k));
  if (bad.any().item<bool>()) {
    throw Error("target code outside 0.." + std::to_string(k - 1) + " and ignore value " +
                std::to_string(ignore_value));
  }
  p.mask4 = p.mask.unsqueeze(1);
  p.target = torch::where(p.mask, t, torch::zeros_like(t));
  p.log_prob = torch::log_softmax(logits, 1);
  p.prob = p.log_prob.exp();
  p.one_hot = torch::zeros_like(logits).scatter_(1, p.target.unsqueeze(1), 1.0);
  p.one_hot = torch::where(p.mask4, p.one_hot, torch::zeros_like(p.one_hot));
  p.count = p.mask.sum().to(logits.scalar_type());
  return p;
}

/// Mean of per-pixel terms over labeled pixels; 0 when none are labeled.
inline torch::Tensor masked_mean(const torch::Tensor& per_pixel, const Prepared& p) {
  const auto zero = torch::zeros_like(per_pixel);
  const auto total = torch::where(p.mask, per_pixel, zero).sum();
  return p.count.item<double>() > 0 ? total / p.count : total * 0;
}

inline torch::Tensor masked_grad(const torch::Tensor& grad, const Prepared& p) {
  auto g = torch::where(p.mask4, grad, torch::zeros_like(grad));
  return p.count.item<double>() > 0 ? g / p.count : torch::zeros_like(grad);
}

}  // namespace loss_detail

/// Mean over labeled pixels of -log softmax(logits)[target].
inline LossAndGrad cross_entropy_loss_and_grad(const torch::Tensor& logits,
                                               const torch::Tensor& targets,
                                               std::int64_t ignore_value = kIgnoreLabel) {
  torch::NoGradGuard guard;
  const auto p = loss_detail::prepare(logits, targets, ignore_value);
  const auto log_pt = p.log_prob.gather(1, p.target.unsqueeze(1)).squeeze(1);
  return {loss_detail::masked_mean(-log_pt, p), loss_detail::masked_grad(p.prob - p.one_hot, p)};
}

/// Mean over labeled pixels of -alpha (1 - p_t)^gamma log p_t.
inline LossAndGrad focal_loss_and_grad(const torch::Tensor& logits, const torch::Tensor& targets,
                                       double gamma, double alpha,
                                       std::int64_t ignore_value = kIgnoreLabel) {
  torch::NoGradGuard guard;
  const auto p = loss_detail::prepare(logits, targets, ignore_value);
  const auto log_pt = p.log_prob.gather(1, p.target.unsqueeze(1)).squeeze(1);
  const auto pt = log_pt.exp();
  const auto one_minus = -torch::expm1(log_pt);  // 1 - p_t without cancellation
  const auto modulation = alpha * one_minus.pow(gamma);
  const auto value = loss_detail::masked_mean(-(modulation * log_pt), p);

  // d(loss_i)/d(z_k) = A (delta_kt - p_k),
  // A = alpha [gamma p_t (1 - p_t)^(gamma-1) log p_t - (1 - p_t)^gamma].
  torch::Tensor a = -modulation;
  if (gamma != 0.0) {
    auto slope = gamma * pt * log_pt * one_minus.pow(gamma - 1.0);
    slope = torch::where(one_minus > 0, slope, torch::zeros_like(slope));
    a = a + alpha * slope;
  }
  const auto grad = a.unsqueeze(1) * (p.one_hot - p.prob);
  return {value, loss_detail::masked_grad(grad, p)};
}

/// 1 - mean over classes present in the target of
/// (2 sum p g + s) / (sum p + sum g + s), sums over labeled pixels of the
/// whole batch.
inline LossAndGrad dice_loss_and_grad(const torch::Tensor& logits, const torch::Tensor& targets,
                                      double smooth, std::int64_t ignore_value = kIgnoreLabel) {
  torch::NoGradGuard guard;
  const auto p = loss_detail::prepare(logits, targets, ignore_value);
  const auto prob = torch::where(p.mask4, p.prob, torch::zeros_like(p.prob));
  const std::vector<std::int64_t> dims = {0, 2, 3};
  const auto intersection = (prob * p.one_hot).sum(dims);  // [K]
  const auto denom = prob.sum(dims) + p.one_hot.sum(dims) + smooth;
  const auto present = p.one_hot.sum(dims) > 0;
  const auto n_present = present.sum().item<std::int64_t>();
  if (n_present == 0) {
    return {torch::zeros({}, logits.options()), torch::zeros_like(logits)};
  }
  const auto dice = (2.0 * intersection + smooth) / denom;
  const auto zero = torch::zeros_like(dice);
  const auto value = 1.0 - torch::where(present, dice, zero).sum() / double(n_present);

  // dL/dp_k(i) = -[2 g_k(i) denom_k - (2 I_k + s)] / (|P| denom_k^2) on
  // labeled pixels of present classes, then back through the softmax.
  const auto view = [](const torch::Tensor& t) { return t.view({1, -1, 1, 1}); };
  const auto weight = torch::where(present, 1.0 / (double(n_present) * denom * denom), zero);
  auto grad_p = -view(weight) * (2.0 * p.one_hot * view(denom) - view(2.0 * intersection + smooth));
  grad_p = torch::where(p.mask4, grad_p, torch::zeros_like(grad_p));
  auto grad = p.prob * (grad_p - (grad_p * p.prob).sum(1, /*keepdim=*/true));
  grad = torch::where(p.mask4, grad, torch::zeros_like(grad));
  return {value, grad};
}

inline LossAndGrad loss_and_grad(const torch::Tensor& logits, const torch::Tensor& targets,
                                 const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::CrossEntropy:
      return cross_entropy_loss_and_grad(logits, targets, spec.ignore_value);
    case LossKind::Dice:
      return dice_loss_and_grad(logits, targets, spec.dice_smooth, spec.ignore_value);
    case LossKind::Focal:
      return focal_loss_and_grad(logits, targets, spec.focal_gamma, spec.focal_alpha,
                                 spec.ignore_value);
  }
  throw Error("unknown loss kind");
}

/// Autograd wrapper: forward evaluates the loss, backward returns the
/// closed-form gradient scaled by the incoming gradient.
struct SegmentationLossFunction : torch::autograd::Function<SegmentationLossFunction> {
  static torch::Tensor forward(torch::autograd::AutogradContext* ctx, const torch::Tensor& logits,
                               const torch::Tensor& targets, const LossSpec& spec) {
    auto result = loss_and_grad(logits, targets, spec);
    ctx->saved_data["grad"] = result.grad;
    return result.value;
  }

  static torch::autograd::variable_list backward(torch::autograd::AutogradContext* ctx,
                                                 torch::autograd::variable_list grad_outputs) {
    const auto grad = ctx->saved_data["grad"].toTensor();
    return {grad * grad_outputs[0], torch::Tensor(), torch::Tensor()};
  }
};

inline torch::Tensor segmentation_loss(const torch::Tensor& logits, const torch::Tensor& targets,
                                       const LossSpec& spec) {
  return SegmentationLossFunction::apply(logits, targets, spec);
}

inline torch::Tensor ce_loss(const torch::Tensor& logits, const torch::Tensor& targets) {
  return segmentation_loss(logits, targets, LossSpec{.kind = LossKind::CrossEntropy});
}

inline torch::Tensor dice_loss(const torch::Tensor& logits, const torch::Tensor& targets,
                               double smooth = 1.0) {
  return segmentation_loss(logits, targets, LossSpec{.kind = LossKind::Dice, .dice_smooth = smooth});
}

inline torch::Tensor focal_loss(const torch::Tensor& logits, const torch::Tensor& targets,
                                double gamma = 2.0, double alpha = 1.0) {
  return segmentation_loss(
      logits, targets, LossSpec{.kind = LossKind::Focal, .focal_gamma = gamma, .focal_alpha = alpha});
}

}  // namespace seaice
