#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "ssta/nn.hpp"
#include "ssta/saliency.hpp"
#include "ssta/warp.hpp"

namespace ssta {

enum class SaliencyMethod : std::uint8_t { kFT = 0, kLC = 1, kImported = 2 };

struct AdamWParams {
  double learning_rate = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

/// Schedule and optimizer settings of the staged flow attack. A stage runs
/// stage_iters steps at fixed (tau, xi); on failure tau shrinks the
/// threshold (growing the region) and xi multiplies (growing the budget).
struct AttackConfig {
  int tau_init = 250;
  int tau_step = 25;
  int tau_min = 50;
  double xi_init = 1e-2;
  double xi_growth = 2.0;
  double xi_max = 2.0;
  int stage_iters = 50;
  int max_iters = 500;
  double kappa = 0.0;
  AdamWParams opt;
  SaliencyMethod saliency_method = SaliencyMethod::kFT;

  void validate() const;
};

struct AttackResult {
  Image x_adv;
  FlowField flow;
  Mask mask;
  bool success = false;
  int iterations_used = 0;
  double final_loss = 0.0;
  int final_tau = 0;
  double final_xi = 0.0;
  int predicted_class = 0;
};

/// AdamW moment accumulators shaped like a flow field.
struct OptimizerState {
  Plane m_du, m_dv, v_du, v_dv;
  long long step = 0;

  static OptimizerState zero(int h, int w) {
    OptimizerState s;
    s.m_du = s.m_dv = s.v_du = s.v_dv = Plane::Zero(h, w);
    return s;
  }
};

/// Margin loss max(logit_y - max_{k != y} logit_k, -kappa). Non-positive
/// with kappa = 0 once the model is fooled; the attack minimizes it.
double margin_loss(const Eigen::VectorXd& logits, int y, double kappa);

/// Gradient of margin_loss with respect to the logits; zero in the clamped
/// region. Ties among the k != y maxima go to the first index in scan order.
Eigen::VectorXd margin_loss_grad(const Eigen::VectorXd& logits, int y, double kappa);

/// Decoupled-weight-decay Adam update, in place:
///   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
///   theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)
/// Throws numeric_error on non-finite gradients.
void adamw_step(OptimizerState& state, FlowField& params, const FlowField& grads,
                const AdamWParams& hp);

/// The staged salient-region flow attack. The saliency map is computed once
/// on the clean input; flow and optimizer state persist across stages. For
/// SaliencyMethod::kImported the caller supplies a fixed mask and only the
/// budget schedule advances. On failure the lowest-loss iterate is returned.
AttackResult ssta_attack(const Network& net, const Image& x, int y, const AttackConfig& cfg,
                         const Mask* imported_mask = nullptr);

/// Additive-noise baseline: iterative sign-gradient descent on the margin
/// loss over a whole-image perturbation delta, with delta clamped to
/// [-eps, eps] and x + delta clipped to [0,1] at every step.
AttackResult pgd_baseline(const Network& net, const Image& x, int y, double eps, int steps,
                          double step_size);

}  // namespace ssta
