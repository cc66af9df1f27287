#include "ssta/attack.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace ssta {

void AttackConfig::validate() const {
  if (tau_init < 0 || tau_init > 255 || tau_min < 0 || tau_min > tau_init)
    throw std::invalid_argument("attack config: need 0 <= tau_min <= tau_init <= 255");
  if (tau_step < 0) throw std::invalid_argument("attack config: tau_step must be >= 0");
  if (!(xi_init > 0.0)) throw std::invalid_argument("attack config: xi_init must be > 0");
  if (xi_growth < 1.0) throw std::invalid_argument("attack config: xi_growth must be >= 1");
  if (xi_max < xi_init) throw std::invalid_argument("attack config: xi_max must be >= xi_init");
  if (stage_iters < 1) throw std::invalid_argument("attack config: stage_iters must be >= 1");
  if (max_iters < 0) throw std::invalid_argument("attack config: max_iters must be >= 0");
  if (kappa < 0.0) throw std::invalid_argument("attack config: kappa must be >= 0");
}

double margin_loss(const Eigen::VectorXd& logits, int y, double kappa) {
  if (y < 0 || y >= logits.size()) throw std::invalid_argument("margin_loss: label out of range");
  if (logits.size() < 2) throw std::invalid_argument("margin_loss: need at least two classes");
  double other = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < logits.size(); ++k)
    if (k != y && logits(k) > other) other = logits(k);
  return std::max(logits(y) - other, -kappa);
}

Eigen::VectorXd margin_loss_grad(const Eigen::VectorXd& logits, int y, double kappa) {
  if (y < 0 || y >= logits.size()) throw std::invalid_argument("margin_loss: label out of range");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(logits.size());
  Eigen::Index best = y == 0 ? 1 : 0;
  for (Eigen::Index k = 0; k < logits.size(); ++k)
    if (k != y && logits(k) > logits(best)) best = k;
  if (logits(y) - logits(best) > -kappa) {
    g(y) = 1.0;
    g(best) = -1.0;
  }
  return g;
}

void adamw_step(OptimizerState& state, FlowField& params, const FlowField& grads,
                const AdamWParams& hp) {
  if (!params.same_shape(grads)) throw shape_error("adamw_step: gradient shape mismatch");
  if (!grads.du.isFinite().all() || !grads.dv.isFinite().all())
    throw numeric_error("adamw_step: non-finite gradient");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
  auto update = [&](Plane& m, Plane& v, Plane& theta, const Plane& g) {
    m = hp.beta1 * m + (1.0 - hp.beta1) * g;
    v = hp.beta2 * v + (1.0 - hp.beta2) * g.square();
    const Plane m_hat = m / bc1;
    const Plane v_hat = v / bc2;
    theta -= hp.learning_rate * (m_hat / (v_hat.sqrt() + hp.eps) + hp.weight_decay * theta);
  };
  update(state.m_du, state.v_du, params.du, grads.du);
  update(state.m_dv, state.v_dv, params.dv, grads.dv);
}

namespace {

struct Evaluation {
  Image x_adv;
  double loss = 0.0;
  int pred = 0;
};

Evaluation evaluate(const Network& net, const Image& x, const FlowField& f, const Mask& mask,
                    int y, double kappa) {
  Evaluation ev;
  ev.x_adv = composite(x, warp(x, f), mask);
  const Eigen::VectorXd logits = forward(net, ev.x_adv);
  ev.loss = margin_loss(logits, y, kappa);
  ev.pred = predicted_class(logits, y);
  if (!std::isfinite(ev.loss)) throw numeric_error("attack: non-finite loss");
  return ev;
}

struct Snapshot {
  Image x_adv;
  FlowField flow;
  Mask mask;
  double loss = std::numeric_limits<double>::infinity();
  int tau = 0;
  double xi = 0.0;
  int pred = 0;
};

AttackResult result_from(bool success, Image x_adv, FlowField flow, Mask mask, int iterations,
                         double loss, int tau, double xi, int pred) {
  AttackResult r;
  r.x_adv = std::move(x_adv);
  r.flow = std::move(flow);
  r.mask = std::move(mask);
  r.success = success;
  r.iterations_used = iterations;
  r.final_loss = loss;
  r.final_tau = tau;
  r.final_xi = xi;
  r.predicted_class = pred;
  return r;
}

}  // namespace

AttackResult ssta_attack(const Network& net, const Image& x, int y, const AttackConfig& cfg,
                         const Mask* imported_mask) {
  cfg.validate();
  const bool imported = cfg.saliency_method == SaliencyMethod::kImported;
  if (imported && imported_mask == nullptr)
    throw std::invalid_argument("ssta_attack: imported saliency needs a mask");

  SaliencyMap map;
  if (!imported)
    map = cfg.saliency_method == SaliencyMethod::kFT ? ft_saliency(x) : lc_saliency(x);

  int tau = cfg.tau_init;
  double xi = cfg.xi_init;
  Mask mask = imported ? *imported_mask : threshold_mask(map, tau);
  FlowField flow = FlowField::zero(x.height, x.width);
  OptimizerState opt = OptimizerState::zero(x.height, x.width);
  int steps = 0;

  // Lowest-loss iterate, seeded with the untouched input so even a zero
  // iteration budget returns a well-formed result.
  Evaluation ev0 = evaluate(net, x, flow, mask, y, cfg.kappa);
  if (ev0.pred != y)
    return result_from(true, std::move(ev0.x_adv), flow, std::move(mask), 0, ev0.loss, mask.tau,
                       xi, ev0.pred);
  Snapshot best{ev0.x_adv, flow, mask, ev0.loss, mask.tau, xi, ev0.pred};

  const LogitLoss attack_loss = [y, kappa = cfg.kappa](const Eigen::VectorXd& logits,
                                                       Eigen::VectorXd& dlogits) {
    dlogits = margin_loss_grad(logits, y, kappa);
    return margin_loss(logits, y, kappa);
  };

  while (steps < cfg.max_iters) {
    bool stage_ran = false;
    if (!mask.empty()) {
      for (int it = 0; it < cfg.stage_iters && steps < cfg.max_iters; ++it) {
        Evaluation ev = evaluate(net, x, flow, mask, y, cfg.kappa);
        if (ev.loss < best.loss)
          best = Snapshot{ev.x_adv, flow, mask, ev.loss, mask.tau, xi, ev.pred};
        if (ev.pred != y)
          return result_from(true, std::move(ev.x_adv), flow, std::move(mask), steps, ev.loss,
                             mask.tau, xi, ev.pred);
        const Image g_img = input_gradient(net, ev.x_adv, attack_loss);
        const FlowField g_flow = flow_gradient(x, flow, mask, g_img);
        adamw_step(opt, flow, g_flow, cfg.opt);
        flow = project_flow(std::move(flow), xi);
        ++steps;
        stage_ran = true;
      }
    }
    if (steps >= cfg.max_iters) break;
    // stage failed: enlarge the region and the budget
    const int next_tau = std::max(tau - cfg.tau_step, cfg.tau_min);
    if (!stage_ran && (imported || next_tau == tau)) break;  // the region can never change
    tau = next_tau;
    xi = std::min(xi * cfg.xi_growth, cfg.xi_max);
    if (!imported) mask = threshold_mask(map, tau);
  }

  return result_from(false, std::move(best.x_adv), std::move(best.flow), std::move(best.mask),
                     steps, best.loss, best.tau, best.xi, best.pred);
}

AttackResult pgd_baseline(const Network& net, const Image& x, int y, double eps, int steps,
                          double step_size) {
  if (eps < 0.0) throw std::invalid_argument("pgd_baseline: eps must be >= 0");
  if (steps < 0) throw std::invalid_argument("pgd_baseline: steps must be >= 0");

  const Mask mask = full_mask(x.height, x.width);
  std::vector<Plane> delta(static_cast<std::size_t>(x.channels),
                           Plane::Zero(x.height, x.width));
  const FlowField no_flow = FlowField::zero(x.height, x.width);

  const LogitLoss attack_loss = [y](const Eigen::VectorXd& logits, Eigen::VectorXd& dlogits) {
    dlogits = margin_loss_grad(logits, y, 0.0);
    return margin_loss(logits, y, 0.0);
  };

  Image best_x = x;
  double best_loss = std::numeric_limits<double>::infinity();
  int best_pred = y;
  int taken = 0;
  for (;;) {
    Image x_adv(x.height, x.width, x.channels);
    for (int c = 0; c < x.channels; ++c)
      x_adv.planes[static_cast<std::size_t>(c)] =
          clamp01<double>(x.planes[static_cast<std::size_t>(c)] + delta[static_cast<std::size_t>(c)]);
    const Eigen::VectorXd logits = forward(net, x_adv);
    const double loss = margin_loss(logits, y, 0.0);
    if (!std::isfinite(loss)) throw numeric_error("pgd_baseline: non-finite loss");
    const int pred = predicted_class(logits, y);
    if (loss < best_loss) {
      best_loss = loss;
      best_x = x_adv;
      best_pred = pred;
    }
    if (pred != y)
      return result_from(true, std::move(x_adv), no_flow, mask, taken, loss, mask.tau, 0.0, pred);
    if (taken >= steps) break;
    const Image g = input_gradient(net, x_adv, attack_loss);
    for (int c = 0; c < x.channels; ++c) {
      auto& d = delta[static_cast<std::size_t>(c)];
      d -= step_size * g.planes[static_cast<std::size_t>(c)].sign();
      d = d.max(-eps).min(eps);
    }
    ++taken;
  }
  return result_from(false, std::move(best_x), no_flow, mask, taken, best_loss, mask.tau, 0.0,
                     best_pred);
}

}  // namespace ssta
