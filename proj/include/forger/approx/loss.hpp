#ifndef FORGER_APPROX_LOSS_HPP_
#define FORGER_APPROX_LOSS_HPP_

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "forger/approx/qfunction.hpp"
#include "forger/core.hpp"

namespace forger {

struct LossWeights {
  double lambda_nstep = 1.0;
  double lambda_margin = 1.0;
  double lambda_l2 = 1e-5;
  double margin = 0.4;
  double gamma = 0.99;
  int n = 10;
  /// regularize biases too (weights only by default)
  bool l2_biases = false;

  void validate() const {
    if (lambda_nstep < 0 || lambda_margin < 0 || lambda_l2 < 0 || margin < 0)
      throw ContractError("loss weights must be non-negative");
    if (gamma < 0 || gamma > 1) throw ContractError("gamma outside [0,1]");
    if (n < 1) throw ContractError("n-step length must be >= 1");
  }
};

struct Targets {
  double y1 = 0.0;
  double yn = 0.0;
};

/// Double-Q targets given online and target Q rows at o' and o_n.
inline Targets double_q_from_rows(const Transition& t, const Eigen::Ref<const Eigen::VectorXd>& online_next,
                                  const Eigen::Ref<const Eigen::VectorXd>& target_next,
                                  const Eigen::Ref<const Eigen::VectorXd>& online_n,
                                  const Eigen::Ref<const Eigen::VectorXd>& target_n, double gamma) {
  Targets y;
  y.y1 = t.reward;
  if (!t.done) y.y1 += gamma * target_next(argmax_lowest(online_next));
  y.yn = t.n_return;
  if (!t.n_done) y.yn += std::pow(gamma, t.n_eff) * target_n(argmax_lowest(online_n));
  return y;
}

/// y1 = r + (1-done) g Q'(o', argmax Q(o',.)); yn likewise with g^n_eff at o_n.
template <class QF>
Targets double_q_target(const Transition& t, const QF& online, const QF& target, double gamma) {
  const Observation* next[] = {&t.next_obs, &t.n_obs};
  const Eigen::MatrixXd qo = online.forward(std::span<const Observation* const>(next, 2));
  const Eigen::MatrixXd qt = target.forward(std::span<const Observation* const>(next, 2));
  return double_q_from_rows(t, qo.col(0), qt.col(0), qo.col(1), qt.col(1), gamma);
}

/// mask * (max_a [q(a) + l*(a != expert)] - q(expert)); also reports the maximizing action.
inline double margin_loss(const Eigen::Ref<const Eigen::VectorXd>& q, int expert_action, double margin,
                          int margin_mask, int* argmax_out = nullptr) {
  if (expert_action < 0 || expert_action >= q.size()) throw ContractError("margin_loss: expert action out of range");
  int best = 0;
  double best_val = q(0) + (expert_action == 0 ? 0.0 : margin);
  for (int a = 1; a < q.size(); ++a) {
    const double v = q(a) + (a == expert_action ? 0.0 : margin);
    if (v > best_val) {
      best_val = v;
      best = a;
    }
  }
  if (argmax_out) *argmax_out = best;
  if (margin_mask == 0) return 0.0;
  return best_val - q(expert_action);
}

inline double margin_loss(const std::vector<double>& q, int expert_action, double margin, int margin_mask) {
  return margin_loss(Eigen::Map<const Eigen::VectorXd>(q.data(), static_cast<Eigen::Index>(q.size())),
                     expert_action, margin, margin_mask);
}

struct LossResult {
  double loss = 0.0;
  double td1 = 0.0;     // mean weighted 1-step term
  double tdn = 0.0;     // mean weighted n-step term
  double margin = 0.0;  // mean weighted margin term
  double l2 = 0.0;      // lambda_l2 * penalty
  std::vector<double> abs_td;
};

/// Batch loss
///   mean_i w_i [ (y1-q)^2 + l1 (yn-q)^2 + l2 * mask * margin ] + l3 * |theta|^2
/// with targets held fixed, plus its gradient accumulated into `grad`.
template <class QF>
LossResult composite_loss_and_grads(std::span<const Transition* const> batch, std::span<const double> weights,
                                    const QF& online, const QF& target, const LossWeights& lw,
                                    typename QF::Grad& grad) {
  if (batch.empty()) throw ContractError("composite loss: empty batch");
  if (weights.size() != batch.size()) throw ContractError("composite loss: weight count mismatch");
  const auto B = static_cast<Eigen::Index>(batch.size());
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  std::vector<const Observation*> obs, next, nobs;
  obs.reserve(batch.size());
  next.reserve(2 * batch.size());
  for (const Transition* t : batch) {
    obs.push_back(&t->obs);
    next.push_back(&t->next_obs);
  }
  for (const Transition* t : batch) next.push_back(&t->n_obs);

  typename QF::Cache cache;
  const Eigen::MatrixXd q = online.forward(obs, cache);
  const Eigen::MatrixXd q_online_next = online.forward(next);
  const Eigen::MatrixXd q_target_next = target.forward(next);

  LossResult out;
  out.abs_td.resize(batch.size());
  Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(q.rows(), B);
  for (Eigen::Index j = 0; j < B; ++j) {
    const Transition& t = *batch[static_cast<std::size_t>(j)];
    const double w = weights[static_cast<std::size_t>(j)];
    const int a = t.action.index;
    if (a < 0 || a >= q.rows()) throw ContractError("composite loss: action out of range");
    const Targets y = double_q_from_rows(t, q_online_next.col(j), q_target_next.col(j), q_online_next.col(B + j),
                                         q_target_next.col(B + j), lw.gamma);
    const double e1 = y.y1 - q(a, j);
    const double en = y.yn - q(a, j);
    int arg = 0;
    const double m = margin_loss(q.col(j), a, lw.margin, t.margin_mask, &arg);

    out.td1 += w * e1 * e1 * inv_b;
    out.tdn += w * lw.lambda_nstep * en * en * inv_b;
    out.margin += w * lw.lambda_margin * m * inv_b;
    out.abs_td[static_cast<std::size_t>(j)] = std::abs(e1);

    dq(a, j) += w * inv_b * (-2.0 * e1 - 2.0 * lw.lambda_nstep * en);
    if (t.margin_mask != 0 && lw.lambda_margin != 0.0) {
      dq(arg, j) += w * inv_b * lw.lambda_margin;
      dq(a, j) -= w * inv_b * lw.lambda_margin;
    }
  }
  out.l2 = lw.lambda_l2 * online.l2(lw.l2_biases);
  out.loss = out.td1 + out.tdn + out.margin + out.l2;
  if (!std::isfinite(out.loss)) throw NumericError("composite loss is not finite");

  online.backward(cache, dq, grad);
  online.add_l2_grad(lw.lambda_l2, lw.l2_biases, grad);
  return out;
}

}  // namespace forger

#endif  // FORGER_APPROX_LOSS_HPP_
