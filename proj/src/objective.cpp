#include "ansrec/objective.hpp"

#include <cmath>
#include <string>

#include "ansrec/ans.hpp"
#include "ansrec/math.hpp"

namespace ansrec {

namespace {

// Forward quantities of the gate for one (user, item) pair.
struct GateEval {
  Vector a;   // W_item n
  Vector b;   // W_user u
  Vector g;   // sigmoid(a * b)
};

GateEval eval_gate(const Vector& u, const Vector& n, const ParamStore& params) {
  GateEval e;
  e.a = params.w_item * n;
  e.b = params.w_user * u;
  const Vector z = e.a.cwiseProduct(e.b);
  e.g = sigmoid(z.array()).matrix();
  return e;
}

// Pulls dL/dgate back onto W_item, W_user and the two embedding rows.
void gate_backward(const Vector& dgate, const GateEval& e, const Vector& u, const Vector& n,
                   const ParamStore& params, UserId user, ItemId item, Gradients& grads) {
  const Vector dz = dgate.cwiseProduct(e.g).cwiseProduct((1.0 - e.g.array()).matrix());
  const Vector da = dz.cwiseProduct(e.b);
  const Vector db = dz.cwiseProduct(e.a);
  grads.w_item.noalias() += da * n.transpose();
  grads.w_user.noalias() += db * u.transpose();
  grads.item_emb.row(item) += (params.w_item.transpose() * da).transpose();
  grads.user_emb.row(user) += (params.w_user.transpose() * db).transpose();
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NonFiniteError(std::string("non-finite ") + what + " term in joint loss");
}

}  // namespace

LossBreakdown evaluate_objective(const TrainBatch& batch, const ParamStore& params,
                                 std::span<const SamplerOutput> outputs,
                                 const ObjectiveWeights& weights, Gradients* grads) {
  if (outputs.size() != batch.size())
    throw std::invalid_argument("joint_loss: one sampler output per batch pair expected");
  if (grads) {
    if (!grads->same_shape(params)) *grads = params.zeros_like();
    else {
      grads->user_emb.setZero();
      grads->item_emb.setZero();
      grads->w_item.setZero();
      grads->w_user.setZero();
      grads->w_mag.setZero();
    }
  }

  LossBreakdown out;
  out.gamma = weights.gamma;
  out.lambda = weights.lambda;
  const std::size_t batch_size = batch.size();
  if (batch_size == 0) return out;

  const double inv_b = 1.0 / static_cast<double>(batch_size);
  const double l2_coef = 2.0 * weights.lambda * inv_b;
  bool uses_gates = false;
  double bpr_sum = 0, c_sum = 0, d_sum = 0, reg_sum = 0;

  for (std::size_t b = 0; b < batch_size; ++b) {
    const auto& o = outputs[b];
    const auto [user, pos] = batch.pairs[b];
    if (o.user != user || o.positive != pos)
      throw std::invalid_argument("joint_loss: sampler output does not match its batch pair");

    const Vector u = params.user_emb.row(user).transpose();
    const Vector p = params.item_emb.row(pos).transpose();
    const Vector n = params.item_emb.row(o.final_item).transpose();

    // Negative vector that enters the BPR term.
    Vector nv;
    GateEval sel;  // gate of the selected negative (ans, hns)
    double margin = 0, t = 0, raw_norm = 0;
    bool margin_saturated = false;
    const AugmentationTrace* trace = nullptr;
    switch (o.provenance) {
      case SamplerKind::rns:
      case SamplerKind::dns:
        nv = n;
        break;
      case SamplerKind::hns:
        uses_gates = true;
        sel = eval_gate(u, n, params);
        nv = n.cwiseProduct(sel.g);
        break;
      case SamplerKind::ans: {
        uses_gates = true;
        if (!o.augmentation) throw std::invalid_argument("joint_loss: ans output without trace");
        trace = &*o.augmentation;
        Vector delta = trace->raw_noise;
        if (trace->rescaled) {
          sel = eval_gate(u, n, params);
          const Vector hard = n.cwiseProduct(sel.g);
          const Vector p_prime = p.cwiseProduct(sel.g);
          t = trace->clamped ? trace->clamped_denominator
                             : score(params.w_mag.transpose(), hard.cwiseProduct(p_prime));
          const MarginValue mv = margin_from_denominator(t);
          margin = mv.value;
          margin_saturated = mv.saturated;
          raw_norm = trace->raw_noise.norm();
          delta = trace->raw_noise * ball_scale(trace->raw_noise, raw_norm, margin);
        }
        nv = n + delta.cwiseProduct(trace->direction);
        break;
      }
    }

    const double s_pos = score(u, p);
    const double s_neg = score(u, nv);
    const double x = s_neg - s_pos;
    bpr_sum += softplus(x);

    if (grads) {
      const double coef = sigmoid(x) * inv_b;
      grads->user_emb.row(user) += (coef * (nv - p)).transpose();
      grads->item_emb.row(pos) += (-coef * u).transpose();
      const Vector dnv = coef * u;
      switch (o.provenance) {
        case SamplerKind::rns:
        case SamplerKind::dns:
          grads->item_emb.row(o.final_item) += dnv.transpose();
          break;
        case SamplerKind::hns:
          grads->item_emb.row(o.final_item) += dnv.cwiseProduct(sel.g).transpose();
          gate_backward(dnv.cwiseProduct(n), sel, u, n, params, user, o.final_item, *grads);
          break;
        case SamplerKind::ans:
          grads->item_emb.row(o.final_item) += dnv.transpose();
          if (trace->rescaled && !trace->clamped && !margin_saturated) {
            const double dmargin =
                score(dnv, trace->raw_noise.cwiseProduct(trace->direction)) / raw_norm;
            const double dt = dmargin * margin * (1.0 - margin) * (-1.0 / (t * t));
            const Vector g2 = sel.g.cwiseProduct(sel.g);
            const auto& w = params.w_mag;
            grads->w_mag += dt * n.cwiseProduct(p).cwiseProduct(g2).transpose();
            grads->item_emb.row(o.final_item) +=
                dt * w.cwiseProduct(p.cwiseProduct(g2).transpose());
            grads->item_emb.row(pos) += dt * w.cwiseProduct(n.cwiseProduct(g2).transpose());
            const Vector dg =
                (2.0 * dt) * w.transpose().cwiseProduct(n).cwiseProduct(p).cwiseProduct(sel.g);
            gate_backward(dg, sel, u, n, params, user, o.final_item, *grads);
          }
          break;
      }
    }

    if (o.provenance == SamplerKind::ans) {
      const auto m = static_cast<Eigen::Index>(o.candidates.size());
      if (m == 0) throw std::invalid_argument("joint_loss: ans output without candidates");
      const Eigen::Index d = params.dim();
      // One column per candidate.
      Matrix cand(d, m);
      for (Eigen::Index j = 0; j < m; ++j) cand.col(j) = params.item_emb.row(o.candidates[j]).transpose();
      const Vector wu_u = params.w_user * u;
      const Matrix a = params.w_item * cand;
      const Matrix gate = sigmoid((a.array().colwise() * wu_u.array())).matrix();

      const auto n_arr = cand.array();
      const auto g_arr = gate.array();
      const Eigen::ArrayXXd contrast = 1.0 - 2.0 * g_arr;
      const Eigen::ArrayXXd one_minus = 1.0 - g_arr;
      const Eigen::ArrayXXd diff = (-n_arr).colwise() + p.array();  // p - n_j
      const Eigen::ArrayXXd g2 = g_arr.square();
      const Eigen::ArrayXXd om2 = one_minus.square();
      const Eigen::ArrayXXd pn = n_arr.colwise() * p.array();

      // Same expressions as contrastive_loss / disentanglement_loss, column-wise.
      const double lc = (n_arr.colwise() * u.array() * contrast).sum();
      const double ld = (diff.square() * g2).sum() + (pn * om2).sum();
      c_sum += lc / static_cast<double>(m);
      d_sum += ld / static_cast<double>(m);

      if (grads && weights.gamma != 0.0) {
        const double aux_coef = weights.gamma * inv_b / static_cast<double>(m);
        grads->user_emb.row(user) += aux_coef * (n_arr * contrast).rowwise().sum().matrix().transpose();
        grads->item_emb.row(pos) +=
            aux_coef * (2.0 * diff * g2 + n_arr * om2).rowwise().sum().matrix().transpose();
        const Eigen::ArrayXXd dg =
            aux_coef * (-2.0 * (n_arr.colwise() * u.array()) + 2.0 * diff.square() * g_arr -
                        2.0 * pn * one_minus);
        const Eigen::ArrayXXd dz = dg * g_arr * one_minus;
        const Matrix da = (dz.colwise() * wu_u.array()).matrix();
        const Vector db_sum = (dz * a.array()).rowwise().sum().matrix();
        grads->w_item.noalias() += da * cand.transpose();
        grads->w_user.noalias() += db_sum * u.transpose();
        grads->user_emb.row(user) += (params.w_user.transpose() * db_sum).transpose();
        const Matrix dn = params.w_item.transpose() * da;
        for (Eigen::Index j = 0; j < m; ++j) {
          const ItemId item = o.candidates[static_cast<std::size_t>(j)];
          grads->item_emb.row(item) +=
              (dn.col(j).array() + aux_coef * (u.array() * contrast.col(j) -
                                               2.0 * diff.col(j) * g2.col(j) +
                                               p.array() * om2.col(j)))
                  .matrix()
                  .transpose();
        }
      }
    }

    reg_sum += u.squaredNorm() + p.squaredNorm() + n.squaredNorm();
    if (grads) {
      grads->user_emb.row(user) += (l2_coef * u).transpose();
      grads->item_emb.row(pos) += (l2_coef * p).transpose();
      grads->item_emb.row(o.final_item) += (l2_coef * n).transpose();
    }
  }

  if (uses_gates) {
    reg_sum += params.w_item.squaredNorm() + params.w_user.squaredNorm() + params.w_mag.squaredNorm();
    if (grads) {
      grads->w_item += l2_coef * params.w_item;
      grads->w_user += l2_coef * params.w_user;
      grads->w_mag += l2_coef * params.w_mag;
    }
  }

  out.bpr = bpr_sum * inv_b;
  out.contrastive = c_sum * inv_b;
  out.disentangle = d_sum * inv_b;
  out.l2 = reg_sum * inv_b;
  require_finite(out.bpr, "bpr");
  require_finite(out.contrastive, "contrastive");
  require_finite(out.disentangle, "disentanglement");
  require_finite(out.l2, "l2");
  out = LossBreakdown::combine(out.bpr, out.contrastive, out.disentangle, out.l2, weights.gamma,
                              weights.lambda);
  require_finite(out.total, "total");
  if (grads && !grads->all_finite()) throw NonFiniteError("non-finite gradient");
  return out;
}

LossBreakdown joint_loss(const TrainBatch& batch, const ParamStore& params,
                         std::span<const SamplerOutput> outputs, const ObjectiveWeights& weights) {
  return evaluate_objective(batch, params, outputs, weights, nullptr);
}

Gradients backward(const TrainBatch& batch, const ParamStore& params,
                   std::span<const SamplerOutput> outputs, const ObjectiveWeights& weights) {
  Gradients g = params.zeros_like();
  evaluate_objective(batch, params, outputs, weights, &g);
  return g;
}

}  // namespace ansrec
