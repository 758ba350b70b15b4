#include "mbridge/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mbridge::losses {

Matrix nrl_weights(const Matrix& features, double sigma) {
  if (!(sigma > 0.0)) throw Error("nrl: sigma must be positive");
  const std::size_t n = features.rows();
  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      w(i, j) = std::exp(-squared_distance(features.row(i), features.row(j)) / sigma);
    }
  }
  return w;
}

LossValue nrl_loss_with_weights(const Matrix& features, const Matrix& weights, double gamma) {
  const std::size_t n = features.rows();
  if (n < 2) throw Error("nrl_loss needs a batch of at least two samples");
  if (weights.rows() != n || weights.cols() != n) throw Error("nrl_loss: weight shape mismatch");
  const std::size_t d = features.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  // coef(a, b) = d T_ab / d f_a projected on (f_a - f_b), where
  // T_ab = w d^2 + (1 - w) [gamma - d]_+^2.
  Matrix coef(n, n);
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double d2 = squared_distance(features.row(a), features.row(b));
      const double dist = std::sqrt(d2);
      const double w = weights(a, b);
      const double hinge = std::max(0.0, gamma - dist);
      total += w * d2 + (1.0 - w) * hinge * hinge;
      if (a == b) continue;
      // The hinge has no direction at d = 0; its subgradient there is 0.
      double c = 2.0 * w;
      if (hinge > 0.0 && dist > 0.0) c -= 2.0 * (1.0 - w) * hinge / dist;
      coef(a, b) = c;
    }
  }

  LossValue out{total * inv_n, Matrix(n, d)};
  for (std::size_t i = 0; i < n; ++i) {
    auto g = out.grad.row(i);
    const auto fi = features.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double c = (coef(i, j) + coef(j, i)) * inv_n;
      const auto fj = features.row(j);
      for (std::size_t k = 0; k < d; ++k) g[k] += c * (fi[k] - fj[k]);
    }
  }
  return out;
}

LossValue nrl_loss(const Batch& batch, double gamma, double sigma) {
  if (batch.size() < 2) throw Error("nrl_loss needs a batch of at least two samples");
  return nrl_loss_with_weights(batch.features, nrl_weights(batch.features, sigma), gamma);
}

LossValue cluster_nce(const Batch& batch, const Matrix& memory, const std::vector<int>* label_map,
                      double tau) {
  if (!(tau > 0.0)) throw Error("cluster_nce: tau must be positive");
  const std::size_t n = batch.size();
  const std::size_t y = memory.rows();
  if (n == 0) throw Error("cluster_nce: empty batch");
  if (batch.labels.size() != n) throw Error("cluster_nce: labels and features differ in length");
  if (y == 0 || memory.cols() != batch.features.cols()) {
    throw Error("cluster_nce: memory shape does not match the batch");
  }
  const double inv_n = 1.0 / static_cast<double>(n);

  LossValue out{0.0, Matrix(n, batch.features.cols())};
  std::vector<double> logits(y);
  for (std::size_t i = 0; i < n; ++i) {
    int target = batch.labels[i];
    if (label_map) {
      if (target < 0 || static_cast<std::size_t>(target) >= label_map->size()) {
        throw Error("cluster_nce: label " + std::to_string(target) + " has no translation");
      }
      target = (*label_map)[static_cast<std::size_t>(target)];
    }
    if (target < 0 || static_cast<std::size_t>(target) >= y) {
      throw Error("cluster_nce: label " + std::to_string(target) + " outside memory of size " +
                  std::to_string(y));
    }
    const auto f = batch.features.row(i);
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < y; ++k) {
      logits[k] = dot(f, memory.row(k)) / tau;
      hi = std::max(hi, logits[k]);
    }
    double z = 0.0;
    for (std::size_t k = 0; k < y; ++k) z += std::exp(logits[k] - hi);
    const double lse = hi + std::log(z);
    out.value += (lse - logits[static_cast<std::size_t>(target)]) * inv_n;

    auto g = out.grad.row(i);
    const double scale = inv_n / tau;
    for (std::size_t k = 0; k < y; ++k) {
      double p = std::exp(logits[k] - lse);
      if (k == static_cast<std::size_t>(target)) p -= 1.0;
      const auto m = memory.row(k);
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += scale * p * m[j];
    }
  }
  return out;
}

LossValue modality_invariant_loss(const Batch& batch, const memory::MemoryBank& hybrid, int epoch,
                                  const std::vector<int>& to_anchor, double tau, Modality anchor) {
  if (epoch < 0) throw Error("modality_invariant_loss: negative epoch");
  const bool translate = epoch % 2 == 0;
  const Modality expected = translate ? other(anchor) : anchor;
  if (batch.modality != expected) {
    throw Error("modality_invariant_loss: epoch " + std::to_string(epoch) + " expects a " +
                std::string(to_string(expected)) + " batch");
  }
  return cluster_nce(batch, hybrid.rows, translate ? &to_anchor : nullptr, tau);
}

LossValue total_loss(const LossValue& ms, const LossValue& mi, const LossValue& nrl, double beta1,
                     double beta2) {
  const std::size_t rows = ms.grad.rows();
  const std::size_t cols = ms.grad.cols();
  for (const LossValue* part : {&mi, &nrl}) {
    if (part->grad.rows() != rows || part->grad.cols() != cols) {
      throw Error("total_loss: gradient shapes differ");
    }
  }
  LossValue out{ms.value + beta1 * mi.value + beta2 * nrl.value, Matrix(rows, cols)};
  auto g = out.grad.values();
  const auto a = ms.grad.values();
  const auto b = mi.grad.values();
  const auto c = nrl.grad.values();
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = a[k] + beta1 * b[k] + beta2 * c[k];
  return out;
}

}  // namespace mbridge::losses
