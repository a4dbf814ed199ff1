#pragma once

#include <functional>

#include "reprog/tensor.hpp"

namespace reprog {

struct CrossEntropyResult {
  double loss;         // -log softmax(logits)[label], >= 0
  Tensor grad_logits;  // softmax(logits) - onehot(label)
};

// Softmax cross-entropy of a single logit vector against a class index.
// Accumulates in double so saturated cases keep their tiny nonzero loss.
CrossEntropyResult softmax_cross_entropy(const Tensor& logits, int label);

// Central differences (f(x+eps*e_i) - f(x-eps*e_i)) / (2 eps) per coordinate.
// Gradient-check oracle; throws DomainError (with the offending index) when f
// returns a non-finite value.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, double eps);

// Directional central difference (f(x+eps*d) - f(x-eps*d)) / (2 eps).
double finite_diff_directional(const std::function<double(const Tensor&)>& f, const Tensor& x,
                               const Tensor& direction, double eps);

double dot(const Tensor& a, const Tensor& b);
double l2_norm(const Tensor& t);
// cosine(a, b); zero-norm inputs yield 0 by convention.
double cosine_similarity(const Tensor& a, const Tensor& b);

}  // namespace reprog
