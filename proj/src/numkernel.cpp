#include "reprog/numkernel.hpp"

#include <cmath>
#include <string>

#include "reprog/errors.hpp"

namespace reprog {

CrossEntropyResult softmax_cross_entropy(const Tensor& logits, int label) {
  const std::int64_t k = logits.size();
  if (logits.rank() != 1) throw ShapeError("softmax_cross_entropy: logits must be rank-1, got " + logits.shape_str());
  if (label < 0 || label >= k) {
    throw DomainError("softmax_cross_entropy: label " + std::to_string(label) + " out of range [0," +
                      std::to_string(k) + ")");
  }
  if (!logits.all_finite()) throw DomainError("softmax_cross_entropy: non-finite logits");

  double max_logit = logits[0];
  for (std::int64_t i = 1; i < k; ++i) max_logit = std::max(max_logit, static_cast<double>(logits[i]));
  double sum = 0.0;
  for (std::int64_t i = 0; i < k; ++i) sum += std::exp(static_cast<double>(logits[i]) - max_logit);
  const double log_sum = std::log(sum);

  CrossEntropyResult out;
  out.loss = log_sum - (static_cast<double>(logits[label]) - max_logit);
  if (out.loss < 0.0) out.loss = 0.0;  // guards rounding at full saturation
  out.grad_logits = Tensor(logits.shape);
  for (std::int64_t i = 0; i < k; ++i) {
    const double p = std::exp(static_cast<double>(logits[i]) - max_logit) / sum;
    out.grad_logits[i] = static_cast<float>(p - (i == label ? 1.0 : 0.0));
  }
  return out;
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, double eps) {
  if (eps <= 0.0) throw ArgumentError("finite_diff_grad: eps must be positive");
  Tensor grad(x.shape);
  Tensor probe = x;
  for (std::int64_t i = 0; i < x.size(); ++i) {
    const float orig = probe[i];
    probe[i] = static_cast<float>(orig + eps);
    const double hi = f(probe);
    probe[i] = static_cast<float>(orig - eps);
    const double lo = f(probe);
    probe[i] = orig;
    if (!std::isfinite(hi) || !std::isfinite(lo)) {
      throw DomainError("finite_diff_grad: non-finite function value at coordinate " + std::to_string(i));
    }
    grad[i] = static_cast<float>((hi - lo) / (2.0 * eps));
  }
  return grad;
}

double finite_diff_directional(const std::function<double(const Tensor&)>& f, const Tensor& x,
                               const Tensor& direction, double eps) {
  if (eps <= 0.0) throw ArgumentError("finite_diff_directional: eps must be positive");
  require_same_shape(x, direction, "finite_diff_directional");
  Tensor hi = x;
  Tensor lo = x;
  for (std::int64_t i = 0; i < x.size(); ++i) {
    hi[i] = static_cast<float>(hi[i] + eps * direction[i]);
    lo[i] = static_cast<float>(lo[i] - eps * direction[i]);
  }
  const double fh = f(hi);
  const double fl = f(lo);
  if (!std::isfinite(fh) || !std::isfinite(fl)) {
    throw DomainError("finite_diff_directional: non-finite function value");
  }
  return (fh - fl) / (2.0 * eps);
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

double l2_norm(const Tensor& t) {
  double s = 0.0;
  for (float v : t.data) s += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(s);
}

double cosine_similarity(const Tensor& a, const Tensor& b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

}  // namespace reprog
