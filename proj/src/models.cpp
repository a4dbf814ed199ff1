#include "reprog/models.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "reprog/container.hpp"
#include "reprog/datagen.hpp"
#include "reprog/errors.hpp"
#include "reprog/numkernel.hpp"

namespace reprog {
namespace {

// ----------------------------- layer plan -----------------------------

enum class Op { linear, relu, conv3x3, maxpool2 };

struct PlanStep {
  Op op;
  int weight = -1;  // index of the weight tensor; bias is weight+1
  std::vector<int> in_shape;
  std::vector<int> out_shape;
};

struct Plan {
  std::vector<PlanStep> steps;
  int penultimate_step = 0;  // index of the final linear step; its input is the feature vector
};

Plan build_plan(const Architecture& arch) {
  arch.validate();
  Plan plan;
  int w = 0;
  if (arch.kind == ArchKind::mlp) {
    int cur = arch.input_shape[0] * arch.input_shape[1] * arch.input_shape[2];
    for (int h : arch.hidden) {
      plan.steps.push_back({Op::linear, w, {cur}, {h}});
      w += 2;
      plan.steps.push_back({Op::relu, -1, {h}, {h}});
      cur = h;
    }
    plan.steps.push_back({Op::linear, w, {cur}, {arch.num_classes}});
  } else {
    const int c = arch.input_shape[0], h = arch.input_shape[1], wd = arch.input_shape[2];
    const int c1 = arch.conv_channels[0], c2 = arch.conv_channels[1];
    plan.steps.push_back({Op::conv3x3, w, {c, h, wd}, {c1, h, wd}});
    w += 2;
    plan.steps.push_back({Op::relu, -1, {c1, h, wd}, {c1, h, wd}});
    plan.steps.push_back({Op::maxpool2, -1, {c1, h, wd}, {c1, h / 2, wd / 2}});
    plan.steps.push_back({Op::conv3x3, w, {c1, h / 2, wd / 2}, {c2, h / 2, wd / 2}});
    w += 2;
    plan.steps.push_back({Op::relu, -1, {c2, h / 2, wd / 2}, {c2, h / 2, wd / 2}});
    plan.steps.push_back({Op::maxpool2, -1, {c2, h / 2, wd / 2}, {c2, h / 4, wd / 4}});
    const int flat = c2 * (h / 4) * (wd / 4);
    plan.steps.push_back({Op::linear, w, {flat}, {arch.dense_hidden}});
    w += 2;
    plan.steps.push_back({Op::relu, -1, {arch.dense_hidden}, {arch.dense_hidden}});
    plan.steps.push_back({Op::linear, w, {arch.dense_hidden}, {arch.num_classes}});
  }
  plan.penultimate_step = static_cast<int>(plan.steps.size()) - 1;
  return plan;
}

// ----------------------------- layer kernels -----------------------------

void linear_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y) {
  const int out = w.shape[0], in = w.shape[1];
  for (int o = 0; o < out; ++o) {
    float acc = b[o];
    const float* wr = w.data.data() + static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) acc += wr[i] * x[i];
    y[o] = acc;
  }
}

void linear_backward(const Tensor& x, const Tensor& w, const Tensor& g, Tensor* gx, Tensor* gw, Tensor* gb) {
  const int out = w.shape[0], in = w.shape[1];
  if (gx) {
    for (int i = 0; i < in; ++i) gx->data[static_cast<std::size_t>(i)] = 0.0f;
    for (int o = 0; o < out; ++o) {
      const float go = g[o];
      const float* wr = w.data.data() + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) gx->data[static_cast<std::size_t>(i)] += go * wr[i];
    }
  }
  if (gw) {
    for (int o = 0; o < out; ++o) {
      const float go = g[o];
      float* gwr = gw->data.data() + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) gwr[i] += go * x[i];
      gb->data[static_cast<std::size_t>(o)] += go;
    }
  }
}

void relu_forward(const Tensor& x, Tensor& y) {
  for (std::int64_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(const Tensor& y, const Tensor& g, Tensor& gx) {
  for (std::int64_t i = 0; i < y.size(); ++i) gx[i] = y[i] > 0.0f ? g[i] : 0.0f;
}

void conv3x3_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y) {
  const int ic = x.shape[0], h = x.shape[1], wd = x.shape[2];
  const int oc = w.shape[0];
  for (int o = 0; o < oc; ++o) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < wd; ++j) {
        float acc = b[o];
        for (int c = 0; c < ic; ++c) {
          const float* wk = w.data.data() + ((static_cast<std::size_t>(o) * ic + c) * 9);
          for (int di = -1; di <= 1; ++di) {
            const int ii = i + di;
            if (ii < 0 || ii >= h) continue;
            const float* row = x.data.data() + (static_cast<std::size_t>(c) * h + ii) * wd;
            const float* wrow = wk + (di + 1) * 3;
            for (int dj = -1; dj <= 1; ++dj) {
              const int jj = j + dj;
              if (jj < 0 || jj >= wd) continue;
              acc += wrow[dj + 1] * row[jj];
            }
          }
        }
        y.at3(o, i, j) = acc;
      }
    }
  }
}

void conv3x3_backward(const Tensor& x, const Tensor& w, const Tensor& g, Tensor* gx, Tensor* gw, Tensor* gb) {
  const int ic = x.shape[0], h = x.shape[1], wd = x.shape[2];
  const int oc = w.shape[0];
  if (gx) std::fill(gx->data.begin(), gx->data.end(), 0.0f);
  for (int o = 0; o < oc; ++o) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < wd; ++j) {
        const float go = g.at3(o, i, j);
        if (gb) gb->data[static_cast<std::size_t>(o)] += go;
        for (int c = 0; c < ic; ++c) {
          const std::size_t kbase = (static_cast<std::size_t>(o) * ic + c) * 9;
          for (int di = -1; di <= 1; ++di) {
            const int ii = i + di;
            if (ii < 0 || ii >= h) continue;
            for (int dj = -1; dj <= 1; ++dj) {
              const int jj = j + dj;
              if (jj < 0 || jj >= wd) continue;
              const std::size_t k = kbase + static_cast<std::size_t>(di + 1) * 3 + (dj + 1);
              if (gx) gx->at3(c, ii, jj) += go * w.data[k];
              if (gw) gw->data[k] += go * x.at3(c, ii, jj);
            }
          }
        }
      }
    }
  }
}

// 2x2/stride-2 max pool; ties resolved toward the first element in scan
// order, the conventional subgradient choice.
void maxpool2_forward(const Tensor& x, Tensor& y, std::vector<int>& idx) {
  const int c = x.shape[0], h = x.shape[1], wd = x.shape[2];
  const int oh = h / 2, ow = wd / 2;
  idx.assign(static_cast<std::size_t>(c) * oh * ow, 0);
  std::size_t out_pos = 0;
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) {
        float best = x.at3(ch, 2 * i, 2 * j);
        int best_at = (ch * h + 2 * i) * wd + 2 * j;
        for (int di = 0; di < 2; ++di) {
          for (int dj = 0; dj < 2; ++dj) {
            const float v = x.at3(ch, 2 * i + di, 2 * j + dj);
            if (v > best) {
              best = v;
              best_at = (ch * h + 2 * i + di) * wd + 2 * j + dj;
            }
          }
        }
        y[static_cast<std::int64_t>(out_pos)] = best;
        idx[out_pos] = best_at;
        ++out_pos;
      }
    }
  }
}

void maxpool2_backward(const std::vector<int>& idx, const Tensor& g, Tensor& gx) {
  std::fill(gx.data.begin(), gx.data.end(), 0.0f);
  for (std::size_t p = 0; p < idx.size(); ++p) {
    gx.data[static_cast<std::size_t>(idx[p])] += g.data[p];
  }
}

// ----------------------------- traced execution -----------------------------

struct Trace {
  std::vector<Tensor> acts;                // acts[0] = x, acts[i+1] = step i output
  std::vector<std::vector<int>> pool_idx;  // parallel to steps
};

void run_forward(const Plan& plan, const std::vector<Tensor>& weights, const Tensor& x, Trace& trace) {
  trace.acts.clear();
  trace.pool_idx.assign(plan.steps.size(), {});
  trace.acts.reserve(plan.steps.size() + 1);
  trace.acts.push_back(x);
  for (std::size_t s = 0; s < plan.steps.size(); ++s) {
    const PlanStep& step = plan.steps[s];
    Tensor out(step.out_shape);
    const Tensor& in = trace.acts.back();
    switch (step.op) {
      case Op::linear:
        linear_forward(in, weights[static_cast<std::size_t>(step.weight)],
                       weights[static_cast<std::size_t>(step.weight) + 1], out);
        break;
      case Op::relu:
        relu_forward(in, out);
        break;
      case Op::conv3x3:
        conv3x3_forward(in, weights[static_cast<std::size_t>(step.weight)],
                        weights[static_cast<std::size_t>(step.weight) + 1], out);
        break;
      case Op::maxpool2:
        maxpool2_forward(in, out, trace.pool_idx[s]);
        break;
    }
    trace.acts.push_back(std::move(out));
  }
}

// Backward from the output of step `from_step` down to the input. `grad` is
// d(objective)/d(acts[from_step+1]). Weight gradients accumulate in place.
Tensor run_backward(const Plan& plan, const std::vector<Tensor>& weights, const Trace& trace, Tensor grad,
                    int from_step, std::vector<Tensor>* weight_grads) {
  for (int s = from_step; s >= 0; --s) {
    const PlanStep& step = plan.steps[static_cast<std::size_t>(s)];
    const Tensor& in = trace.acts[static_cast<std::size_t>(s)];
    Tensor gin(step.in_shape);
    switch (step.op) {
      case Op::linear: {
        Tensor* gw = weight_grads ? &(*weight_grads)[static_cast<std::size_t>(step.weight)] : nullptr;
        Tensor* gb = weight_grads ? &(*weight_grads)[static_cast<std::size_t>(step.weight) + 1] : nullptr;
        linear_backward(in, weights[static_cast<std::size_t>(step.weight)], grad, &gin, gw, gb);
        break;
      }
      case Op::relu:
        relu_backward(trace.acts[static_cast<std::size_t>(s) + 1], grad, gin);
        break;
      case Op::conv3x3: {
        Tensor* gw = weight_grads ? &(*weight_grads)[static_cast<std::size_t>(step.weight)] : nullptr;
        Tensor* gb = weight_grads ? &(*weight_grads)[static_cast<std::size_t>(step.weight) + 1] : nullptr;
        conv3x3_backward(in, weights[static_cast<std::size_t>(step.weight)], grad, &gin, gw, gb);
        break;
      }
      case Op::maxpool2:
        maxpool2_backward(trace.pool_idx[static_cast<std::size_t>(s)], grad, gin);
        break;
    }
    grad = std::move(gin);
  }
  return grad;
}

Tensor flatten_view(const Tensor& t) {
  Tensor f = t;
  f.shape = {static_cast<int>(t.size())};
  return f;
}

}  // namespace

// ----------------------------- Architecture -----------------------------

void Architecture::validate() const {
  if (num_classes < 2) throw ConfigError("architecture: num_classes must be >= 2");
  for (int e : input_shape) {
    if (e <= 0) throw ConfigError("architecture: input extents must be positive");
  }
  if (kind == ArchKind::mlp) {
    for (int h : hidden) {
      if (h <= 0) throw ConfigError("architecture: mlp hidden sizes must be positive");
    }
  } else {
    if (conv_channels[0] <= 0 || conv_channels[1] <= 0 || dense_hidden <= 0) {
      throw ConfigError("architecture: convnet widths must be positive");
    }
    if (input_shape[1] % 4 != 0 || input_shape[2] % 4 != 0) {
      throw ConfigError("architecture: convnet needs H and W divisible by 4 (two 2x2 pools)");
    }
  }
}

nlohmann::json Architecture::to_json() const {
  nlohmann::json j;
  j["kind"] = kind == ArchKind::mlp ? "mlp" : "convnet";
  j["input"] = input_shape;
  j["hidden"] = hidden;
  j["conv_channels"] = conv_channels;
  j["dense_hidden"] = dense_hidden;
  j["num_classes"] = num_classes;
  return j;
}

Architecture Architecture::from_json(const nlohmann::json& j) {
  Architecture a;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "mlp") {
    a.kind = ArchKind::mlp;
  } else if (kind == "convnet") {
    a.kind = ArchKind::convnet;
  } else {
    throw ConfigError("architecture: unknown kind '" + kind + "'");
  }
  a.input_shape = j.at("input").get<std::array<int, 3>>();
  if (j.contains("hidden")) a.hidden = j.at("hidden").get<std::vector<int>>();
  if (j.contains("conv_channels")) a.conv_channels = j.at("conv_channels").get<std::array<int, 2>>();
  if (j.contains("dense_hidden")) a.dense_hidden = j.at("dense_hidden").get<int>();
  a.num_classes = j.at("num_classes").get<int>();
  a.validate();
  return a;
}

std::vector<std::pair<std::string, std::vector<int>>> weight_layout(const Architecture& arch) {
  arch.validate();
  std::vector<std::pair<std::string, std::vector<int>>> layout;
  if (arch.kind == ArchKind::mlp) {
    int cur = arch.input_shape[0] * arch.input_shape[1] * arch.input_shape[2];
    int n = 1;
    for (int h : arch.hidden) {
      layout.push_back({"fc" + std::to_string(n) + ".weight", {h, cur}});
      layout.push_back({"fc" + std::to_string(n) + ".bias", {h}});
      cur = h;
      ++n;
    }
    layout.push_back({"fc" + std::to_string(n) + ".weight", {arch.num_classes, cur}});
    layout.push_back({"fc" + std::to_string(n) + ".bias", {arch.num_classes}});
  } else {
    const int c = arch.input_shape[0];
    const int c1 = arch.conv_channels[0], c2 = arch.conv_channels[1];
    const int flat = c2 * (arch.input_shape[1] / 4) * (arch.input_shape[2] / 4);
    layout.push_back({"conv1.weight", {c1, c, 3, 3}});
    layout.push_back({"conv1.bias", {c1}});
    layout.push_back({"conv2.weight", {c2, c1, 3, 3}});
    layout.push_back({"conv2.bias", {c2}});
    layout.push_back({"fc1.weight", {arch.dense_hidden, flat}});
    layout.push_back({"fc1.bias", {arch.dense_hidden}});
    layout.push_back({"fc2.weight", {arch.num_classes, arch.dense_hidden}});
    layout.push_back({"fc2.bias", {arch.num_classes}});
  }
  return layout;
}

// ----------------------------- Provenance -----------------------------

nlohmann::json Provenance::to_json() const {
  return {{"seed", seed},
          {"epochs", epochs},
          {"source_digest", source_digest},
          {"train_accuracy", train_accuracy},
          {"test_accuracy", test_accuracy}};
}

Provenance Provenance::from_json(const nlohmann::json& j) {
  Provenance p;
  p.seed = j.at("seed").get<std::uint64_t>();
  p.epochs = j.at("epochs").get<int>();
  p.source_digest = j.at("source_digest").get<std::uint64_t>();
  p.train_accuracy = j.at("train_accuracy").get<double>();
  p.test_accuracy = j.at("test_accuracy").get<double>();
  return p;
}

// ----------------------------- FrozenClassifier -----------------------------

FrozenClassifier::FrozenClassifier(Architecture arch, std::vector<Tensor> weights, Provenance provenance)
    : arch_(std::move(arch)), weights_(std::move(weights)), provenance_(provenance) {
  const auto layout = weight_layout(arch_);
  if (weights_.size() != layout.size()) {
    throw FormatError("model: expected " + std::to_string(layout.size()) + " weight tensors, got " +
                      std::to_string(weights_.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (weights_[i].shape != layout[i].second) {
      throw FormatError("model: weight '" + layout[i].first + "' has shape " + weights_[i].shape_str() +
                        ", expected " + shape_to_string(layout[i].second));
    }
    weight_names_.push_back(layout[i].first);
  }
}

FrozenClassifier FrozenClassifier::random_init(const Architecture& arch, std::uint64_t seed) {
  Rng rng(Rng::derive(seed, 0x696e6974ULL));  // "init"
  std::vector<Tensor> weights;
  for (const auto& [name, shape] : weight_layout(arch)) {
    Tensor t(shape);
    const bool is_bias = shape.size() == 1;
    if (!is_bias) {
      // Kaiming-uniform over fan-in.
      std::int64_t fan_in = 1;
      for (std::size_t d = 1; d < shape.size(); ++d) fan_in *= shape[d];
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
      for (auto& v : t.data) v = static_cast<float>(rng.uniform(-limit, limit));
    }
    weights.push_back(std::move(t));
  }
  Provenance prov;
  prov.seed = seed;
  prov.epochs = 0;
  return FrozenClassifier(arch, std::move(weights), prov);
}

Tensor FrozenClassifier::logits(const Tensor& x) const {
  require_shape(x, {arch_.input_shape[0], arch_.input_shape[1], arch_.input_shape[2]}, "forward");
  const Plan plan = build_plan(arch_);
  Trace trace;
  run_forward(plan, weights_, arch_.kind == ArchKind::mlp ? flatten_view(x) : x, trace);
  return trace.acts.back();
}

Tensor FrozenClassifier::input_gradient(const Tensor& x, const Tensor& grad_logits) const {
  require_shape(x, {arch_.input_shape[0], arch_.input_shape[1], arch_.input_shape[2]}, "input_gradient");
  require_shape(grad_logits, {arch_.num_classes}, "input_gradient: grad_logits");
  const Plan plan = build_plan(arch_);
  Trace trace;
  run_forward(plan, weights_, arch_.kind == ArchKind::mlp ? flatten_view(x) : x, trace);
  Tensor g = run_backward(plan, weights_, trace, grad_logits, static_cast<int>(plan.steps.size()) - 1, nullptr);
  g.shape = {arch_.input_shape[0], arch_.input_shape[1], arch_.input_shape[2]};
  return g;
}

double Classifier::loss_and_input_gradient(const Tensor& x, int label, Tensor& input_grad) const {
  const auto ce = softmax_cross_entropy(logits(x), label);
  input_grad = input_gradient(x, ce.grad_logits);
  return ce.loss;
}

double FrozenClassifier::loss_and_input_gradient(const Tensor& x, int label, Tensor& input_grad) const {
  require_shape(x, {arch_.input_shape[0], arch_.input_shape[1], arch_.input_shape[2]},
                "loss_and_input_gradient");
  const Plan plan = build_plan(arch_);
  Trace trace;
  run_forward(plan, weights_, arch_.kind == ArchKind::mlp ? flatten_view(x) : x, trace);
  const auto ce = softmax_cross_entropy(trace.acts.back(), label);
  input_grad = run_backward(plan, weights_, trace, ce.grad_logits, static_cast<int>(plan.steps.size()) - 1,
                            nullptr);
  input_grad.shape = {arch_.input_shape[0], arch_.input_shape[1], arch_.input_shape[2]};
  return ce.loss;
}

Tensor FrozenClassifier::penultimate_features(const Tensor& x) const {
  require_shape(x, {arch_.input_shape[0], arch_.input_shape[1], arch_.input_shape[2]}, "penultimate_features");
  const Plan plan = build_plan(arch_);
  Trace trace;
  run_forward(plan, weights_, arch_.kind == ArchKind::mlp ? flatten_view(x) : x, trace);
  return trace.acts[static_cast<std::size_t>(plan.penultimate_step)];
}

int FrozenClassifier::feature_dim() const {
  const Plan plan = build_plan(arch_);
  return plan.steps[static_cast<std::size_t>(plan.penultimate_step)].in_shape[0];
}

Tensor FrozenClassifier::input_gradient_from_features(const Tensor& x, const Tensor& grad_features) const {
  require_shape(x, {arch_.input_shape[0], arch_.input_shape[1], arch_.input_shape[2]},
                "input_gradient_from_features");
  const Plan plan = build_plan(arch_);
  Trace trace;
  run_forward(plan, weights_, arch_.kind == ArchKind::mlp ? flatten_view(x) : x, trace);
  require_same_shape(grad_features, trace.acts[static_cast<std::size_t>(plan.penultimate_step)],
                     "input_gradient_from_features: grad_features");
  Tensor g = run_backward(plan, weights_, trace, grad_features, plan.penultimate_step - 1, nullptr);
  g.shape = {arch_.input_shape[0], arch_.input_shape[1], arch_.input_shape[2]};
  return g;
}

std::uint64_t FrozenClassifier::weight_checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Tensor& t : weights_) {
    for (float v : t.data) {
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
      for (int byte = 0; byte < 4; ++byte) {
        h ^= (bits >> (8 * byte)) & 0xff;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

// ----------------------------- pretraining -----------------------------

namespace {

double accuracy_of(const Plan& plan, const Architecture& arch, const std::vector<Tensor>& weights,
                   const Dataset& ds) {
  if (ds.images.shape[0] == 0) throw DataError("accuracy: empty dataset");
  Trace trace;
  int correct = 0;
  const int n = ds.images.shape[0];
  for (int i = 0; i < n; ++i) {
    Tensor x = ds.sample(i);
    run_forward(plan, weights, arch.kind == ArchKind::mlp ? flatten_view(x) : x, trace);
    if (argmax(trace.acts.back()) == ds.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / n;
}

}  // namespace

FrozenClassifier pretrain_source(const Dataset& train, const Dataset& test, const Architecture& arch,
                                 const PretrainConfig& cfg) {
  arch.validate();
  if (static_cast<int>(train.class_names.size()) != arch.num_classes) {
    throw DataError("pretrain: dataset has " + std::to_string(train.class_names.size()) +
                    " classes, architecture expects " + std::to_string(arch.num_classes));
  }
  train.validate();
  test.validate();

  FrozenClassifier init = FrozenClassifier::random_init(arch, cfg.seed);
  std::vector<Tensor> weights = init.weights();
  const Plan plan = build_plan(arch);

  std::vector<Tensor> vel;
  std::vector<Tensor> grads;
  for (const Tensor& w : weights) {
    vel.push_back(Tensor(w.shape));
    grads.push_back(Tensor(w.shape));
  }

  const int n = train.images.shape[0];
  Trace trace;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(Rng::derive(cfg.seed, 0x70726574ULL, static_cast<std::uint64_t>(epoch)));  // "pret"
    const std::vector<int> order = shuffle_rng.permutation(n);
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int bsz = std::min(cfg.batch_size, n - start);
      for (auto& g : grads) std::fill(g.data.begin(), g.data.end(), 0.0f);
      double batch_loss = 0.0;
      for (int b = 0; b < bsz; ++b) {
        const int idx = order[static_cast<std::size_t>(start + b)];
        Tensor x = train.sample(idx);
        run_forward(plan, weights, arch.kind == ArchKind::mlp ? flatten_view(x) : x, trace);
        auto ce = softmax_cross_entropy(trace.acts.back(), train.labels[static_cast<std::size_t>(idx)]);
        batch_loss += ce.loss;
        run_backward(plan, weights, trace, ce.grad_logits, static_cast<int>(plan.steps.size()) - 1, &grads);
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("pretrain: non-finite loss at epoch " + std::to_string(epoch), epoch);
      }
      const float inv = 1.0f / static_cast<float>(bsz);
      for (std::size_t wi = 0; wi < weights.size(); ++wi) {
        float* w = weights[wi].data.data();
        float* v = vel[wi].data.data();
        const float* g = grads[wi].data.data();
        const std::size_t count = weights[wi].data.size();
        for (std::size_t k = 0; k < count; ++k) {
          v[k] = cfg.momentum * v[k] - cfg.lr * g[k] * inv;
          w[k] += v[k];
        }
      }
    }
  }

  Provenance prov;
  prov.seed = cfg.seed;
  prov.epochs = cfg.epochs;
  prov.source_digest = dataset_digest(train);
  prov.train_accuracy = accuracy_of(plan, arch, weights, train);
  prov.test_accuracy = accuracy_of(plan, arch, weights, test);
  return FrozenClassifier(arch, std::move(weights), prov);
}

double model_accuracy(const FrozenClassifier& model, const Dataset& ds) {
  if (ds.images.shape[0] == 0) throw DataError("model_accuracy: empty dataset");
  int correct = 0;
  const int n = ds.images.shape[0];
  for (int i = 0; i < n; ++i) {
    if (argmax(model.logits(ds.sample(i))) == ds.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / n;
}

// ----------------------------- checkpoints -----------------------------

void save_checkpoint(const FrozenClassifier& model, const std::string& path) {
  ContainerRecord record;
  record.kind = "model";
  record.meta = {{"architecture", model.arch().to_json()}, {"provenance", model.provenance().to_json()}};
  for (std::size_t i = 0; i < model.weights().size(); ++i) {
    record.tensors.emplace_back(model.weight_names()[i], model.weights()[i]);
  }
  write_container(path, record);
}

FrozenClassifier load_checkpoint(const std::string& path) {
  const ContainerRecord record = read_container(path, "model");
  Architecture arch;
  Provenance prov;
  try {
    arch = Architecture::from_json(record.meta.at("architecture"));
    prov = Provenance::from_json(record.meta.at("provenance"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path + "': malformed model metadata: " + e.what());
  }
  const auto layout = weight_layout(arch);
  if (record.tensors.size() != layout.size()) {
    throw FormatError("'" + path + "': checkpoint holds " + std::to_string(record.tensors.size()) +
                      " tensors, architecture expects " + std::to_string(layout.size()));
  }
  std::vector<Tensor> weights;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& [name, t] = record.tensors[i];
    if (name != layout[i].first) {
      throw FormatError("'" + path + "': tensor '" + name + "' where '" + layout[i].first + "' expected");
    }
    if (t.shape != layout[i].second) {
      throw FormatError("'" + path + "': weight '" + name + "' has shape " + t.shape_str() + ", expected " +
                        shape_to_string(layout[i].second));
    }
    weights.push_back(t);
  }
  return FrozenClassifier(arch, std::move(weights), prov);
}

}  // namespace reprog
