#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "reprog/rng.hpp"
#include "reprog/tensor.hpp"

namespace reprog {

struct Dataset;  // datagen.hpp

enum class ArchKind { mlp, convnet };

// Fixed feed-forward architectures. mlp: flatten -> [hidden linear+relu]* ->
// linear. convnet: conv3x3 -> relu -> maxpool2 -> conv3x3 -> relu -> maxpool2
// -> flatten -> linear(dense_hidden) -> relu -> linear.
struct Architecture {
  ArchKind kind = ArchKind::mlp;
  std::array<int, 3> input_shape = {3, 32, 32};  // C,H,W
  std::vector<int> hidden = {64};                // mlp hidden sizes (may be empty)
  std::array<int, 2> conv_channels = {6, 12};    // convnet conv widths
  int dense_hidden = 48;                         // convnet fc width
  int num_classes = 2;

  void validate() const;  // shape chaining, num_classes >= 2
  nlohmann::json to_json() const;
  static Architecture from_json(const nlohmann::json& j);
  bool operator==(const Architecture&) const = default;
};

// Differentiable frozen scorer surface shared by FrozenClassifier and the
// text-side two-tower scorer: logits plus backprop-to-input.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::array<int, 3> input_shape() const = 0;
  virtual int num_classes() const = 0;
  virtual Tensor logits(const Tensor& x) const = 0;
  virtual Tensor input_gradient(const Tensor& x, const Tensor& grad_logits) const = 0;
  // Cross-entropy loss against `label` plus its input gradient in one pass.
  virtual double loss_and_input_gradient(const Tensor& x, int label, Tensor& input_grad) const;
};

struct Provenance {
  std::uint64_t seed = 0;
  int epochs = 0;
  std::uint64_t source_digest = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;

  nlohmann::json to_json() const;
  static Provenance from_json(const nlohmann::json& j);
};

// Fixed-weight classifier f with hand-written per-layer backward passes.
// Immutable after construction: forward paths are deterministic and
// thread-safe, and no prompting/LM/training operation ever mutates weights.
class FrozenClassifier : public Classifier {
 public:
  FrozenClassifier(Architecture arch, std::vector<Tensor> weights, Provenance provenance);

  static FrozenClassifier random_init(const Architecture& arch, std::uint64_t seed);

  std::array<int, 3> input_shape() const override { return arch_.input_shape; }
  int num_classes() const override { return arch_.num_classes; }

  Tensor logits(const Tensor& x) const override;
  // d(grad_logits . logits)/dx via layerwise backward; weights untouched.
  Tensor input_gradient(const Tensor& x, const Tensor& grad_logits) const override;
  double loss_and_input_gradient(const Tensor& x, int label, Tensor& input_grad) const override;
  // Activations feeding the final linear layer.
  Tensor penultimate_features(const Tensor& x) const;
  int feature_dim() const;
  // Backward from the penultimate activation down to the input (two-tower path).
  Tensor input_gradient_from_features(const Tensor& x, const Tensor& grad_features) const;

  const Architecture& arch() const { return arch_; }
  const std::vector<Tensor>& weights() const { return weights_; }
  const std::vector<std::string>& weight_names() const { return weight_names_; }
  const Provenance& provenance() const { return provenance_; }

  // FNV-1a over the weight payload; the frozen-contract checksum.
  std::uint64_t weight_checksum() const;

 private:
  Architecture arch_;
  std::vector<Tensor> weights_;
  std::vector<std::string> weight_names_;
  Provenance provenance_;
};

struct PretrainConfig {
  int epochs = 20;
  float lr = 0.05f;
  float momentum = 0.9f;
  int batch_size = 32;
  std::uint64_t seed = 1;
};

// Empirical risk minimization with seeded mini-batch SGD + momentum; returns
// the frozen model with final train/test accuracy recorded in provenance.
FrozenClassifier pretrain_source(const Dataset& train, const Dataset& test, const Architecture& arch,
                                 const PretrainConfig& cfg);

// Plain (un-prompted) accuracy of the model's argmax against dataset labels.
double model_accuracy(const FrozenClassifier& model, const Dataset& ds);

void save_checkpoint(const FrozenClassifier& model, const std::string& path);
FrozenClassifier load_checkpoint(const std::string& path);

// Expected weight tensor names/shapes for an architecture, in order.
std::vector<std::pair<std::string, std::vector<int>>> weight_layout(const Architecture& arch);

}  // namespace reprog
