// Minimal MLP engine: deterministic init, forward with hidden-activation
// capture, cross-entropy and distillation losses with analytic gradients,
// Adam training, evaluation, and the .ckpt on-disk format.
//
// Distillation uses forward KL (teacher || student) on temperature-softened
// distributions, scaled by T^2 so loss magnitude is comparable across
// temperatures, mixed with hard-label cross-entropy by `mix`.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mlab/errors.hpp"

namespace mlab {

enum class Activation { Tanh, Relu };

// layer_sizes = {input dim, hidden dims..., class count}; at least one
// hidden layer, all sizes >= 1.
struct ArchitectureDescriptor {
  std::vector<int> layer_sizes;
  Activation activation = Activation::Tanh;

  int input_dim() const { return layer_sizes.front(); }
  int class_count() const { return layer_sizes.back(); }
  int hidden_layer_count() const {
    return static_cast<int>(layer_sizes.size()) - 2;
  }
  bool operator==(const ArchitectureDescriptor& o) const {
    return layer_sizes == o.layer_sizes && activation == o.activation;
  }
};

// Full parameter set of one network state. weights[l] has shape
// layer_sizes[l+1] x layer_sizes[l]; biases[l] has length layer_sizes[l+1].
// Checkpoints are immutable values: training returns a new one.
struct Checkpoint {
  ArchitectureDescriptor descriptor;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  std::uint64_t seed = 0;
  std::string stage_label;
};

struct Batch {
  Eigen::MatrixXd inputs;   // N x input_dim
  std::vector<int> labels;  // N entries in [0, class_count)
};

struct DistillConfig {
  double temperature = 2.0;
  double mix = 0.5;  // weight on the distillation term vs hard-label CE
  const Checkpoint* teacher = nullptr;
};

struct TrainOptions {
  int epochs = 0;
  double learning_rate = 1e-3;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct Objective {
  enum class Kind { Sft, Distill };
  Kind kind = Kind::Sft;
  DistillConfig distill;  // used when kind == Distill

  static Objective sft() { return {}; }
  static Objective distillation(DistillConfig cfg) {
    return {Kind::Distill, cfg};
  }
};

struct ForwardResult {
  Eigen::MatrixXd logits;                 // N x class_count, pre-softmax
  std::vector<Eigen::MatrixXd> hidden;    // per hidden layer, post-activation
};

struct LossGrad {
  double loss = 0.0;
  Eigen::MatrixXd grad;  // d loss / d logits
};

struct Gradients {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> weight_grads;
  std::vector<Eigen::VectorXd> bias_grads;
};

// Deterministic initialization: weights ~ N(0, 1/fan_in), biases zero,
// draw order fixed (layers in order, rows then columns).
Checkpoint init_checkpoint(const ArchitectureDescriptor& descriptor,
                           std::uint64_t seed);

// Throws ShapeMismatch if inputs.cols() != input_dim. Never mutates cp.
ForwardResult forward(const Checkpoint& cp, const Eigen::MatrixXd& inputs);

// Row-wise softmax with max subtraction; rows sum to 1 within 1e-12.
Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits);

// Mean over the batch of -log softmax(logits)[label].
// grad = (softmax - one_hot) / N.
LossGrad cross_entropy_loss(const Eigen::MatrixXd& logits,
                            const std::vector<int>& labels);

// loss = mix * T^2 * KL(softmax(teacher/T) || softmax(student/T))
//      + (1 - mix) * cross_entropy(student, labels), batch mean.
LossGrad distill_loss(const Eigen::MatrixXd& student_logits,
                      const Eigen::MatrixXd& teacher_logits,
                      const std::vector<int>& labels,
                      const DistillConfig& cfg);

// Loss and parameter gradients for one batch under the given objective.
// Backbone of train(); exposed so gradients can be verified directly.
Gradients loss_and_gradients(const Checkpoint& cp, const Batch& batch,
                             const Objective& objective);

// Shuffled minibatch Adam. Deterministic given opts.seed; the input
// checkpoint is never modified. Throws DivergedTraining if the loss goes
// non-finite.
Checkpoint train(const Checkpoint& cp, const Batch& dataset,
                 const Objective& objective, const TrainOptions& opts);

// Mean argmax accuracy; ties broken toward the lowest class index.
double evaluate(const Checkpoint& cp, const Batch& dataset);

// --- .ckpt file format ------------------------------------------------------
// Magic "MLAB", u32 LE version (currently 1), u32 LE layer-size count,
// u64 LE layer sizes, u32 LE activation (0 = tanh, 1 = relu), then per
// layer the weight matrix row-major and the bias vector as f64 LE, then
// u64 LE seed and a u32-length-prefixed UTF-8 stage label.

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& cp, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mlab
