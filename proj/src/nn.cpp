// MLP engine implementation. Gradients here are checked against central
// finite differences in the test suite; keep the math readable.
#include "mlab/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

namespace mlab {

namespace {

void validate_descriptor(const ArchitectureDescriptor& d) {
  if (d.layer_sizes.size() < 3) {
    throw ValidationError("architecture needs at least one hidden layer");
  }
  for (int s : d.layer_sizes) {
    if (s < 1) {
      throw ValidationError("layer sizes must be >= 1");
    }
  }
}

void validate_batch(const Batch& b, const ArchitectureDescriptor& d) {
  if (b.inputs.rows() < 1) {
    throw ShapeMismatch("batch must contain at least one sample");
  }
  if (b.inputs.cols() != d.input_dim()) {
    throw ShapeMismatch("batch input dim " + std::to_string(b.inputs.cols()) +
                        " does not match network input dim " +
                        std::to_string(d.input_dim()));
  }
  if (static_cast<Eigen::Index>(b.labels.size()) != b.inputs.rows()) {
    throw ShapeMismatch("label count does not match input row count");
  }
  for (int y : b.labels) {
    if (y < 0 || y >= d.class_count()) {
      throw ShapeMismatch("label out of range: " + std::to_string(y));
    }
  }
}

Eigen::MatrixXd apply_activation(const Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::Tanh) {
    return z.array().tanh();
  }
  return z.cwiseMax(0.0);
}

// Derivative expressed through the post-activation value: tanh' = 1 - a^2,
// relu' = [a > 0].
Eigen::MatrixXd activation_derivative(const Eigen::MatrixXd& a, Activation act) {
  if (act == Activation::Tanh) {
    return 1.0 - a.array().square();
  }
  return (a.array() > 0.0).cast<double>();
}

Eigen::MatrixXd log_softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out = logits;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double max = out.row(i).maxCoeff();
    out.row(i).array() -= max;
    const double lse = std::log(out.row(i).array().exp().sum());
    out.row(i).array() -= lse;
  }
  return out;
}

}  // namespace

Checkpoint init_checkpoint(const ArchitectureDescriptor& descriptor,
                           std::uint64_t seed) {
  validate_descriptor(descriptor);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Checkpoint cp;
  cp.descriptor = descriptor;
  cp.seed = seed;
  cp.stage_label = "init";
  const auto& sizes = descriptor.layer_sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const int fan_out = sizes[l + 1];
    Eigen::MatrixXd w(fan_out, fan_in);
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (int i = 0; i < fan_out; ++i) {
      for (int j = 0; j < fan_in; ++j) {
        w(i, j) = gauss(rng) * scale;
      }
    }
    cp.weights.push_back(std::move(w));
    cp.biases.emplace_back(Eigen::VectorXd::Zero(fan_out));
  }
  return cp;
}

ForwardResult forward(const Checkpoint& cp, const Eigen::MatrixXd& inputs) {
  if (inputs.cols() != cp.descriptor.input_dim()) {
    throw ShapeMismatch("input dim " + std::to_string(inputs.cols()) +
                        " does not match network input dim " +
                        std::to_string(cp.descriptor.input_dim()));
  }
  ForwardResult result;
  Eigen::MatrixXd a = inputs;
  const std::size_t last = cp.weights.size() - 1;
  for (std::size_t l = 0; l < cp.weights.size(); ++l) {
    Eigen::MatrixXd z = a * cp.weights[l].transpose();
    z.rowwise() += cp.biases[l].transpose();
    if (l < last) {
      a = apply_activation(z, cp.descriptor.activation);
      result.hidden.push_back(a);
    } else {
      result.logits = std::move(z);
    }
  }
  return result;
}

Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out = logits;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    out.row(i).array() -= out.row(i).maxCoeff();
    out.row(i) = out.row(i).array().exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

LossGrad cross_entropy_loss(const Eigen::MatrixXd& logits,
                            const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows()) {
    throw ShapeMismatch("label count does not match logit row count");
  }
  const Eigen::Index n = logits.rows();
  const Eigen::MatrixXd logp = log_softmax(logits);

  LossGrad out;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.loss -= logp(i, labels[i]);
  }
  out.loss /= static_cast<double>(n);

  out.grad = logp.array().exp();
  for (Eigen::Index i = 0; i < n; ++i) {
    out.grad(i, labels[i]) -= 1.0;
  }
  out.grad /= static_cast<double>(n);
  return out;
}

LossGrad distill_loss(const Eigen::MatrixXd& student_logits,
                      const Eigen::MatrixXd& teacher_logits,
                      const std::vector<int>& labels,
                      const DistillConfig& cfg) {
  if (student_logits.rows() != teacher_logits.rows() ||
      student_logits.cols() != teacher_logits.cols()) {
    throw ShapeMismatch("student and teacher logit shapes differ");
  }
  if (cfg.temperature <= 0.0) {
    throw ValidationError("temperature must be positive");
  }
  if (cfg.mix < 0.0 || cfg.mix > 1.0) {
    throw ValidationError("mix must lie in [0, 1]");
  }
  const double t = cfg.temperature;
  const double lambda = cfg.mix;
  const Eigen::Index n = student_logits.rows();

  LossGrad out;
  out.grad = Eigen::MatrixXd::Zero(n, student_logits.cols());

  if (lambda > 0.0) {
    const Eigen::MatrixXd ls = log_softmax(student_logits / t);
    const Eigen::MatrixXd lt = log_softmax(teacher_logits / t);
    const Eigen::ArrayXXd p = lt.array().exp();
    const Eigen::ArrayXXd q = ls.array().exp();
    // forward KL(teacher || student) on softened distributions
    const double kl = (p * (lt.array() - ls.array())).sum() /
                      static_cast<double>(n);
    out.loss += lambda * t * t * kl;
    out.grad += (lambda * t / static_cast<double>(n)) * (q - p).matrix();
  }
  if (lambda < 1.0) {
    const LossGrad ce = cross_entropy_loss(student_logits, labels);
    out.loss += (1.0 - lambda) * ce.loss;
    out.grad += (1.0 - lambda) * ce.grad;
  }
  return out;
}

Gradients loss_and_gradients(const Checkpoint& cp, const Batch& batch,
                             const Objective& objective) {
  validate_batch(batch, cp.descriptor);

  // forward with cached layer inputs; acts[l] feeds weights[l]
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(cp.weights.size());
  acts.push_back(batch.inputs);
  Eigen::MatrixXd logits;
  const std::size_t last = cp.weights.size() - 1;
  for (std::size_t l = 0; l < cp.weights.size(); ++l) {
    Eigen::MatrixXd z = acts.back() * cp.weights[l].transpose();
    z.rowwise() += cp.biases[l].transpose();
    if (l < last) {
      acts.push_back(apply_activation(z, cp.descriptor.activation));
    } else {
      logits = std::move(z);
    }
  }

  LossGrad top;
  if (objective.kind == Objective::Kind::Sft) {
    top = cross_entropy_loss(logits, batch.labels);
  } else {
    const DistillConfig& cfg = objective.distill;
    if (cfg.teacher == nullptr) {
      throw ValidationError("distillation objective needs a teacher checkpoint");
    }
    const Eigen::MatrixXd teacher_logits =
        forward(*cfg.teacher, batch.inputs).logits;
    top = distill_loss(logits, teacher_logits, batch.labels, cfg);
  }

  Gradients g;
  g.loss = top.loss;
  g.weight_grads.resize(cp.weights.size());
  g.bias_grads.resize(cp.weights.size());

  Eigen::MatrixXd delta = std::move(top.grad);
  for (std::size_t l = cp.weights.size(); l-- > 0;) {
    g.weight_grads[l] = delta.transpose() * acts[l];
    g.bias_grads[l] = delta.colwise().sum();
    if (l > 0) {
      delta = (delta * cp.weights[l]).cwiseProduct(
          activation_derivative(acts[l], cp.descriptor.activation));
    }
  }
  return g;
}

Checkpoint train(const Checkpoint& cp, const Batch& dataset,
                 const Objective& objective, const TrainOptions& opts) {
  validate_batch(dataset, cp.descriptor);
  if (opts.epochs < 0) {
    throw ValidationError("epochs must be >= 0");
  }
  if (opts.batch_size < 1) {
    throw ValidationError("batch_size must be >= 1");
  }

  Checkpoint out = cp;
  out.seed = opts.seed;
  if (opts.epochs == 0) {
    return out;
  }

  // Adam state
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
  for (std::size_t l = 0; l < out.weights.size(); ++l) {
    mw.push_back(Eigen::MatrixXd::Zero(out.weights[l].rows(), out.weights[l].cols()));
    vw.push_back(Eigen::MatrixXd::Zero(out.weights[l].rows(), out.weights[l].cols()));
    mb.push_back(Eigen::VectorXd::Zero(out.biases[l].size()));
    vb.push_back(Eigen::VectorXd::Zero(out.biases[l].size()));
  }

  const Eigen::Index n = dataset.inputs.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(opts.seed);

  long step = 0;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += opts.batch_size) {
      const Eigen::Index count = std::min<Eigen::Index>(opts.batch_size, n - start);
      Batch mini;
      mini.inputs.resize(count, dataset.inputs.cols());
      mini.labels.resize(static_cast<std::size_t>(count));
      for (Eigen::Index r = 0; r < count; ++r) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + r)];
        mini.inputs.row(r) = dataset.inputs.row(src);
        mini.labels[static_cast<std::size_t>(r)] =
            dataset.labels[static_cast<std::size_t>(src)];
      }

      const Gradients g = loss_and_gradients(out, mini, objective);
      if (!std::isfinite(g.loss)) {
        throw DivergedTraining("loss became non-finite at epoch " +
                               std::to_string(epoch));
      }

      ++step;
      const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < out.weights.size(); ++l) {
        mw[l] = opts.beta1 * mw[l] + (1.0 - opts.beta1) * g.weight_grads[l];
        vw[l] = opts.beta2 * vw[l] +
                (1.0 - opts.beta2) * g.weight_grads[l].cwiseProduct(g.weight_grads[l]);
        out.weights[l].array() -=
            opts.learning_rate * (mw[l].array() / bc1) /
            ((vw[l].array() / bc2).sqrt() + opts.adam_eps);

        mb[l] = opts.beta1 * mb[l] + (1.0 - opts.beta1) * g.bias_grads[l];
        vb[l] = opts.beta2 * vb[l] +
                (1.0 - opts.beta2) * g.bias_grads[l].cwiseProduct(g.bias_grads[l]);
        out.biases[l].array() -=
            opts.learning_rate * (mb[l].array() / bc1) /
            ((vb[l].array() / bc2).sqrt() + opts.adam_eps);
      }
    }
  }
  return out;
}

double evaluate(const Checkpoint& cp, const Batch& dataset) {
  validate_batch(dataset, cp.descriptor);
  const Eigen::MatrixXd logits = forward(cp, dataset.inputs).logits;
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) {
        best = static_cast<int>(c);
      }
    }
    if (best == dataset.labels[static_cast<std::size_t>(i)]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

// --- .ckpt io ---------------------------------------------------------------

namespace {

constexpr char kCkptMagic[4] = {'M', 'L', 'A', 'B'};

template <typename T>
void write_pod(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof value)) {
    throw ParseError(std::string("truncated checkpoint while reading ") + what);
  }
  return value;
}

}  // namespace

void save_checkpoint(const Checkpoint& cp, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw IoError("cannot open for writing: " + path);
  }
  os.write(kCkptMagic, 4);
  write_pod<std::uint32_t>(os, kCheckpointVersion);
  write_pod<std::uint32_t>(os,
                           static_cast<std::uint32_t>(cp.descriptor.layer_sizes.size()));
  for (int s : cp.descriptor.layer_sizes) {
    write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(s));
  }
  write_pod<std::uint32_t>(
      os, cp.descriptor.activation == Activation::Tanh ? 0u : 1u);
  for (std::size_t l = 0; l < cp.weights.size(); ++l) {
    const Eigen::MatrixXd& w = cp.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        write_pod<double>(os, w(i, j));
      }
    }
    for (Eigen::Index i = 0; i < cp.biases[l].size(); ++i) {
      write_pod<double>(os, cp.biases[l](i));
    }
  }
  write_pod<std::uint64_t>(os, cp.seed);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(cp.stage_label.size()));
  os.write(cp.stage_label.data(),
           static_cast<std::streamsize>(cp.stage_label.size()));
  if (!os) {
    throw IoError("write failed: " + path);
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw IoError("cannot open: " + path);
  }
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kCkptMagic, 4) != 0) {
    throw ParseError("not a .ckpt file: " + path);
  }
  const auto version = read_pod<std::uint32_t>(is, "version");
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported .ckpt version " + std::to_string(version) +
                     " in " + path);
  }
  const auto layer_count = read_pod<std::uint32_t>(is, "layer count");
  if (layer_count < 3 || layer_count > 64) {
    throw ParseError("implausible layer count in " + path);
  }
  Checkpoint cp;
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    const auto size = read_pod<std::uint64_t>(is, "layer size");
    if (size < 1 || size > (1ULL << 24)) {
      throw ParseError("implausible layer size in " + path);
    }
    cp.descriptor.layer_sizes.push_back(static_cast<int>(size));
  }
  const auto act = read_pod<std::uint32_t>(is, "activation");
  if (act > 1) {
    throw ParseError("unknown activation code in " + path);
  }
  cp.descriptor.activation = act == 0 ? Activation::Tanh : Activation::Relu;

  const auto& sizes = cp.descriptor.layer_sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Eigen::MatrixXd w(sizes[l + 1], sizes[l]);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        w(i, j) = read_pod<double>(is, "weight");
      }
    }
    Eigen::VectorXd b(sizes[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      b(i) = read_pod<double>(is, "bias");
    }
    if (!w.allFinite() || !b.allFinite()) {
      throw ParseError("non-finite parameters in " + path);
    }
    cp.weights.push_back(std::move(w));
    cp.biases.push_back(std::move(b));
  }
  cp.seed = read_pod<std::uint64_t>(is, "seed");
  const auto label_len = read_pod<std::uint32_t>(is, "label length");
  cp.stage_label.resize(label_len);
  if (label_len > 0 &&
      !is.read(cp.stage_label.data(), label_len)) {
    throw ParseError("truncated checkpoint while reading label in " + path);
  }
  return cp;
}

}  // namespace mlab
