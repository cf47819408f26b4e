// Degradation operator implementation.
#include "mlab/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mlab {

namespace {

// Quantized value is reconstructed as (k / K) * m with integer k, so the
// extreme levels reproduce +/-m exactly and re-quantizing is a bitwise
// no-op.
void quantize_tensor(Eigen::MatrixXd& w, int bits) {
  const double m = w.cwiseAbs().maxCoeff();
  if (m == 0.0) {
    return;
  }
  const double levels = static_cast<double>((1 << (bits - 1)) - 1);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      double k = std::round(w(i, j) / m * levels);
      k = std::clamp(k, -levels, levels);
      w(i, j) = (k / levels) * m;
    }
  }
}

void validate_bits(int bits) {
  if (bits < 2 || bits > 16) {
    throw ValidationError("quantization bits must lie in 2..16, got " +
                          std::to_string(bits));
  }
}

// Zeroes the weakest floor(fraction * n) units of one hidden layer.
// `hidden` is the 0-based hidden-layer index.
void prune_hidden_layer(Checkpoint& cp, int hidden, double fraction) {
  Eigen::MatrixXd& incoming = cp.weights[static_cast<std::size_t>(hidden)];
  Eigen::MatrixXd& outgoing = cp.weights[static_cast<std::size_t>(hidden) + 1];
  Eigen::VectorXd& bias = cp.biases[static_cast<std::size_t>(hidden)];

  const int n = static_cast<int>(incoming.rows());
  const int kill = static_cast<int>(std::floor(fraction * n));
  if (kill >= n) {
    throw AllPruned("pruning fraction " + std::to_string(fraction) +
                    " would remove all " + std::to_string(n) +
                    " units of hidden layer " + std::to_string(hidden));
  }
  if (kill == 0) {
    return;
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> norm2(static_cast<std::size_t>(n));
  for (int u = 0; u < n; ++u) {
    norm2[static_cast<std::size_t>(u)] =
        incoming.row(u).squaredNorm() + outgoing.col(u).squaredNorm();
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return norm2[static_cast<std::size_t>(a)] < norm2[static_cast<std::size_t>(b)];
  });

  for (int r = 0; r < kill; ++r) {
    const int u = order[static_cast<std::size_t>(r)];
    incoming.row(u).setZero();
    outgoing.col(u).setZero();
    bias(u) = 0.0;
  }
}

}  // namespace

Checkpoint quantize(const Checkpoint& cp, int bits) {
  validate_bits(bits);
  Checkpoint out = cp;
  for (auto& w : out.weights) {
    quantize_tensor(w, bits);
  }
  return out;
}

Checkpoint prune(const Checkpoint& cp, double fraction, PruneCriterion) {
  if (fraction < 0.0) {
    throw ValidationError("pruning fraction must be >= 0");
  }
  Checkpoint out = cp;
  for (int h = 0; h < cp.descriptor.hidden_layer_count(); ++h) {
    prune_hidden_layer(out, h, fraction);
  }
  return out;
}

Checkpoint apply_degradation(const DegradationSpec& spec, const Checkpoint& cp) {
  if (spec.scope == DegradationSpec::Scope::AllHiddenLayers) {
    return spec.kind == DegradationSpec::Kind::Quantize
               ? quantize(cp, spec.bits)
               : prune(cp, spec.fraction);
  }

  Checkpoint out = cp;
  for (int h : spec.layers) {
    if (h < 0 || h >= cp.descriptor.hidden_layer_count()) {
      throw ValidationError("degradation layer index out of range: " +
                            std::to_string(h));
    }
    if (spec.kind == DegradationSpec::Kind::Quantize) {
      validate_bits(spec.bits);
      quantize_tensor(out.weights[static_cast<std::size_t>(h)], spec.bits);
    } else {
      if (spec.fraction < 0.0) {
        throw ValidationError("pruning fraction must be >= 0");
      }
      prune_hidden_layer(out, h, spec.fraction);
    }
  }
  return out;
}

StageMetrics degradation_report(const Checkpoint& theta,
                                const Checkpoint& theta1,
                                const std::map<std::string, Batch>& eval_sets) {
  if (!(theta.descriptor == theta1.descriptor)) {
    throw ArchitectureMismatch(
        "degradation report requires identical architectures");
  }
  StageMetrics delta;
  delta.stage = "degradation";
  for (const auto& [task, batch] : eval_sets) {
    delta.accuracy[task] = evaluate(theta1, batch) - evaluate(theta, batch);
    const Eigen::MatrixXd a = forward(theta, batch.inputs).hidden.back();
    const Eigen::MatrixXd b = forward(theta1, batch.inputs).hidden.back();
    delta.cka[{"theta", task}] =
        cka(ActivationMatrix(a, "theta/" + task),
            ActivationMatrix(b, "theta1/" + task), /*preprocess=*/true);
  }
  return delta;
}

}  // namespace mlab
