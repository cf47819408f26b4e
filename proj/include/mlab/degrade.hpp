// Degradation operators: simulated low-bit weight quantization and
// structured unit pruning, plus a before/after report. Both operators are
// deterministic pure functions; the input checkpoint is never modified.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "mlab/metrics.hpp"
#include "mlab/nn.hpp"

namespace mlab {

// Declarative description of one degradation, as written in pipeline
// config files.
struct DegradationSpec {
  enum class Kind { Quantize, Prune };
  enum class Scope { AllHiddenLayers, LayerList };

  Kind kind = Kind::Quantize;
  int bits = 3;            // quantize: 2..16
  double fraction = 0.1;   // prune: [0, 1)
  Scope scope = Scope::AllHiddenLayers;
  std::vector<int> layers;  // hidden-layer indices when scope == LayerList

  bool operator==(const DegradationSpec& o) const {
    return kind == o.kind && bits == o.bits && fraction == o.fraction &&
           scope == o.scope && layers == o.layers;
  }
};

enum class PruneCriterion { L2Norm };

// Symmetric uniform quantization of every weight matrix to 2^bits - 1
// levels over [-max|w|, +max|w|] (per tensor); biases untouched;
// dequantized values are stored, not packed. Idempotent.
// Throws ValidationError for bits outside 2..16.
Checkpoint quantize(const Checkpoint& cp, int bits);

// Per hidden layer, rank units by the L2 norm of the concatenated incoming
// row and outgoing column, then zero the smallest floor(fraction * n)
// units' incoming and outgoing weights and bias. Throws AllPruned if a
// layer would lose every unit, ValidationError for fraction < 0.
Checkpoint prune(const Checkpoint& cp, double fraction,
                 PruneCriterion criterion = PruneCriterion::L2Norm);

// Applies a DegradationSpec. With Scope::LayerList, quantization is
// restricted to the incoming weight matrices of the listed hidden layers
// and pruning to the listed hidden layers.
Checkpoint apply_degradation(const DegradationSpec& spec, const Checkpoint& cp);

// Accuracy deltas (theta1 - theta) per task plus last-hidden-layer
// CKA(theta, theta1) on each task's probe inputs, standardized per the
// pipeline metric convention. The CKA map is keyed by ("theta", task).
// Throws ArchitectureMismatch.
StageMetrics degradation_report(const Checkpoint& theta,
                                const Checkpoint& theta1,
                                const std::map<std::string, Batch>& eval_sets);

}  // namespace mlab
