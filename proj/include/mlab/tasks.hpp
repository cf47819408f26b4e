// Synthetic classification tasks. Gaussian blobs (one center per class) and
// label-permuted variants sharing a base task's input distribution, which
// maximizes interference and reliably induces forgetting.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mlab/nn.hpp"

namespace mlab {

struct TaskSpec {
  enum class Generator { GaussianBlobs, LabelPermuted };

  std::string name;
  Generator generator = Generator::GaussianBlobs;

  // blob geometry; for LabelPermuted copied from the base task when the
  // config is resolved
  std::vector<Eigen::VectorXd> centers;  // one per class
  double spread = 0.6;

  std::string base_task;         // LabelPermuted only
  std::vector<int> permutation;  // LabelPermuted: label -> permutation[label]

  int train_size = 512;
  int eval_size = 256;
  std::uint64_t seed = 0;

  int class_count() const { return static_cast<int>(centers.size()); }
  int input_dim() const {
    return centers.empty() ? 0 : static_cast<int>(centers.front().size());
  }
};

// Throws ValidationError naming the violated field.
void validate_task(const TaskSpec& spec);

// Deterministic draws; train and eval use distinct sub-seeds of spec.seed,
// so the two sets are disjoint by construction. Classes are assigned
// round-robin, so class balance is exact up to remainder.
Batch make_train_set(const TaskSpec& spec);
Batch make_eval_set(const TaskSpec& spec);

// Core generator: n samples from the task under an explicit seed.
Batch make_dataset(const TaskSpec& spec, std::uint64_t seed, int n);

// Cyclic permutation 0->1->...->C-1->0 used by the default config.
std::vector<int> cyclic_permutation(int classes);

}  // namespace mlab
