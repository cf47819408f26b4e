#include "mlab/tasks.hpp"

#include <random>

#include "mlab/rng.hpp"

namespace mlab {

void validate_task(const TaskSpec& spec) {
  if (spec.centers.size() < 2) {
    throw ValidationError("task '" + spec.name + "': classes must be >= 2");
  }
  const auto dim = spec.centers.front().size();
  if (dim < 1) {
    throw ValidationError("task '" + spec.name + "': centers must be non-empty");
  }
  for (const auto& c : spec.centers) {
    if (c.size() != dim) {
      throw ValidationError("task '" + spec.name +
                            "': centers must share one dimensionality");
    }
  }
  if (spec.spread <= 0.0) {
    throw ValidationError("task '" + spec.name + "': spread must be positive");
  }
  if (spec.train_size < 1 || spec.eval_size < 1) {
    throw ValidationError("task '" + spec.name +
                          "': train_size and eval_size must be >= 1");
  }
  if (spec.generator == TaskSpec::Generator::LabelPermuted) {
    const int classes = spec.class_count();
    if (static_cast<int>(spec.permutation.size()) != classes) {
      throw ValidationError("task '" + spec.name +
                            "': permutation length must equal the class count");
    }
    std::vector<bool> seen(static_cast<std::size_t>(classes), false);
    for (int p : spec.permutation) {
      if (p < 0 || p >= classes || seen[static_cast<std::size_t>(p)]) {
        throw ValidationError("task '" + spec.name +
                              "': permutation must be a bijection on labels");
      }
      seen[static_cast<std::size_t>(p)] = true;
    }
  }
}

Batch make_dataset(const TaskSpec& spec, std::uint64_t seed, int n) {
  validate_task(spec);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int classes = spec.class_count();
  const Eigen::Index dim = spec.centers.front().size();

  Batch batch;
  batch.inputs.resize(n, dim);
  batch.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int cls = i % classes;
    for (Eigen::Index d = 0; d < dim; ++d) {
      batch.inputs(i, d) = spec.centers[static_cast<std::size_t>(cls)](d) +
                           spec.spread * gauss(rng);
    }
    batch.labels[static_cast<std::size_t>(i)] =
        spec.generator == TaskSpec::Generator::LabelPermuted
            ? spec.permutation[static_cast<std::size_t>(cls)]
            : cls;
  }
  return batch;
}

Batch make_train_set(const TaskSpec& spec) {
  return make_dataset(spec, derive_seed(spec.seed, "train"), spec.train_size);
}

Batch make_eval_set(const TaskSpec& spec) {
  return make_dataset(spec, derive_seed(spec.seed, "eval"), spec.eval_size);
}

std::vector<int> cyclic_permutation(int classes) {
  std::vector<int> perm(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c) {
    perm[static_cast<std::size_t>(c)] = (c + 1) % classes;
  }
  return perm;
}

}  // namespace mlab
