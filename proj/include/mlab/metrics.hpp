// Per-stage metric records shared by the degradation report and the
// scenario pipelines.
#pragma once

#include <map>
#include <string>
#include <utility>

#include "mlab/cka.hpp"

namespace mlab {

// Metrics of one pipeline stage: task accuracies plus CKA at the last
// hidden layer against each configured reference checkpoint, keyed by
// (reference stage label, probe task name).
struct StageMetrics {
  std::string stage;
  std::map<std::string, double> accuracy;
  std::map<std::pair<std::string, std::string>, AlignmentScore> cka;
};

}  // namespace mlab
