// Scenario state machines: each runner executes one degradation->recovery
// pipeline for a single master seed and records Table-shaped metrics per
// stage. Each recovery stage starts from the degraded checkpoint, never
// from scratch, and all CKA values within one run use identical probe
// inputs (the task eval sets).
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mlab/config.hpp"
#include "mlab/metrics.hpp"
#include "mlab/nn.hpp"

namespace mlab {

struct PipelineStage {
  enum class Role { Base, Expert, Degraded, Recovered };
  std::string label;
  Checkpoint checkpoint;
  Role role = Role::Base;
};

std::string to_string(PipelineStage::Role role);

// One pipeline execution: the config snapshot, the named sub-seeds that
// were derived from the master seed, per-stage metrics in stage order, and
// wall-clock seconds per stage (the only non-reproducible field).
struct RunRecord {
  RunConfig config;
  std::uint64_t master_seed = 0;
  std::vector<std::pair<std::string, std::uint64_t>> seeds;
  std::vector<StageMetrics> stages;
  std::vector<double> stage_seconds;
};

// Stage label CKA references are measured against, per scenario:
// "expert" (forgetting), "theta" (compression), "student_stage0" (two-stage).
std::string reference_stage_label(Scenario scenario);

// Stages: base, expert (distilled on A against base), sft (plain SFT on B,
// inducing forgetting), recovered (distillation on A with the configured
// teacher role). Metrics against the expert on both tasks' probes.
RunRecord run_forgetting(const RunConfig& config, std::uint64_t master_seed);

// Stages: theta (trained on the recovery task), theta1 (degraded), theta2
// (distilled against frozen theta on the recovery task). Metrics against
// theta on every configured task's probe.
RunRecord run_compression(const RunConfig& config, std::uint64_t master_seed);

// Stages: student_stage0 (SFT on A), offpolicy (distilled from the large
// teacher on B), recovered (self-distilled on A with stage-0 as teacher),
// sft_baseline (control arm: stage-0 trained on B without the teacher,
// same seed as the offpolicy stage). Metrics against student_stage0.
RunRecord run_two_stage(const RunConfig& config, std::uint64_t master_seed);

// Dispatch on config.scenario.
RunRecord run_pipeline(const RunConfig& config, std::uint64_t master_seed);

// One record per config.seeds entry, in order.
std::vector<RunRecord> run_all_seeds(const RunConfig& config);

// Spearman rank correlation between (1 - CKA-to-reference) and task-A
// accuracy pooled over every stage of every record. Throws
// InsufficientData for < 3 points, < 2 runs, or rank-degenerate inputs.
double misalignment_correlation(const std::vector<RunRecord>& records);

}  // namespace mlab
