// Run configuration: a single JSON file describing one scenario. Parsing is
// strict (unknown keys rejected, every invariant checked up front) and
// loading fills every documented default so the echoed config is complete.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlab/degrade.hpp"
#include "mlab/nn.hpp"
#include "mlab/tasks.hpp"

namespace mlab {

enum class Scenario { Forgetting, Compression, TwoStage };
enum class TeacherRole { Base, Expert };

std::string to_string(Scenario s);
std::string to_string(TeacherRole r);

struct TrainingParams {
  int epochs = 40;
  int recovery_epochs = 40;
  int interference_epochs = 0;  // forgetting SFT stage; 0 means: use epochs
  double learning_rate = 1e-3;
  int batch_size = 32;
};

struct DistillParams {
  double temperature = 2.0;
  double mix = 0.5;           // distillation weight in expert/recovery stages
  double offpolicy_mix = 1.0; // two-stage off-policy phase: pure KL by default
};

// Two-stage scenario: the larger bootstrap teacher. The teacher trains on
// `task` ("task_a" or "task_b") with its own train_size; seeds derive from
// seed_salt, so a teacher configured identically to the student reproduces
// the student's stage-0 checkpoint exactly.
//
// distill_pool > 0 draws that many fresh task inputs for the off-policy
// distillation stage. With offpolicy_mix = 1 the stage is pure KL and never
// reads labels, so the pool acts as unlabeled data the hard-label baseline
// arm has no access to; with offpolicy_mix < 1 the pool's generator labels
// do enter the CE term.
struct TeacherParams {
  ArchitectureDescriptor architecture;
  std::string task = "task_b";
  int train_size = 2048;
  int epochs = 0;  // 0 means: use training.epochs
  int distill_pool = 0;  // 0 means: reuse the student's task train set
  std::string seed_salt = "teacher";
};

struct RunConfig {
  Scenario scenario = Scenario::Forgetting;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "out";
  ArchitectureDescriptor architecture;
  TrainingParams training;
  DistillParams distill;
  TeacherRole teacher_role = TeacherRole::Base;  // forgetting recovery teacher
  std::optional<DegradationSpec> degradation;    // compression only
  TaskSpec task_a;
  std::optional<TaskSpec> task_b;
  std::optional<TeacherParams> teacher;          // two-stage only
};

// Parse and validate a config file. Throws IoError (unreadable file),
// ParseError (syntax, with line information), ValidationError (naming the
// offending field).
RunConfig load_config(const std::string& path);

// Same, from in-memory text (used by load_config and the round-trip tests).
RunConfig parse_config_text(const std::string& text);

// Canonical JSON with every default made explicit; parsing it back yields
// an identical config.
std::string serialize_config(const RunConfig& config);

void save_config(const RunConfig& config, const std::string& path);

// Fully-populated default config for a scenario; the smallest valid file
// ({"scenario": ...}) loads to exactly this plus its explicit keys.
RunConfig default_config(Scenario scenario);

}  // namespace mlab
