// Scenario runner implementation. Sub-seeds derive from the master seed
// with fixed salts; the effective task seed additionally folds in the
// master so every run of a batch draws fresh data from the same task
// distribution.
#include "mlab/pipelines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "mlab/rng.hpp"

namespace mlab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

TaskSpec with_run_seed(TaskSpec task, std::uint64_t master_seed) {
  task.seed = splitmix64(splitmix64(task.seed) ^
                         derive_seed(master_seed, "task:" + task.name));
  return task;
}

struct EvalSet {
  std::string task;
  Batch batch;
};

// Accuracy on every eval set plus last-hidden-layer CKA against the
// reference checkpoint on every eval set's inputs (standardized, matching
// the experimental protocol).
StageMetrics stage_metrics(const std::string& label, const Checkpoint& cp,
                           const std::string& reference_label,
                           const Checkpoint& reference,
                           const std::vector<EvalSet>& evals) {
  StageMetrics m;
  m.stage = label;
  for (const EvalSet& e : evals) {
    m.accuracy[e.task] = evaluate(cp, e.batch);
    const Eigen::MatrixXd a = forward(reference, e.batch.inputs).hidden.back();
    const Eigen::MatrixXd b = forward(cp, e.batch.inputs).hidden.back();
    m.cka[{reference_label, e.task}] =
        cka(ActivationMatrix(a, reference_label + "/" + e.task),
            ActivationMatrix(b, label + "/" + e.task), /*preprocess=*/true);
  }
  return m;
}

Checkpoint train_stage(const std::string& stage, const Checkpoint& start,
                       const Batch& data, const Objective& objective,
                       const TrainOptions& opts) {
  try {
    Checkpoint out = train(start, data, objective, opts);
    out.stage_label = stage;
    return out;
  } catch (const DivergedTraining& e) {
    throw DivergedTraining("stage '" + stage + "': " + e.what());
  }
}

struct RecordBuilder {
  RunRecord record;
  std::string reference_label;
  Checkpoint reference;
  std::vector<EvalSet> evals;
  std::vector<PipelineStage> stages;

  void add_stage(const std::string& label, PipelineStage::Role role,
                 const Checkpoint& cp, double secs) {
    for (const PipelineStage& s : stages) {
      if (s.label == label) {
        throw ValidationError("duplicate stage label '" + label + "'");
      }
    }
    stages.push_back({label, cp, role});
    record.stages.push_back(
        stage_metrics(label, cp, reference_label, reference, evals));
    record.stage_seconds.push_back(secs);
  }
};

}  // namespace

std::string to_string(PipelineStage::Role role) {
  switch (role) {
    case PipelineStage::Role::Base: return "base";
    case PipelineStage::Role::Expert: return "expert";
    case PipelineStage::Role::Degraded: return "degraded";
    case PipelineStage::Role::Recovered: return "recovered";
  }
  return "?";
}

std::string reference_stage_label(Scenario scenario) {
  switch (scenario) {
    case Scenario::Forgetting: return "expert";
    case Scenario::Compression: return "theta";
    case Scenario::TwoStage: return "student_stage0";
  }
  return "?";
}

RunRecord run_forgetting(const RunConfig& config, std::uint64_t master_seed) {
  const TaskSpec task_a = with_run_seed(config.task_a, master_seed);
  const TaskSpec task_b = with_run_seed(*config.task_b, master_seed);
  const Batch train_a = make_train_set(task_a);
  const Batch train_b = make_train_set(task_b);

  const std::uint64_t init_seed = derive_seed(master_seed, "init");
  const std::uint64_t expert_seed = derive_seed(master_seed, "train:expert");
  const std::uint64_t sft_seed = derive_seed(master_seed, "train:sft");
  const std::uint64_t recover_seed = derive_seed(master_seed, "train:recovered");

  TrainOptions opts;
  opts.learning_rate = config.training.learning_rate;
  opts.batch_size = config.training.batch_size;

  auto t0 = Clock::now();
  Checkpoint base = init_checkpoint(config.architecture, init_seed);
  base.stage_label = "base";
  const double base_secs = seconds_since(t0);

  t0 = Clock::now();
  opts.epochs = config.training.epochs;
  opts.seed = expert_seed;
  DistillConfig expert_cfg{config.distill.temperature, config.distill.mix, &base};
  const Checkpoint expert = train_stage("expert", base, train_a,
                                        Objective::distillation(expert_cfg), opts);
  const double expert_secs = seconds_since(t0);

  t0 = Clock::now();
  opts.epochs = config.training.interference_epochs > 0
                    ? config.training.interference_epochs
                    : config.training.epochs;
  opts.seed = sft_seed;
  const Checkpoint sft = train_stage("sft", expert, train_b, Objective::sft(), opts);
  const double sft_secs = seconds_since(t0);

  t0 = Clock::now();
  opts.epochs = config.training.recovery_epochs;
  opts.seed = recover_seed;
  const Checkpoint& teacher =
      config.teacher_role == TeacherRole::Base ? base : expert;
  DistillConfig recover_cfg{config.distill.temperature, config.distill.mix,
                            &teacher};
  const Checkpoint recovered = train_stage(
      "recovered", sft, train_a, Objective::distillation(recover_cfg), opts);
  const double recovered_secs = seconds_since(t0);

  RecordBuilder builder;
  builder.record.config = config;
  builder.record.master_seed = master_seed;
  builder.record.seeds = {{"master", master_seed},
                          {"init", init_seed},
                          {"task_a", task_a.seed},
                          {"task_b", task_b.seed},
                          {"train:expert", expert_seed},
                          {"train:sft", sft_seed},
                          {"train:recovered", recover_seed}};
  builder.reference_label = reference_stage_label(Scenario::Forgetting);
  builder.reference = expert;
  builder.evals = {{task_a.name, make_eval_set(task_a)},
                   {task_b.name, make_eval_set(task_b)}};

  builder.add_stage("base", PipelineStage::Role::Base, base, base_secs);
  builder.add_stage("expert", PipelineStage::Role::Expert, expert, expert_secs);
  builder.add_stage("sft", PipelineStage::Role::Degraded, sft, sft_secs);
  builder.add_stage("recovered", PipelineStage::Role::Recovered, recovered,
                    recovered_secs);
  return builder.record;
}

RunRecord run_compression(const RunConfig& config, std::uint64_t master_seed) {
  const TaskSpec task_a = with_run_seed(config.task_a, master_seed);
  const Batch train_a = make_train_set(task_a);

  const std::uint64_t init_seed = derive_seed(master_seed, "init");
  const std::uint64_t theta_seed = derive_seed(master_seed, "train:theta");
  const std::uint64_t recover_seed = derive_seed(master_seed, "train:recovered");

  TrainOptions opts;
  opts.learning_rate = config.training.learning_rate;
  opts.batch_size = config.training.batch_size;

  auto t0 = Clock::now();
  opts.epochs = config.training.epochs;
  opts.seed = theta_seed;
  const Checkpoint theta =
      train_stage("theta", init_checkpoint(config.architecture, init_seed),
                  train_a, Objective::sft(), opts);
  const double theta_secs = seconds_since(t0);

  t0 = Clock::now();
  Checkpoint theta1 = apply_degradation(*config.degradation, theta);
  theta1.stage_label = "theta1";
  const double theta1_secs = seconds_since(t0);

  t0 = Clock::now();
  opts.epochs = config.training.recovery_epochs;
  opts.seed = recover_seed;
  DistillConfig recover_cfg{config.distill.temperature, config.distill.mix,
                            &theta};
  const Checkpoint theta2 = train_stage(
      "theta2", theta1, train_a, Objective::distillation(recover_cfg), opts);
  const double theta2_secs = seconds_since(t0);

  RecordBuilder builder;
  builder.record.config = config;
  builder.record.master_seed = master_seed;
  builder.record.seeds = {{"master", master_seed},
                          {"init", init_seed},
                          {"task_a", task_a.seed},
                          {"train:theta", theta_seed},
                          {"train:recovered", recover_seed}};
  builder.reference_label = reference_stage_label(Scenario::Compression);
  builder.reference = theta;
  builder.evals = {{task_a.name, make_eval_set(task_a)}};
  if (config.task_b) {
    const TaskSpec task_b = with_run_seed(*config.task_b, master_seed);
    builder.record.seeds.emplace_back("task_b", task_b.seed);
    builder.evals.push_back({task_b.name, make_eval_set(task_b)});
  }

  builder.add_stage("theta", PipelineStage::Role::Base, theta, theta_secs);
  builder.add_stage("theta1", PipelineStage::Role::Degraded, theta1, theta1_secs);
  builder.add_stage("theta2", PipelineStage::Role::Recovered, theta2, theta2_secs);
  return builder.record;
}

RunRecord run_two_stage(const RunConfig& config, std::uint64_t master_seed) {
  const TaskSpec task_a = with_run_seed(config.task_a, master_seed);
  const TaskSpec task_b = with_run_seed(*config.task_b, master_seed);
  const Batch train_a = make_train_set(task_a);
  const Batch train_b = make_train_set(task_b);

  const TeacherParams& tp = *config.teacher;
  // the teacher draws from the same task stream as its target task, so a
  // teacher configured identically to the student reproduces the student's
  // stage-0 checkpoint bit for bit
  TaskSpec teacher_task = tp.task == "task_a" ? task_a : task_b;
  teacher_task.train_size = tp.train_size;
  const Batch teacher_data = make_train_set(teacher_task);

  const std::uint64_t student_init = derive_seed(master_seed, "init:student");
  const std::uint64_t teacher_init =
      derive_seed(master_seed, "init:" + tp.seed_salt);
  const std::uint64_t student_train = derive_seed(master_seed, "train:student");
  const std::uint64_t teacher_train =
      derive_seed(master_seed, "train:" + tp.seed_salt);
  const std::uint64_t offpolicy_seed = derive_seed(master_seed, "train:offpolicy");
  const std::uint64_t recover_seed = derive_seed(master_seed, "train:recovered");

  TrainOptions opts;
  opts.learning_rate = config.training.learning_rate;
  opts.batch_size = config.training.batch_size;

  // stage 0: the large teacher and the student's general-capability state
  auto t0 = Clock::now();
  opts.epochs = tp.epochs > 0 ? tp.epochs : config.training.epochs;
  opts.seed = teacher_train;
  const Checkpoint teacher =
      train_stage("teacher", init_checkpoint(tp.architecture, teacher_init),
                  teacher_data, Objective::sft(), opts);

  opts.epochs = config.training.epochs;
  opts.seed = student_train;
  const Checkpoint student0 =
      train_stage("student_stage0",
                  init_checkpoint(config.architecture, student_init), train_a,
                  Objective::sft(), opts);
  const double stage0_secs = seconds_since(t0);

  // stage 1: off-policy distillation from the teacher on task B; with a
  // configured pool the stage draws extra task-B inputs the labeled
  // baseline arm never sees
  t0 = Clock::now();
  opts.epochs = config.training.epochs;
  opts.seed = offpolicy_seed;
  Batch distill_data = train_b;
  if (tp.distill_pool > 0) {
    distill_data = make_dataset(task_b, derive_seed(task_b.seed, "distill-pool"),
                                tp.distill_pool);
  }
  DistillConfig off_cfg{config.distill.temperature, config.distill.offpolicy_mix,
                        &teacher};
  const Checkpoint offpolicy = train_stage(
      "offpolicy", student0, distill_data, Objective::distillation(off_cfg), opts);
  const double offpolicy_secs = seconds_since(t0);

  // stage 2: self-distillation recovery on task A, stage-0 state as teacher
  t0 = Clock::now();
  opts.epochs = config.training.recovery_epochs;
  opts.seed = recover_seed;
  DistillConfig recover_cfg{config.distill.temperature, config.distill.mix,
                            &student0};
  const Checkpoint recovered = train_stage(
      "recovered", offpolicy, train_a, Objective::distillation(recover_cfg), opts);
  const double recovered_secs = seconds_since(t0);

  // control arm: the same stage-1 training without the teacher signal
  t0 = Clock::now();
  opts.epochs = config.training.epochs;
  opts.seed = offpolicy_seed;
  const Checkpoint baseline =
      train_stage("sft_baseline", student0, train_b, Objective::sft(), opts);
  const double baseline_secs = seconds_since(t0);

  RecordBuilder builder;
  builder.record.config = config;
  builder.record.master_seed = master_seed;
  builder.record.seeds = {{"master", master_seed},
                          {"init:student", student_init},
                          {"init:" + tp.seed_salt, teacher_init},
                          {"task_a", task_a.seed},
                          {"task_b", task_b.seed},
                          {"train:student", student_train},
                          {"train:" + tp.seed_salt, teacher_train},
                          {"train:offpolicy", offpolicy_seed},
                          {"train:recovered", recover_seed}};
  builder.reference_label = reference_stage_label(Scenario::TwoStage);
  builder.reference = student0;
  builder.evals = {{task_a.name, make_eval_set(task_a)},
                   {task_b.name, make_eval_set(task_b)}};

  builder.add_stage("student_stage0", PipelineStage::Role::Expert, student0,
                    stage0_secs);
  builder.add_stage("offpolicy", PipelineStage::Role::Degraded, offpolicy,
                    offpolicy_secs);
  builder.add_stage("recovered", PipelineStage::Role::Recovered, recovered,
                    recovered_secs);
  builder.add_stage("sft_baseline", PipelineStage::Role::Base, baseline,
                    baseline_secs);
  return builder.record;
}

RunRecord run_pipeline(const RunConfig& config, std::uint64_t master_seed) {
  switch (config.scenario) {
    case Scenario::Forgetting: return run_forgetting(config, master_seed);
    case Scenario::Compression: return run_compression(config, master_seed);
    case Scenario::TwoStage: return run_two_stage(config, master_seed);
  }
  throw ValidationError("unknown scenario");
}

std::vector<RunRecord> run_all_seeds(const RunConfig& config) {
  std::vector<RunRecord> records;
  records.reserve(config.seeds.size());
  for (std::uint64_t seed : config.seeds) {
    records.push_back(run_pipeline(config, seed));
  }
  return records;
}

namespace {

// average ranks with ties
std::vector<double> ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = mean_rank;
    i = j + 1;
  }
  return r;
}

}  // namespace

double misalignment_correlation(const std::vector<RunRecord>& records) {
  std::vector<double> misalignment;
  std::vector<double> accuracy;
  std::size_t contributing_runs = 0;
  for (const RunRecord& record : records) {
    const std::string ref = reference_stage_label(record.config.scenario);
    const std::string task = record.config.task_a.name;
    bool contributed = false;
    for (const StageMetrics& stage : record.stages) {
      const auto acc = stage.accuracy.find(task);
      const auto score = stage.cka.find({ref, task});
      if (acc == stage.accuracy.end() || score == stage.cka.end()) continue;
      misalignment.push_back(1.0 - score->second.cka);
      accuracy.push_back(acc->second);
      contributed = true;
    }
    if (contributed) ++contributing_runs;
  }
  if (misalignment.size() < 3 || contributing_runs < 2) {
    throw InsufficientData("need >= 3 stage points spanning >= 2 runs, got " +
                           std::to_string(misalignment.size()) + " points from " +
                           std::to_string(contributing_runs) + " runs");
  }

  const std::vector<double> rx = ranks(misalignment);
  const std::vector<double> ry = ranks(accuracy);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw InsufficientData("degenerate ranks: a variable is constant");
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace mlab
