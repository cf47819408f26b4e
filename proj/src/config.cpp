// Config parsing: strict JSON with per-scenario defaults. Every reader
// names the offending field in its error so misconfigurations are
// actionable from the message alone.
#include "mlab/config.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace mlab {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw ValidationError(field + ": " + message);
}

void check_keys(const json& obj, const std::string& context,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end()) {
      fail(context.empty() ? key : context + "." + key, "unknown key");
    }
  }
}

std::string join(const std::string& context, const char* key) {
  return context.empty() ? key : context + "." + key;
}

double get_double(const json& obj, const char* key, const std::string& context,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) fail(join(context, key), "expected a number");
  return obj[key].get<double>();
}

int get_int(const json& obj, const char* key, const std::string& context,
            int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) fail(join(context, key), "expected an integer");
  return obj[key].get<int>();
}

std::uint64_t get_u64(const json& obj, const char* key,
                      const std::string& context, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_unsigned() && !obj[key].is_number_integer()) {
    fail(join(context, key), "expected a non-negative integer");
  }
  return obj[key].get<std::uint64_t>();
}

std::string get_string(const json& obj, const char* key,
                       const std::string& context, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) fail(join(context, key), "expected a string");
  return obj[key].get<std::string>();
}

ArchitectureDescriptor parse_architecture(const json& obj,
                                          const std::string& context,
                                          const ArchitectureDescriptor& fallback) {
  check_keys(obj, context, {"layer_sizes", "activation"});
  ArchitectureDescriptor arch = fallback;
  if (obj.contains("layer_sizes")) {
    if (!obj["layer_sizes"].is_array()) {
      fail(join(context, "layer_sizes"), "expected an array of integers");
    }
    arch.layer_sizes.clear();
    for (const auto& v : obj["layer_sizes"]) {
      if (!v.is_number_integer()) {
        fail(join(context, "layer_sizes"), "expected an array of integers");
      }
      arch.layer_sizes.push_back(v.get<int>());
    }
  }
  const std::string act =
      get_string(obj, "activation", context,
                 fallback.activation == Activation::Tanh ? "tanh" : "relu");
  if (act == "tanh") {
    arch.activation = Activation::Tanh;
  } else if (act == "relu") {
    arch.activation = Activation::Relu;
  } else {
    fail(join(context, "activation"), "must be \"tanh\" or \"relu\"");
  }
  if (arch.layer_sizes.size() < 3) {
    fail(join(context, "layer_sizes"), "need input, at least one hidden, and output");
  }
  for (int s : arch.layer_sizes) {
    if (s < 1) fail(join(context, "layer_sizes"), "all sizes must be >= 1");
  }
  return arch;
}

TaskSpec parse_task(const json& obj, const std::string& context,
                    const std::string& key_name, const TaskSpec& fallback) {
  check_keys(obj, context,
             {"name", "type", "centers", "spread", "base", "permutation",
              "train_size", "eval_size", "seed"});
  TaskSpec task = fallback;
  task.name = get_string(obj, "name", context, key_name);

  const std::string type = get_string(
      obj, "type", context,
      fallback.generator == TaskSpec::Generator::GaussianBlobs
          ? "gaussian_blobs"
          : "label_permuted");
  if (type == "gaussian_blobs") {
    task.generator = TaskSpec::Generator::GaussianBlobs;
    task.base_task.clear();
    task.permutation.clear();
  } else if (type == "label_permuted") {
    task.generator = TaskSpec::Generator::LabelPermuted;
  } else {
    fail(join(context, "type"), "must be \"gaussian_blobs\" or \"label_permuted\"");
  }

  if (obj.contains("centers")) {
    if (!obj["centers"].is_array() || obj["centers"].empty()) {
      fail(join(context, "centers"), "expected a non-empty array of points");
    }
    task.centers.clear();
    for (const auto& point : obj["centers"]) {
      if (!point.is_array() || point.empty()) {
        fail(join(context, "centers"), "each center must be a non-empty array");
      }
      Eigen::VectorXd c(point.size());
      Eigen::Index i = 0;
      for (const auto& v : point) {
        if (!v.is_number()) fail(join(context, "centers"), "expected numbers");
        c(i++) = v.get<double>();
      }
      task.centers.push_back(std::move(c));
    }
  }
  task.spread = get_double(obj, "spread", context, fallback.spread);
  task.train_size = get_int(obj, "train_size", context, fallback.train_size);
  task.eval_size = get_int(obj, "eval_size", context, fallback.eval_size);
  task.seed = get_u64(obj, "seed", context, fallback.seed);

  if (task.generator == TaskSpec::Generator::LabelPermuted) {
    task.base_task = get_string(obj, "base", context, fallback.base_task);
    if (task.base_task.empty()) {
      fail(join(context, "base"), "label_permuted tasks must name a base task");
    }
    if (obj.contains("permutation")) {
      const json& perm = obj["permutation"];
      if (perm.is_string() && perm.get<std::string>() == "cyclic") {
        task.permutation.clear();  // resolved once the base geometry is known
      } else if (perm.is_array()) {
        task.permutation.clear();
        for (const auto& v : perm) {
          if (!v.is_number_integer()) {
            fail(join(context, "permutation"), "expected integers or \"cyclic\"");
          }
          task.permutation.push_back(v.get<int>());
        }
      } else {
        fail(join(context, "permutation"), "expected integers or \"cyclic\"");
      }
    }
  } else if (obj.contains("base") || obj.contains("permutation")) {
    fail(join(context, "base"),
         "only label_permuted tasks take base/permutation");
  }
  return task;
}

TrainingParams parse_training(const json& obj, const TrainingParams& fallback) {
  check_keys(obj, "training",
             {"epochs", "recovery_epochs", "interference_epochs",
              "learning_rate", "batch_size"});
  TrainingParams p = fallback;
  p.epochs = get_int(obj, "epochs", "training", fallback.epochs);
  p.recovery_epochs =
      get_int(obj, "recovery_epochs", "training", fallback.recovery_epochs);
  p.interference_epochs = get_int(obj, "interference_epochs", "training",
                                  fallback.interference_epochs);
  p.learning_rate =
      get_double(obj, "learning_rate", "training", fallback.learning_rate);
  p.batch_size = get_int(obj, "batch_size", "training", fallback.batch_size);
  if (p.epochs < 0) fail("training.epochs", "must be >= 0");
  if (p.recovery_epochs < 0) fail("training.recovery_epochs", "must be >= 0");
  if (p.interference_epochs < 0) fail("training.interference_epochs", "must be >= 0");
  if (p.learning_rate <= 0.0) fail("training.learning_rate", "must be positive");
  if (p.batch_size < 1) fail("training.batch_size", "must be >= 1");
  return p;
}

DistillParams parse_distill(const json& obj, const DistillParams& fallback) {
  check_keys(obj, "distill", {"temperature", "mix", "offpolicy_mix"});
  DistillParams p = fallback;
  p.temperature = get_double(obj, "temperature", "distill", fallback.temperature);
  p.mix = get_double(obj, "mix", "distill", fallback.mix);
  p.offpolicy_mix =
      get_double(obj, "offpolicy_mix", "distill", fallback.offpolicy_mix);
  if (p.temperature <= 0.0) fail("distill.temperature", "must be positive");
  if (p.mix < 0.0 || p.mix > 1.0) fail("distill.mix", "must lie in [0, 1]");
  if (p.offpolicy_mix < 0.0 || p.offpolicy_mix > 1.0) {
    fail("distill.offpolicy_mix", "must lie in [0, 1]");
  }
  return p;
}

DegradationSpec parse_degradation(const json& obj, const DegradationSpec& fallback) {
  check_keys(obj, "degradation", {"kind", "bits", "fraction", "scope", "layers"});
  DegradationSpec spec = fallback;
  const std::string kind = get_string(
      obj, "kind", "degradation",
      fallback.kind == DegradationSpec::Kind::Quantize ? "quantize" : "prune");
  if (kind == "quantize") {
    spec.kind = DegradationSpec::Kind::Quantize;
  } else if (kind == "prune") {
    spec.kind = DegradationSpec::Kind::Prune;
  } else {
    fail("degradation.kind", "must be \"quantize\" or \"prune\"");
  }
  spec.bits = get_int(obj, "bits", "degradation", fallback.bits);
  spec.fraction = get_double(obj, "fraction", "degradation", fallback.fraction);
  if (spec.bits < 2 || spec.bits > 16) {
    fail("degradation.bits", "must lie in 2..16");
  }
  if (spec.fraction < 0.0 || spec.fraction >= 1.0) {
    fail("degradation.fraction", "must lie in [0, 1)");
  }
  const std::string scope =
      get_string(obj, "scope", "degradation",
                 fallback.scope == DegradationSpec::Scope::AllHiddenLayers
                     ? "all_hidden_layers"
                     : "layer_list");
  if (scope == "all_hidden_layers") {
    spec.scope = DegradationSpec::Scope::AllHiddenLayers;
  } else if (scope == "layer_list") {
    spec.scope = DegradationSpec::Scope::LayerList;
  } else {
    fail("degradation.scope", "must be \"all_hidden_layers\" or \"layer_list\"");
  }
  if (obj.contains("layers")) {
    if (!obj["layers"].is_array()) {
      fail("degradation.layers", "expected an array of integers");
    }
    spec.layers.clear();
    for (const auto& v : obj["layers"]) {
      if (!v.is_number_integer()) {
        fail("degradation.layers", "expected an array of integers");
      }
      spec.layers.push_back(v.get<int>());
    }
  }
  if (spec.scope == DegradationSpec::Scope::LayerList && spec.layers.empty()) {
    fail("degradation.layers", "layer_list scope needs at least one layer");
  }
  return spec;
}

TeacherParams parse_teacher(const json& obj, const TeacherParams& fallback) {
  check_keys(obj, "teacher",
             {"architecture", "task", "train_size", "epochs", "distill_pool",
              "seed_salt"});
  TeacherParams p = fallback;
  if (obj.contains("architecture")) {
    p.architecture = parse_architecture(obj["architecture"],
                                        "teacher.architecture", fallback.architecture);
  }
  p.task = get_string(obj, "task", "teacher", fallback.task);
  if (p.task != "task_a" && p.task != "task_b") {
    fail("teacher.task", "must be \"task_a\" or \"task_b\"");
  }
  p.train_size = get_int(obj, "train_size", "teacher", fallback.train_size);
  p.epochs = get_int(obj, "epochs", "teacher", fallback.epochs);
  p.distill_pool = get_int(obj, "distill_pool", "teacher", fallback.distill_pool);
  p.seed_salt = get_string(obj, "seed_salt", "teacher", fallback.seed_salt);
  if (p.train_size < 1) fail("teacher.train_size", "must be >= 1");
  if (p.epochs < 0) fail("teacher.epochs", "must be >= 0");
  if (p.distill_pool < 0) fail("teacher.distill_pool", "must be >= 0");
  return p;
}

// Four blob centers at (+/-off, +/-off) in the (axis, axis+1) plane of a
// dim-dimensional input, zero elsewhere.
std::vector<Eigen::VectorXd> corner_centers(double off, int dim, int axis) {
  std::vector<Eigen::VectorXd> centers;
  for (auto [sx, sy] : {std::pair{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(dim);
    c(axis) = sx * off;
    c(axis + 1) = sy * off;
    centers.push_back(std::move(c));
  }
  return centers;
}

void validate_config(const RunConfig& cfg) {
  if (cfg.seeds.empty()) fail("seeds", "need at least one seed");
  validate_task(cfg.task_a);
  if (cfg.task_b) validate_task(*cfg.task_b);

  const int input = cfg.architecture.input_dim();
  const int classes = cfg.architecture.class_count();
  if (cfg.task_a.input_dim() != input) {
    fail("tasks.task_a.centers", "dimensionality must match architecture input");
  }
  if (cfg.task_a.class_count() != classes) {
    fail("tasks.task_a.centers", "class count must match architecture output");
  }
  if (cfg.task_b) {
    if (cfg.task_b->input_dim() != input) {
      fail("tasks.task_b.centers", "dimensionality must match architecture input");
    }
    if (cfg.task_b->class_count() != classes) {
      fail("tasks.task_b.centers", "class count must match architecture output");
    }
  }
  if (cfg.scenario == Scenario::Forgetting && !cfg.task_b) {
    fail("tasks.task_b", "forgetting scenario needs two tasks");
  }
  if (cfg.scenario == Scenario::Compression && !cfg.degradation) {
    fail("degradation", "compression scenario needs a degradation spec");
  }
  if (cfg.degradation &&
      cfg.degradation->scope == DegradationSpec::Scope::LayerList) {
    for (int l : cfg.degradation->layers) {
      if (l < 0 || l >= cfg.architecture.hidden_layer_count()) {
        fail("degradation.layers", "layer index out of range");
      }
    }
  }
  if (cfg.scenario == Scenario::TwoStage) {
    if (!cfg.task_b) fail("tasks.task_b", "two_stage scenario needs two tasks");
    if (!cfg.teacher) fail("teacher", "two_stage scenario needs a teacher");
    if (cfg.teacher->architecture.input_dim() != input) {
      fail("teacher.architecture", "input dim must match the student");
    }
    if (cfg.teacher->architecture.class_count() != classes) {
      fail("teacher.architecture", "class count must match the student");
    }
  }
}

}  // namespace

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::Forgetting: return "forgetting";
    case Scenario::Compression: return "compression";
    case Scenario::TwoStage: return "two_stage";
  }
  return "?";
}

std::string to_string(TeacherRole r) {
  return r == TeacherRole::Base ? "base" : "expert";
}

RunConfig default_config(Scenario scenario) {
  RunConfig cfg;
  cfg.scenario = scenario;
  cfg.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  cfg.output_dir = "out";

  TaskSpec a;
  a.name = "task_a";
  a.generator = TaskSpec::Generator::GaussianBlobs;
  a.centers = corner_centers(2.0, 2, 0);
  a.spread = 0.6;
  a.train_size = 512;
  a.eval_size = 256;
  a.seed = 11;

  switch (scenario) {
    case Scenario::Forgetting: {
      cfg.architecture = {{2, 32, 32, 4}, Activation::Tanh};
      cfg.task_a = a;
      TaskSpec b;
      b.name = "task_b";
      b.generator = TaskSpec::Generator::LabelPermuted;
      b.base_task = "task_a";
      b.centers = a.centers;
      b.spread = a.spread;
      b.permutation = cyclic_permutation(4);
      b.train_size = 512;
      b.eval_size = 256;
      b.seed = 22;
      cfg.task_b = b;
      cfg.training = {40, 40, 0, 1e-3, 32};
      break;
    }
    case Scenario::Compression: {
      // a dense 16-class grid: decision boundaries everywhere, so weight
      // noise from quantization or pruning visibly costs accuracy
      cfg.architecture = {{2, 32, 32, 16}, Activation::Tanh};
      TaskSpec grid = a;
      grid.centers.clear();
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
          Eigen::VectorXd c(2);
          c << -3.0 + 2.0 * i, -3.0 + 2.0 * j;
          grid.centers.push_back(std::move(c));
        }
      }
      grid.spread = 0.45;
      grid.train_size = 1024;
      grid.eval_size = 512;
      cfg.task_a = grid;
      cfg.degradation = DegradationSpec{};  // quantize, 3 bits, all layers
      cfg.training = {40, 40, 0, 1e-3, 32};
      break;
    }
    case Scenario::TwoStage: {
      cfg.architecture = {{4, 24, 24, 4}, Activation::Tanh};
      // the two tasks live in disjoint coordinate planes of a shared input
      // space, so both are learnable at once yet still interfere; task B is
      // noisy and label-scarce, which is what the bootstrap teacher helps with
      TaskSpec a4 = a;
      a4.centers = corner_centers(2.0, 4, 0);
      a4.train_size = 256;
      cfg.task_a = a4;
      TaskSpec b;
      b.name = "task_b";
      b.generator = TaskSpec::Generator::GaussianBlobs;
      b.centers = corner_centers(2.0, 4, 2);
      b.spread = 1.2;
      b.train_size = 48;
      b.eval_size = 512;
      b.seed = 22;
      cfg.task_b = b;
      TeacherParams t;
      t.architecture = {{4, 64, 64, 4}, Activation::Tanh};
      t.train_size = 4096;
      t.distill_pool = 2048;
      cfg.teacher = t;
      cfg.training = {60, 7, 0, 1e-3, 32};
      cfg.distill.mix = 0.8;
      break;
    }
  }
  return cfg;
}

RunConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') ++line;
    }
    throw ParseError("config line " + std::to_string(line) + ": " + e.what());
  }
  if (!root.is_object()) {
    throw ParseError("config root must be a JSON object");
  }
  check_keys(root, "",
             {"scenario", "seeds", "output_dir", "architecture", "training",
              "distill", "teacher_role", "degradation", "tasks", "teacher"});

  if (!root.contains("scenario") || !root["scenario"].is_string()) {
    fail("scenario", "required, one of \"forgetting\", \"compression\", \"two_stage\"");
  }
  const std::string sc = root["scenario"].get<std::string>();
  Scenario scenario;
  if (sc == "forgetting") {
    scenario = Scenario::Forgetting;
  } else if (sc == "compression") {
    scenario = Scenario::Compression;
  } else if (sc == "two_stage") {
    scenario = Scenario::TwoStage;
  } else {
    fail("scenario", "unknown scenario \"" + sc + "\"");
  }

  RunConfig cfg = default_config(scenario);

  if (root.contains("seeds")) {
    if (!root["seeds"].is_array() || root["seeds"].empty()) {
      fail("seeds", "expected a non-empty array of integers");
    }
    cfg.seeds.clear();
    for (const auto& v : root["seeds"]) {
      if (!v.is_number_integer() && !v.is_number_unsigned()) {
        fail("seeds", "expected integers");
      }
      cfg.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  cfg.output_dir = get_string(root, "output_dir", "", cfg.output_dir);
  if (root.contains("architecture")) {
    cfg.architecture =
        parse_architecture(root["architecture"], "architecture", cfg.architecture);
  }
  if (root.contains("training")) {
    cfg.training = parse_training(root["training"], cfg.training);
  }
  if (root.contains("distill")) {
    cfg.distill = parse_distill(root["distill"], cfg.distill);
  }
  if (root.contains("teacher_role")) {
    if (scenario != Scenario::Forgetting) {
      fail("teacher_role", "only the forgetting scenario takes a teacher role");
    }
    const std::string role = get_string(root, "teacher_role", "", "base");
    if (role == "base") {
      cfg.teacher_role = TeacherRole::Base;
    } else if (role == "expert") {
      cfg.teacher_role = TeacherRole::Expert;
    } else {
      fail("teacher_role", "must be \"base\" or \"expert\"");
    }
  }
  if (root.contains("degradation")) {
    if (scenario != Scenario::Compression) {
      fail("degradation", "only the compression scenario takes a degradation spec");
    }
    cfg.degradation = parse_degradation(root["degradation"],
                                        cfg.degradation.value_or(DegradationSpec{}));
  }
  if (root.contains("teacher")) {
    if (scenario != Scenario::TwoStage) {
      fail("teacher", "only the two_stage scenario takes a bootstrap teacher");
    }
    cfg.teacher = parse_teacher(root["teacher"],
                                cfg.teacher.value_or(TeacherParams{}));
  }
  if (root.contains("tasks")) {
    const json& tasks = root["tasks"];
    if (!tasks.is_object()) fail("tasks", "expected an object");
    check_keys(tasks, "tasks", {"task_a", "task_b"});
    if (tasks.contains("task_a")) {
      cfg.task_a = parse_task(tasks["task_a"], "tasks.task_a", "task_a", cfg.task_a);
    }
    if (tasks.contains("task_b")) {
      TaskSpec fallback;
      if (cfg.task_b) {
        fallback = *cfg.task_b;
      } else {
        fallback = cfg.task_a;
        fallback.name = "task_b";
        fallback.seed = cfg.task_a.seed + 1;
      }
      cfg.task_b = parse_task(tasks["task_b"], "tasks.task_b", "task_b", fallback);
    }
  }

  // resolve label-permuted geometry from the (possibly overridden) base task
  auto resolve = [&](TaskSpec& t, const char* slot) {
    if (t.generator != TaskSpec::Generator::LabelPermuted) return;
    const TaskSpec* base = nullptr;
    if (t.base_task == "task_a") base = &cfg.task_a;
    if (t.base_task == "task_b" && cfg.task_b) base = &*cfg.task_b;
    if (base == nullptr || base == &t) {
      fail(std::string("tasks.") + slot + ".base",
           "must name a sibling task (\"task_a\" or \"task_b\")");
    }
    if (base->generator != TaskSpec::Generator::GaussianBlobs) {
      fail(std::string("tasks.") + slot + ".base",
           "base task must be a gaussian_blobs task");
    }
    t.centers = base->centers;
    t.spread = base->spread;
    if (t.permutation.empty()) {
      t.permutation = cyclic_permutation(base->class_count());
    }
  };
  resolve(cfg.task_a, "task_a");
  if (cfg.task_b) resolve(*cfg.task_b, "task_b");

  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) {
    throw IoError("cannot open config: " + path);
  }
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

namespace {

json task_to_json(const TaskSpec& t) {
  json j;
  j["name"] = t.name;
  j["train_size"] = t.train_size;
  j["eval_size"] = t.eval_size;
  j["seed"] = t.seed;
  if (t.generator == TaskSpec::Generator::GaussianBlobs) {
    j["type"] = "gaussian_blobs";
    json centers = json::array();
    for (const auto& c : t.centers) {
      json point = json::array();
      for (Eigen::Index i = 0; i < c.size(); ++i) point.push_back(c(i));
      centers.push_back(std::move(point));
    }
    j["centers"] = std::move(centers);
    j["spread"] = t.spread;
  } else {
    j["type"] = "label_permuted";
    j["base"] = t.base_task;
    j["permutation"] = t.permutation;
  }
  return j;
}

json architecture_to_json(const ArchitectureDescriptor& a) {
  json j;
  j["layer_sizes"] = a.layer_sizes;
  j["activation"] = a.activation == Activation::Tanh ? "tanh" : "relu";
  return j;
}

}  // namespace

std::string serialize_config(const RunConfig& cfg) {
  json j;
  j["scenario"] = to_string(cfg.scenario);
  j["seeds"] = cfg.seeds;
  j["output_dir"] = cfg.output_dir;
  j["architecture"] = architecture_to_json(cfg.architecture);
  j["training"] = {{"epochs", cfg.training.epochs},
                   {"recovery_epochs", cfg.training.recovery_epochs},
                   {"interference_epochs", cfg.training.interference_epochs},
                   {"learning_rate", cfg.training.learning_rate},
                   {"batch_size", cfg.training.batch_size}};
  j["distill"] = {{"temperature", cfg.distill.temperature},
                  {"mix", cfg.distill.mix},
                  {"offpolicy_mix", cfg.distill.offpolicy_mix}};
  if (cfg.scenario == Scenario::Forgetting) {
    j["teacher_role"] = to_string(cfg.teacher_role);
  }
  if (cfg.degradation) {
    const DegradationSpec& d = *cfg.degradation;
    j["degradation"] = {
        {"kind", d.kind == DegradationSpec::Kind::Quantize ? "quantize" : "prune"},
        {"bits", d.bits},
        {"fraction", d.fraction},
        {"scope", d.scope == DegradationSpec::Scope::AllHiddenLayers
                      ? "all_hidden_layers"
                      : "layer_list"},
        {"layers", d.layers}};
  }
  if (cfg.teacher) {
    j["teacher"] = {{"architecture", architecture_to_json(cfg.teacher->architecture)},
                    {"task", cfg.teacher->task},
                    {"train_size", cfg.teacher->train_size},
                    {"epochs", cfg.teacher->epochs},
                    {"distill_pool", cfg.teacher->distill_pool},
                    {"seed_salt", cfg.teacher->seed_salt}};
  }
  json tasks;
  tasks["task_a"] = task_to_json(cfg.task_a);
  if (cfg.task_b) tasks["task_b"] = task_to_json(*cfg.task_b);
  j["tasks"] = std::move(tasks);
  return j.dump(2) + "\n";
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream os(path);
  if (!os) {
    throw IoError("cannot open for writing: " + path);
  }
  os << serialize_config(cfg);
  if (!os) {
    throw IoError("write failed: " + path);
  }
}

}  // namespace mlab
