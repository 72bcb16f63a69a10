#include "motionmix/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "motionmix/error.hpp"
#include "motionmix/rng.hpp"

namespace motionmix {

namespace {

enum SeedPurpose : std::uint64_t { kSplit = 1, kTrainSeed, kSample, kEval, kExtractorSeed };

template <typename T>
void read(const nlohmann::json& section, const char* key, T& field) {
  if (!section.contains(key)) return;
  try {
    field = section.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

void read_optional(const nlohmann::json& section, const char* key, std::optional<double>& field) {
  if (!section.contains(key)) return;
  if (section.at(key).is_null()) {
    field.reset();
    return;
  }
  double v = 0.0;
  read(section, key, v);
  field = v;
}

void check_keys(const nlohmann::json& section, const std::string& name,
                std::initializer_list<const char*> allowed) {
  if (!section.is_object()) throw ConfigError("config section '" + name + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : section.items()) {
    if (!ok.contains(key)) throw ConfigError("unknown config key '" + name + "." + key + "'");
  }
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

void RunConfig::validate() const {
  require(data.num_classes >= 2 && data.num_classes <= 16, "data.num_classes must lie in [2, 16]");
  require(data.per_class >= 1, "data.per_class must be positive");
  require(data.frames >= 8, "data.frames must be at least 8");
  require(data.dim >= 2, "data.dim must be at least 2");
  require(schedule.steps >= 2, "schedule.steps must be at least 2");
  require(schedule.beta_start.has_value() == schedule.beta_end.has_value(),
          "schedule.beta_start and schedule.beta_end must be set together");
  require(prepare.noisy_ratio > 0.0 && prepare.noisy_ratio <= 1.0,
          "prepare.noisy_ratio must lie in (0, 1]");
  corruption().validate(schedule.steps);
  require(train.t_star >= 0 && train.t_star <= schedule.steps, "train.t_star must lie in [0, T]");
  require(train.baseline == "none" || train.baseline == "naive",
          "train.baseline must be 'none' or 'naive'");
  require(sample.per_class >= 1, "sample.per_class must be positive");
  require(eval.repeats >= 1, "eval.repeats must be positive");
  train_config().validate(schedule.steps);
  sampler_config().validate(schedule.steps);
  DenoiserConfig{data.dim, data.frames, model.hidden_width, model.num_blocks, data.num_classes,
                 model.time_embed_dim, schedule.steps, model.param_kind}
      .validate();
}

NoiseSchedule RunConfig::make_schedule() const {
  if (schedule.beta_start) return NoiseSchedule::linear(schedule.steps, *schedule.beta_start, *schedule.beta_end);
  return NoiseSchedule::scaled_linear(schedule.steps);
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.t_star = train.t_star;
  t.steps = train.steps;
  t.batch_size = train.batch_size;
  t.adam = {train.learning_rate, train.beta1, train.beta2, train.epsilon};
  t.cfg_mask_prob = train.cfg_mask_prob;
  t.param_kind = model.param_kind;
  t.seed = train_seed();
  t.mode = train.baseline == "naive" ? TrainMode::NaiveBaseline : TrainMode::MotionMix;
  t.hidden_width = model.hidden_width;
  t.num_blocks = model.num_blocks;
  t.time_embed_dim = model.time_embed_dim;
  t.log_every = train.log_every;
  t.checkpoint_every = train.checkpoint_every;
  t.record_wall_time = train.record_wall_time;
  t.provenance = to_json(*this);
  return t;
}

SamplerConfig RunConfig::sampler_config() const {
  SamplerConfig s;
  // The naive baseline is an ordinary conditional model.
  s.t_star = train.baseline == "naive" ? 0 : train.t_star;
  s.guidance_w = sample.guidance;
  s.classifier_free = sample.classifier_free;
  s.param_kind = model.param_kind;
  s.seed = sample_seed();
  s.clamp = sample.clamp;
  return s;
}

ExtractorConfig RunConfig::extractor_config() const {
  ExtractorConfig e;
  e.hidden_width = eval.extractor_hidden;
  return e;
}

EvalSettings RunConfig::eval_settings() const { return {eval.diversity_pairs, eval.multimodality_pairs}; }

std::uint64_t RunConfig::split_seed() const { return derive_seed(seed, kSplit); }
std::uint64_t RunConfig::train_seed() const { return derive_seed(seed, kTrainSeed); }
std::uint64_t RunConfig::sample_seed() const { return derive_seed(seed, kSample); }
std::uint64_t RunConfig::eval_seed() const { return derive_seed(seed, kEval); }
// Tied to the corpus so every run over one corpus shares an evaluator.
std::uint64_t RunConfig::extractor_seed() const { return derive_seed(data.seed, kExtractorSeed); }

nlohmann::json to_json(const RunConfig& c) {
  return {
      {"data", {{"num_classes", c.data.num_classes},
                {"per_class", c.data.per_class},
                {"frames", c.data.frames},
                {"dim", c.data.dim},
                {"seed", c.data.seed}}},
      {"schedule", {{"steps", c.schedule.steps},
                    {"beta_start", optional_json(c.schedule.beta_start)},
                    {"beta_end", optional_json(c.schedule.beta_end)}}},
      {"prepare", {{"noisy_ratio", c.prepare.noisy_ratio}, {"t1", c.prepare.t1}, {"t2", c.prepare.t2}}},
      {"model", {{"hidden_width", c.model.hidden_width},
                 {"num_blocks", c.model.num_blocks},
                 {"time_embed_dim", c.model.time_embed_dim},
                 {"predict", to_string(c.model.param_kind)}}},
      {"train", {{"t_star", c.train.t_star},
                 {"steps", c.train.steps},
                 {"batch_size", c.train.batch_size},
                 {"learning_rate", c.train.learning_rate},
                 {"beta1", c.train.beta1},
                 {"beta2", c.train.beta2},
                 {"epsilon", c.train.epsilon},
                 {"cfg_mask_prob", c.train.cfg_mask_prob},
                 {"baseline", c.train.baseline},
                 {"log_every", c.train.log_every},
                 {"checkpoint_every", c.train.checkpoint_every},
                 {"record_wall_time", c.train.record_wall_time}}},
      {"sample", {{"guidance", c.sample.guidance},
                  {"classifier_free", c.sample.classifier_free},
                  {"clamp", optional_json(c.sample.clamp)},
                  {"per_class", c.sample.per_class}}},
      {"eval", {{"repeats", c.eval.repeats},
                {"diversity_pairs", c.eval.diversity_pairs},
                {"multimodality_pairs", c.eval.multimodality_pairs},
                {"extractor_hidden", c.eval.extractor_hidden}}},
      {"seed", c.seed},
  };
}

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig c) {
  check_keys(j, "<root>", {"data", "schedule", "prepare", "model", "train", "sample", "eval", "seed"});
  if (j.contains("data")) {
    const auto& s = j.at("data");
    check_keys(s, "data", {"num_classes", "per_class", "frames", "dim", "seed"});
    read(s, "num_classes", c.data.num_classes);
    read(s, "per_class", c.data.per_class);
    read(s, "frames", c.data.frames);
    read(s, "dim", c.data.dim);
    read(s, "seed", c.data.seed);
  }
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    check_keys(s, "schedule", {"steps", "beta_start", "beta_end"});
    read(s, "steps", c.schedule.steps);
    read_optional(s, "beta_start", c.schedule.beta_start);
    read_optional(s, "beta_end", c.schedule.beta_end);
  }
  if (j.contains("prepare")) {
    const auto& s = j.at("prepare");
    check_keys(s, "prepare", {"noisy_ratio", "t1", "t2"});
    read(s, "noisy_ratio", c.prepare.noisy_ratio);
    read(s, "t1", c.prepare.t1);
    read(s, "t2", c.prepare.t2);
  }
  if (j.contains("model")) {
    const auto& s = j.at("model");
    check_keys(s, "model", {"hidden_width", "num_blocks", "time_embed_dim", "predict"});
    read(s, "hidden_width", c.model.hidden_width);
    read(s, "num_blocks", c.model.num_blocks);
    read(s, "time_embed_dim", c.model.time_embed_dim);
    std::string kind = to_string(c.model.param_kind);
    read(s, "predict", kind);
    c.model.param_kind = parse_param_kind(kind);
  }
  if (j.contains("train")) {
    const auto& s = j.at("train");
    check_keys(s, "train", {"t_star", "steps", "batch_size", "learning_rate", "beta1", "beta2",
                            "epsilon", "cfg_mask_prob", "baseline", "log_every",
                            "checkpoint_every", "record_wall_time"});
    read(s, "t_star", c.train.t_star);
    read(s, "steps", c.train.steps);
    read(s, "batch_size", c.train.batch_size);
    read(s, "learning_rate", c.train.learning_rate);
    read(s, "beta1", c.train.beta1);
    read(s, "beta2", c.train.beta2);
    read(s, "epsilon", c.train.epsilon);
    read(s, "cfg_mask_prob", c.train.cfg_mask_prob);
    read(s, "baseline", c.train.baseline);
    read(s, "log_every", c.train.log_every);
    read(s, "checkpoint_every", c.train.checkpoint_every);
    read(s, "record_wall_time", c.train.record_wall_time);
  }
  if (j.contains("sample")) {
    const auto& s = j.at("sample");
    check_keys(s, "sample", {"guidance", "classifier_free", "clamp", "per_class"});
    read(s, "guidance", c.sample.guidance);
    read(s, "classifier_free", c.sample.classifier_free);
    read_optional(s, "clamp", c.sample.clamp);
    read(s, "per_class", c.sample.per_class);
  }
  if (j.contains("eval")) {
    const auto& s = j.at("eval");
    check_keys(s, "eval", {"repeats", "diversity_pairs", "multimodality_pairs", "extractor_hidden"});
    read(s, "repeats", c.eval.repeats);
    read(s, "diversity_pairs", c.eval.diversity_pairs);
    read(s, "multimodality_pairs", c.eval.multimodality_pairs);
    read(s, "extractor_hidden", c.eval.extractor_hidden);
  }
  read(j, "seed", c.seed);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config " + path.string() + " is not valid JSON");
  RunConfig base;
  base.seed = default_seed();
  return run_config_from_json(j, base);
}

std::uint64_t default_seed(std::uint64_t fallback) {
  const char* env = std::getenv("MOTIONMIX_SEED");
  if (!env || !*env) return fallback;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  return (end && *end == '\0') ? v : fallback;
}

}  // namespace motionmix
