#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "motionmix/ablation.hpp"
#include "motionmix/checkpoint.hpp"
#include "motionmix/config.hpp"
#include "motionmix/dataset.hpp"
#include "motionmix/error.hpp"
#include "motionmix/eval.hpp"
#include "motionmix/oracle.hpp"
#include "motionmix/rng.hpp"
#include "motionmix/sampling.hpp"
#include "motionmix/svg.hpp"
#include "motionmix/training.hpp"

namespace fs = std::filesystem;
using namespace motionmix;

namespace {

// Flags that mirror config keys. Unset flags leave the resolved config alone.
struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> t_star, t1, t2, repeats, train_steps, samples_per_class, diffusion_steps;
  std::optional<double> noisy_ratio, guidance, cfg_mask;
  std::optional<std::string> predict, baseline;
};

void add_config_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "JSON run config overlaid on the defaults");
  app->add_option("--seed", o.seed, "run seed (default: MOTIONMIX_SEED, then 0)");
  app->add_option("--t-star", o.t_star, "denoising pivot T*");
  app->add_option("--noisy-ratio", o.noisy_ratio, "fraction of samples that are noisy-annotated");
  app->add_option("--t1", o.t1, "lowest corruption step");
  app->add_option("--t2", o.t2, "highest corruption step");
  app->add_option("--guidance", o.guidance, "classifier-free guidance weight w");
  app->add_option("--predict", o.predict, "network target")->check(CLI::IsMember({"x0", "eps"}));
  app->add_option("--cfg-mask", o.cfg_mask, "condition dropout probability during training");
  app->add_option("--repeats", o.repeats, "evaluation repeats");
  app->add_option("--baseline", o.baseline, "'naive' trains on the corrupted corpus as if clean")
      ->check(CLI::IsMember({"none", "naive"}));
  app->add_option("--train-steps", o.train_steps, "optimizer steps");
  app->add_option("--samples-per-class", o.samples_per_class, "generated motions per class");
  app->add_option("--diffusion-steps", o.diffusion_steps, "diffusion length T");
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path.string() + " is not valid JSON");
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

// Every artifact header stores the producing config under "run_config".
std::optional<nlohmann::json> embedded_config(const nlohmann::json& provenance) {
  if (!provenance.is_object() || !provenance.contains("run_config")) return std::nullopt;
  return std::optional<nlohmann::json>(std::in_place, provenance.at("run_config"));
}

// Defaults (seed from MOTIONMIX_SEED), then the producing artifact's config,
// then --config, then individual flags.
RunConfig resolve(const Overrides& o, const std::optional<nlohmann::json>& from_artifact = {}) {
  RunConfig cfg;
  cfg.seed = default_seed();
  if (from_artifact) cfg = run_config_from_json(*from_artifact, cfg);
  if (!o.config_path.empty()) cfg = run_config_from_json(read_json_file(o.config_path), cfg);
  if (o.seed) cfg.seed = *o.seed;
  if (o.t_star) cfg.train.t_star = *o.t_star;
  if (o.noisy_ratio) cfg.prepare.noisy_ratio = *o.noisy_ratio;
  if (o.t1) cfg.prepare.t1 = *o.t1;
  if (o.t2) cfg.prepare.t2 = *o.t2;
  if (o.guidance) cfg.sample.guidance = *o.guidance;
  if (o.predict) cfg.model.param_kind = parse_param_kind(*o.predict);
  if (o.cfg_mask) cfg.train.cfg_mask_prob = *o.cfg_mask;
  if (o.repeats) cfg.eval.repeats = *o.repeats;
  if (o.baseline) cfg.train.baseline = *o.baseline;
  if (o.train_steps) cfg.train.steps = *o.train_steps;
  if (o.samples_per_class) cfg.sample.per_class = *o.samples_per_class;
  if (o.diffusion_steps) cfg.schedule.steps = *o.diffusion_steps;
  cfg.validate();
  return cfg;
}

nlohmann::json provenance(const std::string& command, const RunConfig& cfg) {
  return {{"command", command}, {"run_config", to_json(cfg)}, {"seed", cfg.seed}};
}

std::string csv_comment(const nlohmann::json& prov) { return "# provenance " + prov.dump() + "\n"; }

nlohmann::json normalization_json(const Normalization& n) {
  return {{"mean", n.mean}, {"stddev", n.stddev}};
}

Normalization normalization_from(const nlohmann::json& provenance) {
  if (!provenance.is_object() || !provenance.contains("normalization")) {
    throw IoError("checkpoint has no normalization statistics in its provenance");
  }
  Normalization n;
  try {
    n.mean = provenance.at("normalization").at("mean").get<std::vector<double>>();
    n.stddev = provenance.at("normalization").at("stddev").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed normalization in checkpoint: ") + e.what());
  }
  return n;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("'" + item + "' is not an integer");
    }
  }
  return out;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_svgs(const fs::path& dir, const Corpus& motions, const std::string& stem) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < motions.size(); ++i) {
    const std::string title = fmt::format("{} {} class {}", stem, i, motions[i].label);
    write_text(dir / fmt::format("{}_{:04d}_class{}.svg", stem, i, motions[i].label),
               trajectory_svg(motions[i].motion, 4, title));
  }
}

Corpus real_corpus_and_extractor(const fs::path& corpus_path, const RunConfig& cfg,
                                 ExtractorParams& extractor, Eigen::MatrixXd& real_features) {
  Corpus corpus = load_corpus(corpus_path);
  extractor = train_feature_extractor(corpus, cfg.extractor_seed(), cfg.extractor_config());
  std::vector<MotionSequence> real;
  real.reserve(corpus.size());
  for (const auto& item : corpus) real.push_back(item.motion);
  real_features = extract_features(extractor, real);
  return corpus;
}

// --- subcommands -----------------------------------------------------------

void cmd_gen_data(const Overrides& o, const fs::path& out) {
  const RunConfig cfg = resolve(o);
  const Corpus corpus = generate_synthetic_dataset(cfg.data.num_classes, cfg.data.per_class,
                                                   cfg.data.frames, cfg.data.dim, cfg.data.seed);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_corpus(corpus, out, provenance("gen-data", cfg));
  fmt::print("wrote {} motions ({} classes, {} frames, dim {}) to {}\n", corpus.size(),
             cfg.data.num_classes, cfg.data.frames, cfg.data.dim, out.string());
}

void cmd_prepare(const Overrides& o, const fs::path& corpus_path, const fs::path& out) {
  const nlohmann::json header = read_dataset_header(corpus_path);
  const RunConfig cfg = resolve(o, embedded_config(header.value("provenance", nlohmann::json())));
  const Corpus corpus = load_corpus(corpus_path);
  const NoiseSchedule sched = cfg.make_schedule();
  MixedDataset ds = prepare_motionmix(corpus, cfg.prepare.noisy_ratio, cfg.corruption(), sched,
                                      cfg.split_seed(),
                                      {.erase_annotations = cfg.train.baseline != "naive"});
  ds.provenance = provenance("prepare", cfg);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_dataset(ds, out);
  fmt::print("wrote {} examples ({} noisy, {} clean, corruption [{}, {}], T = {}) to {}\n",
             ds.examples.size(), ds.count(SourceTag::NoisyAnnotated),
             ds.count(SourceTag::CleanUnannotated), ds.spec.t1, ds.spec.t2, ds.steps, out.string());
}

void cmd_train(const Overrides& o, const fs::path& data_path, const fs::path& out_dir) {
  const MixedDataset ds = load_dataset(data_path);
  const RunConfig cfg = resolve(o, embedded_config(ds.provenance));
  if (cfg.prepare.t1 != ds.spec.t1 || cfg.prepare.t2 != ds.spec.t2 ||
      cfg.schedule.steps != ds.steps || cfg.prepare.noisy_ratio != ds.noisy_ratio) {
    throw ConfigError("corruption settings differ from the prepared dataset; re-run prepare");
  }
  if ((cfg.train.baseline == "naive") == ds.annotations_erased) {
    throw ConfigError(cfg.train.baseline == "naive"
                          ? "the naive baseline needs a dataset prepared with --baseline naive"
                          : "this dataset kept clean labels (naive baseline); train with --baseline naive");
  }
  const NoiseSchedule sched = cfg.make_schedule();
  TrainConfig tc = cfg.train_config();
  tc.checkpoint_dir = out_dir;
  tc.provenance = provenance("train", cfg);
  tc.provenance["normalization"] = normalization_json(ds.normalization);
  fs::create_directories(out_dir);

  TrainHooks hooks;
  hooks.on_log = [](const TrainLogRow& row) { fmt::print("step {:>6}  loss {:.6f}\n", row.step, row.loss); };
  const TrainResult result = train(tc, ds, sched, hooks);

  CheckpointMeta meta;
  meta.training_step = cfg.train.steps;
  meta.t_star = cfg.sampler_config().t_star;
  meta.schedule_steps = sched.steps();
  meta.beta_start = sched.beta_start();
  meta.beta_end = sched.beta_end();
  meta.provenance = tc.provenance;
  save_checkpoint(out_dir / "final.mmck", result.params, meta);
  write_train_log(out_dir / "train_log.csv", result.log);
  fmt::print("wrote {} and {}\n", (out_dir / "final.mmck").string(), (out_dir / "train_log.csv").string());
}

struct LoadedModel {
  Checkpoint ckpt;
  RunConfig cfg;
  Normalization norm;
  NoiseSchedule sched;
};

LoadedModel load_model(const Overrides& o, const fs::path& path) {
  Checkpoint ck = load_checkpoint(path);
  RunConfig cfg = resolve(o, embedded_config(ck.meta.provenance));
  if (cfg.model.param_kind != ck.params.config.param_kind) {
    throw ConfigError("--predict does not match the checkpoint's parameterization");
  }
  if (cfg.schedule.steps != ck.params.config.diffusion_steps) {
    throw ConfigError("diffusion length does not match the checkpoint");
  }
  Normalization norm = normalization_from(ck.meta.provenance);
  NoiseSchedule sched = cfg.make_schedule();
  return {std::move(ck), std::move(cfg), std::move(norm), std::move(sched)};
}

Corpus generate(const LoadedModel& m, std::uint64_t sampler_seed, std::vector<MotionSequence>* motions,
                std::vector<int>* labels) {
  std::vector<Condition> conds;
  std::vector<int> lab;
  for (int k = 0; k < m.ckpt.params.config.num_classes; ++k) {
    for (int i = 0; i < m.cfg.sample.per_class; ++i) {
      conds.push_back(Condition::class_id(k));
      lab.push_back(k);
    }
  }
  SamplerConfig scfg = m.cfg.sampler_config();
  scfg.seed = sampler_seed;
  std::vector<MotionSequence> gen = sample_many(m.ckpt.params, m.sched, conds, scfg, &m.norm);
  Corpus out;
  out.reserve(gen.size());
  for (std::size_t i = 0; i < gen.size(); ++i) out.push_back({gen[i], lab[i]});
  if (motions) *motions = std::move(gen);
  if (labels) *labels = std::move(lab);
  return out;
}

void cmd_sample(const Overrides& o, const fs::path& ckpt_path, const fs::path& out,
                const std::string& svg_dir) {
  const LoadedModel m = load_model(o, ckpt_path);
  const Corpus gen = generate(m, m.cfg.sample_seed(), nullptr, nullptr);
  nlohmann::json prov = provenance("sample", m.cfg);
  prov["checkpoint_step"] = m.ckpt.meta.training_step;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_corpus(gen, out, prov, "generated");
  if (!svg_dir.empty()) write_svgs(svg_dir, gen, "sample");
  fmt::print("wrote {} motions (T* = {}, w = {}) to {}\n", gen.size(), m.cfg.sampler_config().t_star,
             m.cfg.sample.guidance, out.string());
}

void cmd_edit(const Overrides& o, const fs::path& ckpt_path, const fs::path& ref_path, int index,
              std::optional<int> label, const std::string& mask_kind, double fraction,
              const std::string& channels, const fs::path& out, const std::string& svg_dir) {
  const LoadedModel m = load_model(o, ckpt_path);
  const Corpus refs = load_corpus(ref_path);
  if (index < 0 || index >= static_cast<int>(refs.size())) {
    throw ConfigError(fmt::format("--index {} is outside the reference file ({} motions)", index, refs.size()));
  }
  const LabeledMotion& ref = refs[index];
  const int frames = ref.motion.frames();
  const int dim = ref.motion.dim();
  EditMask mask;
  if (mask_kind == "inbetween") {
    mask = EditMask::in_between(frames, dim, fraction);
  } else if (mask_kind == "channels") {
    const std::vector<int> ch = parse_int_list(channels);
    mask = EditMask::channels(frames, dim, ch);
  } else if (mask_kind == "all") {
    mask = EditMask::all(frames, dim);
  } else {
    mask = EditMask::none(frames, dim);
  }
  const int k = label.value_or(ref.label);
  Rng rng = make_rng(m.cfg.sample_seed(), 0);
  const MotionSequence edited = edit_sample(m.ckpt.params, m.sched, ref.motion, mask,
                                            Condition::class_id(k), m.cfg.sampler_config(), rng, 0, &m.norm);
  const Corpus result{{edited, k}};
  nlohmann::json prov = provenance("edit", m.cfg);
  prov["edit"] = {{"index", index}, {"label", k}, {"mask", mask_kind}, {"fraction", fraction}, {"channels", channels}};
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_corpus(result, out, prov, "generated");
  if (!svg_dir.empty()) {
    write_svgs(svg_dir, {{ref.motion, ref.label}}, "reference");
    write_svgs(svg_dir, result, "edited");
  }
  fmt::print("wrote edited motion ({} mask) to {}\n", mask_kind, out.string());
}

struct Summary {
  double mean = 0.0, spread = 0.0;
};

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.spread = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

void cmd_eval(const Overrides& o, const fs::path& corpus_path, const std::string& ckpt_path,
              const std::string& generated_path, const fs::path& out) {
  if (ckpt_path.empty() == generated_path.empty()) {
    throw ConfigError("eval needs exactly one of --checkpoint or --generated");
  }
  std::vector<MetricsReport> reports;
  RunConfig cfg;
  ExtractorParams extractor;
  Eigen::MatrixXd real_features;
  if (!generated_path.empty()) {
    const nlohmann::json header = read_dataset_header(generated_path);
    cfg = resolve(o, embedded_config(header.value("provenance", nlohmann::json())));
    real_corpus_and_extractor(corpus_path, cfg, extractor, real_features);
    const Corpus gen = load_corpus(generated_path);
    std::vector<MotionSequence> motions;
    std::vector<int> labels;
    for (const auto& item : gen) {
      motions.push_back(item.motion);
      labels.push_back(item.label);
    }
    reports.push_back(evaluate_generated(extractor, real_features, motions, labels, cfg.eval_seed(),
                                         cfg.eval_settings()));
  } else {
    const LoadedModel m = load_model(o, ckpt_path);
    cfg = m.cfg;
    real_corpus_and_extractor(corpus_path, cfg, extractor, real_features);
    for (int r = 0; r < cfg.eval.repeats; ++r) {
      std::vector<MotionSequence> motions;
      std::vector<int> labels;
      generate(m, derive_seed(cfg.sample_seed(), static_cast<std::uint64_t>(r)), &motions, &labels);
      reports.push_back(evaluate_generated(extractor, real_features, motions, labels,
                                           derive_seed(cfg.eval_seed(), static_cast<std::uint64_t>(r)),
                                           cfg.eval_settings()));
    }
  }

  std::string csv = csv_comment(provenance("eval", cfg)) + "repeat," + metrics_csv_header() + "\n";
  std::vector<double> fid, acc, div, mm;
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < reports.size(); ++r) {
    const MetricsReport& rep = reports[r];
    csv += fmt::format("{},{}\n", r, to_csv_row(rep));
    fid.push_back(rep.fid);
    acc.push_back(rep.accuracy);
    div.push_back(rep.diversity);
    mm.push_back(rep.multimodality);
    rows.push_back({std::to_string(r), fmt::format("{:.4f}", rep.fid), fmt::format("{:.4f}", rep.accuracy),
                    fmt::format("{:.4f}", rep.diversity), fmt::format("{:.4f}", rep.multimodality)});
  }
  auto pm = [](const std::vector<double>& xs) {
    const Summary s = summarize(xs);
    return fmt::format("{:.4f} +/- {:.4f}", s.mean, s.spread);
  };
  rows.push_back({"mean", pm(fid), pm(acc), pm(div), pm(mm)});
  write_text(out, csv);
  fmt::print("{}", render_table({"repeat", "FID", "Accuracy", "Diversity", "MultiModality"}, rows));
  fmt::print("wrote {}\n", out.string());
}

void cmd_oracle_check(const Overrides& o, int chains, double sigma, const std::string& mu_text,
                      const fs::path& out) {
  const RunConfig cfg = resolve(o);
  GaussianWorld world;
  for (const auto& s : split_commas(mu_text)) {
    try {
      world.mu.push_back(std::stod(s));
    } catch (const std::exception&) {
      throw ConfigError("--mu entry '" + s + "' is not a number");
    }
  }
  world.sigma = sigma;
  world.validate();
  require(chains >= 2, "--chains must be at least 2");
  const NoiseSchedule sched = cfg.make_schedule();
  Rng rng = make_rng(cfg.seed, 0);
  const Eigen::MatrixXd x = oracle_sample(sched, world, chains, rng);

  std::string csv = csv_comment(provenance("oracle-check", cfg));
  csv += "coordinate,mu,mean,mean_error,sigma,std,std_ratio\n";
  std::vector<std::vector<std::string>> rows;
  for (int c = 0; c < world.dim(); ++c) {
    const double mean = x.col(c).mean();
    const double var = (x.col(c).array() - mean).square().sum() / static_cast<double>(chains - 1);
    const double sd = std::sqrt(var);
    csv += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", c, world.mu[c], mean,
                       mean - world.mu[c], sigma, sd, sd / sigma);
    rows.push_back({std::to_string(c), fmt::format("{:.4f}", world.mu[c]), fmt::format("{:.4f}", mean),
                    fmt::format("{:.4f}", sd), fmt::format("{:.4f}", sd / sigma)});
  }
  write_text(out, csv);
  fmt::print("T = {}, {} chains\n{}", sched.steps(), chains,
             render_table({"coord", "mu", "mean", "std", "std/sigma"}, rows));
  fmt::print("wrote {}\n", out.string());
}

void cmd_ablate(const Overrides& o, const std::string& axis_name, const std::string& grid_text,
                const fs::path& out_dir, bool parallel) {
  const RunConfig base = resolve(o);
  const AblationAxis axis = parse_ablation_axis(axis_name);
  const std::vector<std::string> grid = split_commas(grid_text);
  AblationOptions options;
  options.parallel = parallel;
  options.out_dir = out_dir;
  fs::create_directories(out_dir);
  const AblationTable table = run_ablation(base, axis, grid, options);
  write_text(out_dir / "ablation.csv", csv_comment(provenance("ablate", base)) + ablation_csv(table));
  const std::string text = ablation_text(table);
  write_text(out_dir / "ablation.txt", text);
  fmt::print("{}wrote {}\n", text, (out_dir / "ablation.csv").string());
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
  std::string text;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line.front() == '#') continue;
      auto cells = split_csv_line(line);
      if (header.empty()) {
        header = std::move(cells);
      } else {
        cells.resize(header.size());
        rows.push_back(std::move(cells));
      }
    }
    if (header.empty()) throw IoError(path + " has no CSV header");
    text += fs::path(path).filename().string() + "\n" + render_table(header, rows) + "\n";
  }
  if (!out.empty()) write_text(out, text);
  fmt::print("{}", text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"motionmix: weakly supervised motion diffusion toolkit"};
  app.require_subcommand(1);
  Overrides o;

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic labelled corpus");
  std::string gen_out = "corpus.mmds";
  gen->add_option("--out", gen_out, "output dataset file");
  add_config_flags(gen, o);

  auto* prep = app.add_subcommand("prepare", "split, corrupt, and erase labels");
  std::string prep_in, prep_out = "mixed.mmds";
  prep->add_option("--corpus", prep_in, "corpus from gen-data")->required();
  prep->add_option("--out", prep_out, "output dataset file");
  add_config_flags(prep, o);

  auto* tr = app.add_subcommand("train", "train the denoiser");
  std::string tr_data, tr_out = "run";
  tr->add_option("--data", tr_data, "dataset from prepare")->required();
  tr->add_option("--out-dir", tr_out, "checkpoint and log directory");
  add_config_flags(tr, o);

  auto* sm = app.add_subcommand("sample", "generate motions for every class");
  std::string sm_ckpt, sm_out = "samples.mmds", sm_svg;
  sm->add_option("--checkpoint", sm_ckpt, "trained checkpoint")->required();
  sm->add_option("--out", sm_out, "output file of generated motions");
  sm->add_option("--svg-dir", sm_svg, "also write one trajectory SVG per motion");
  add_config_flags(sm, o);

  auto* ed = app.add_subcommand("edit", "regenerate the unmasked part of a reference motion");
  std::string ed_ckpt, ed_ref, ed_out = "edited.mmds", ed_svg, ed_mask = "inbetween", ed_channels = "0";
  int ed_index = 0;
  double ed_fraction = 0.25;
  std::optional<int> ed_label;
  ed->add_option("--checkpoint", ed_ckpt, "trained checkpoint")->required();
  ed->add_option("--reference", ed_ref, "file holding the reference motion")->required();
  ed->add_option("--index", ed_index, "record index inside the reference file");
  ed->add_option("--class", ed_label, "condition (default: the reference label)");
  ed->add_option("--mask", ed_mask, "fixed region")->check(CLI::IsMember({"inbetween", "channels", "all", "none"}));
  ed->add_option("--fraction", ed_fraction, "held fraction at each end for inbetween");
  ed->add_option("--channels", ed_channels, "comma-separated channels held for --mask channels");
  ed->add_option("--out", ed_out, "output file");
  ed->add_option("--svg-dir", ed_svg, "also write reference and edited SVGs");
  add_config_flags(ed, o);

  auto* ev = app.add_subcommand("eval", "FID, accuracy, diversity, multimodality");
  std::string ev_corpus, ev_ckpt, ev_gen, ev_out = "metrics.csv";
  ev->add_option("--corpus", ev_corpus, "real corpus the extractor is trained on")->required();
  ev->add_option("--checkpoint", ev_ckpt, "sample --repeats times from this checkpoint");
  ev->add_option("--generated", ev_gen, "evaluate an existing sample file once");
  ev->add_option("--out", ev_out, "metrics CSV");
  add_config_flags(ev, o);

  auto* oc = app.add_subcommand("oracle-check", "sample with the closed-form Gaussian denoiser");
  int oc_chains = 20000;
  double oc_sigma = 0.5;
  std::string oc_mu = "1,-1", oc_out = "oracle.csv";
  oc->add_option("--chains", oc_chains, "number of reverse chains");
  oc->add_option("--mu", oc_mu, "comma-separated data mean");
  oc->add_option("--sigma", oc_sigma, "data standard deviation");
  oc->add_option("--out", oc_out, "CSV of per-coordinate moments");
  add_config_flags(oc, o);

  auto* ab = app.add_subcommand("ablate", "sweep one axis and tabulate metrics");
  std::string ab_axis = "pivot", ab_grid, ab_out = "ablation";
  bool ab_parallel = false;
  ab->add_option("--axis", ab_axis, "pivot, ratio, or range")->check(CLI::IsMember({"pivot", "ratio", "range"}));
  ab->add_option("--grid", ab_grid, "comma-separated points, e.g. 0,15,30,60 or 10:30,20:60")->required();
  ab->add_option("--out-dir", ab_out, "table and per-point checkpoints");
  ab->add_flag("--parallel", ab_parallel, "run grid points concurrently");
  add_config_flags(ab, o);

  auto* rp = app.add_subcommand("report", "render CSV outputs as text tables");
  std::vector<std::string> rp_in;
  std::string rp_out;
  rp->add_option("--in", rp_in, "CSV files")->required();
  rp->add_option("--out", rp_out, "text file (default: stdout only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) cmd_gen_data(o, gen_out);
    else if (*prep) cmd_prepare(o, prep_in, prep_out);
    else if (*tr) cmd_train(o, tr_data, tr_out);
    else if (*sm) cmd_sample(o, sm_ckpt, sm_out, sm_svg);
    else if (*ed) cmd_edit(o, ed_ckpt, ed_ref, ed_index, ed_label, ed_mask, ed_fraction, ed_channels, ed_out, ed_svg);
    else if (*ev) cmd_eval(o, ev_corpus, ev_ckpt, ev_gen, ev_out);
    else if (*oc) cmd_oracle_check(o, oc_chains, oc_sigma, oc_mu, oc_out);
    else if (*ab) cmd_ablate(o, ab_axis, ab_grid, ab_out, ab_parallel);
    else if (*rp) cmd_report(rp_in, rp_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
