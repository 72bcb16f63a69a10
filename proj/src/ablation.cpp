#include "motionmix/ablation.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include <fmt/format.h>

#include "motionmix/checkpoint.hpp"
#include "motionmix/error.hpp"

namespace motionmix {

AblationAxis parse_ablation_axis(const std::string& s) {
  if (s == "pivot") return AblationAxis::Pivot;
  if (s == "ratio") return AblationAxis::Ratio;
  if (s == "range") return AblationAxis::Range;
  throw ConfigError("unknown ablation axis '" + s + "' (expected pivot, ratio, or range)");
}

std::string to_string(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::Pivot: return "pivot";
    case AblationAxis::Ratio: return "ratio";
    default: return "range";
  }
}

namespace {

int parse_int(const std::string& s) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ConfigError("grid point '" + s + "' is not an integer");
  return v;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ConfigError("grid point '" + s + "' is not a number");
  return v;
}

MetricSummary summarize(const std::vector<double>& xs) {
  MetricSummary m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.spread = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

struct SharedCorpus {
  Corpus corpus;
  ExtractorParams extractor;
  Eigen::MatrixXd real_features;
};

AblationRow run_point(const RunConfig& base, AblationAxis axis, const std::string& point,
                      const SharedCorpus& shared, const AblationOptions& options) {
  AblationRow row;
  row.point = point;
  row.seed = base.seed;
  try {
    const RunConfig cfg = apply_grid_point(base, axis, point);
    cfg.validate();
    row.run_config = to_json(cfg);
    const NoiseSchedule sched = cfg.make_schedule();
    const bool baseline = cfg.train.baseline == "naive";
    MixedDataset ds = prepare_motionmix(shared.corpus, cfg.prepare.noisy_ratio, cfg.corruption(),
                                        sched, cfg.split_seed(), {.erase_annotations = !baseline});
    const TrainResult trained = train(cfg.train_config(), ds, sched);

    std::vector<Condition> conds;
    std::vector<int> labels;
    for (int k = 0; k < cfg.data.num_classes; ++k) {
      for (int i = 0; i < cfg.sample.per_class; ++i) {
        conds.push_back(Condition::class_id(k));
        labels.push_back(k);
      }
    }
    std::vector<double> fid, acc, div, mm;
    for (int r = 0; r < cfg.eval.repeats; ++r) {
      SamplerConfig scfg = cfg.sampler_config();
      scfg.seed = derive_seed(cfg.sample_seed(), static_cast<std::uint64_t>(r));
      const auto generated = sample_many(trained.params, sched, conds, scfg, &ds.normalization);
      const MetricsReport rep =
          evaluate_generated(shared.extractor, shared.real_features, generated, labels,
                             derive_seed(cfg.eval_seed(), static_cast<std::uint64_t>(r)),
                             cfg.eval_settings());
      fid.push_back(rep.fid);
      acc.push_back(rep.accuracy);
      div.push_back(rep.diversity);
      mm.push_back(rep.multimodality);
    }
    row.fid = summarize(fid);
    row.accuracy = summarize(acc);
    row.diversity = summarize(div);
    row.multimodality = summarize(mm);
    row.ok = true;

    if (!options.out_dir.empty()) {
      const auto dir = options.out_dir / fmt::format("{}_{}", to_string(axis), point);
      std::filesystem::create_directories(dir);
      CheckpointMeta meta;
      meta.training_step = cfg.train.steps;
      meta.t_star = cfg.sampler_config().t_star;
      meta.schedule_steps = sched.steps();
      meta.beta_start = sched.beta_start();
      meta.beta_end = sched.beta_end();
      meta.provenance = {{"command", "ablate"},
                         {"run_config", row.run_config},
                         {"seed", cfg.seed},
                         {"normalization",
                          {{"mean", ds.normalization.mean}, {"stddev", ds.normalization.stddev}}}};
      save_checkpoint(dir / "final.mmck", trained.params, meta);
    }
  } catch (const Error& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

}  // namespace

RunConfig apply_grid_point(const RunConfig& base, AblationAxis axis, const std::string& point) {
  RunConfig cfg = base;
  switch (axis) {
    case AblationAxis::Pivot:
      cfg.train.t_star = parse_int(point);
      break;
    case AblationAxis::Ratio:
      cfg.prepare.noisy_ratio = parse_double(point);
      break;
    case AblationAxis::Range: {
      const auto colon = point.find(':');
      if (colon == std::string::npos) throw ConfigError("range grid point must look like T1:T2");
      cfg.prepare.t1 = parse_int(point.substr(0, colon));
      cfg.prepare.t2 = parse_int(point.substr(colon + 1));
      cfg.train.t_star = cfg.prepare.t2;
      break;
    }
  }
  return cfg;
}

AblationTable run_ablation(const RunConfig& base, AblationAxis axis,
                           const std::vector<std::string>& grid, const AblationOptions& options) {
  require(!grid.empty(), "ablation grid is empty");
  base.validate();

  SharedCorpus shared;
  shared.corpus = generate_synthetic_dataset(base.data.num_classes, base.data.per_class,
                                             base.data.frames, base.data.dim, base.data.seed);
  shared.extractor = train_feature_extractor(shared.corpus, base.extractor_seed(), base.extractor_config());
  std::vector<MotionSequence> real;
  real.reserve(shared.corpus.size());
  for (const auto& item : shared.corpus) real.push_back(item.motion);
  shared.real_features = extract_features(shared.extractor, real);

  AblationTable table;
  table.axis = axis;
  table.rows.resize(grid.size());
  const auto n = static_cast<int>(grid.size());
  if (options.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) table.rows[i] = run_point(base, axis, grid[i], shared, options);
  } else {
    for (int i = 0; i < n; ++i) {
      table.rows[i] = run_point(base, axis, grid[i], shared, options);
      if (!table.rows[i].ok) std::cerr << "ablation point " << grid[i] << " failed: " << table.rows[i].error << "\n";
    }
  }
  return table;
}

std::string ablation_csv(const AblationTable& table) {
  std::string out =
      "axis,point,ok,fid_mean,fid_spread,accuracy_mean,accuracy_spread,diversity_mean,"
      "diversity_spread,multimodality_mean,multimodality_spread,seed,error\n";
  for (const auto& r : table.rows) {
    std::string err = r.error;
    for (char& ch : err)
      if (ch == ',' || ch == '\n') ch = ';';
    out += fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n",
                       to_string(table.axis), r.point, r.ok ? 1 : 0, r.fid.mean, r.fid.spread,
                       r.accuracy.mean, r.accuracy.spread, r.diversity.mean, r.diversity.spread,
                       r.multimodality.mean, r.multimodality.spread, r.seed, err);
  }
  return out;
}

std::string ablation_text(const AblationTable& table) {
  auto pm = [](const MetricSummary& m) { return fmt::format("{:.3f} +/- {:.3f}", m.mean, m.spread); };
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : table.rows) {
    if (r.ok) {
      rows.push_back({r.point, pm(r.fid), pm(r.accuracy), pm(r.diversity), pm(r.multimodality)});
    } else {
      rows.push_back({r.point, "failed: " + r.error});
    }
  }
  return render_table({to_string(table.axis), "FID", "Accuracy", "Diversity", "MultiModality"}, rows);
}

}  // namespace motionmix
