#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionmix/motion.hpp"
#include "motionmix/schedule.hpp"

namespace motionmix {

// Either a class id in [0, K-1] or the empty condition.
class Condition {
 public:
  constexpr Condition() = default;
  static constexpr Condition null() { return Condition(); }
  static Condition class_id(int k);

  bool is_null() const { return id_ < 0; }
  int id() const;  // throws on Null
  // Row of the embedding table: k for ClassId(k), K for Null.
  int table_row(int num_classes) const { return is_null() ? num_classes : id_; }
  // -1 for Null, matching the on-disk label encoding.
  int encoded() const { return id_; }
  static Condition decode(int label);

  bool operator==(const Condition&) const = default;

 private:
  explicit constexpr Condition(int id) : id_(id) {}
  int id_ = -1;
};

enum class SourceTag : int { NoisyAnnotated = 0, CleanUnannotated = 1 };

struct CorruptionSpec {
  int t1 = 10;
  int t2 = 30;
  void validate(int steps) const;
  bool operator==(const CorruptionSpec&) const = default;
};

struct LabeledMotion {
  MotionSequence motion;
  int label = 0;
};
using Corpus = std::vector<LabeledMotion>;

struct TrainingExample {
  MotionSequence motion;
  Condition condition;
  SourceTag source = SourceTag::CleanUnannotated;
  std::optional<int> corruption_step;

  bool operator==(const TrainingExample&) const = default;
};

// Per-channel z-score statistics, pooled over samples and frames.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Normalization fit(const Corpus& corpus);
  static Normalization identity(int dim);
  MotionSequence apply(const MotionSequence& m) const;
  MotionSequence invert(const MotionSequence& m) const;

  bool operator==(const Normalization&) const = default;
};

struct MixedDataset {
  std::vector<TrainingExample> examples;
  double noisy_ratio = 0.5;
  CorruptionSpec spec;
  Normalization normalization;
  int steps = 0;
  int num_classes = 0;
  int frames = 0;
  int dim = 0;
  // False only for the naive baseline, which keeps labels on clean examples.
  bool annotations_erased = true;
  nlohmann::json provenance = nlohmann::json::object();

  std::size_t count(SourceTag tag) const;
  // Checks the invariants of every example and the partition ratio.
  void validate() const;

  bool operator==(const MixedDataset&) const = default;
};

Corpus generate_synthetic_dataset(int num_classes, int per_class, int frames, int dim,
                                  std::uint64_t seed);

struct PrepareOptions {
  bool erase_annotations = true;
};

// Normalizes, shuffles, and splits the corpus: the first ceil(ratio * n)
// shuffled samples are forward-diffused at t' ~ U{T1..T2} and keep their
// label, the rest keep their motion and lose their label. Record i draws from
// stream i of `seed`.
MixedDataset prepare_motionmix(const Corpus& corpus, double noisy_ratio, const CorruptionSpec& spec,
                               const NoiseSchedule& sched, std::uint64_t seed,
                               const PrepareOptions& options = {});

void save_dataset(const MixedDataset& ds, const std::filesystem::path& path);
MixedDataset load_dataset(const std::filesystem::path& path);

// Raw corpora and generated motions share the container (kind "corpus" /
// "generated" in the header, every record tagged clean).
void save_corpus(const Corpus& corpus, const std::filesystem::path& path,
                 const nlohmann::json& provenance = nlohmann::json::object(),
                 const std::string& kind = "corpus");
Corpus load_corpus(const std::filesystem::path& path);

// Header of any dataset-container file, without reading its records.
nlohmann::json read_dataset_header(const std::filesystem::path& path);

}  // namespace motionmix
