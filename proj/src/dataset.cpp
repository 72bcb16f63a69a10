#include "motionmix/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "motionmix/error.hpp"
#include "motionmix/motion_io.hpp"
#include "motionmix/rng.hpp"

namespace motionmix {

Condition Condition::class_id(int k) {
  require(k >= 0, "class id must be non-negative");
  return Condition(k);
}

int Condition::id() const {
  if (is_null()) throw ConfigError("null condition has no class id");
  return id_;
}

Condition Condition::decode(int label) {
  if (label == -1) return null();
  if (label < 0) throw IoError("invalid label " + std::to_string(label));
  return Condition(label);
}

void CorruptionSpec::validate(int steps) const {
  require(1 <= t1 && t1 <= t2 && t2 <= steps,
          "corruption range must satisfy 1 <= T1 <= T2 <= T (got [" + std::to_string(t1) + ", " +
              std::to_string(t2) + "], T=" + std::to_string(steps) + ")");
}

Normalization Normalization::fit(const Corpus& corpus) {
  require(!corpus.empty(), "cannot fit normalization on an empty corpus");
  const int dim = corpus.front().motion.dim();
  std::vector<double> sum(dim, 0.0);
  std::size_t count = 0;
  for (const auto& item : corpus) {
    require(item.motion.dim() == dim, "corpus motions differ in dimension");
    for (int f = 0; f < item.motion.frames(); ++f)
      for (int d = 0; d < dim; ++d) sum[d] += item.motion(f, d);
    count += item.motion.frames();
  }
  Normalization n;
  n.mean.resize(dim);
  n.stddev.resize(dim);
  for (int d = 0; d < dim; ++d) n.mean[d] = sum[d] / static_cast<double>(count);
  std::vector<double> sq(dim, 0.0);
  for (const auto& item : corpus)
    for (int f = 0; f < item.motion.frames(); ++f)
      for (int d = 0; d < dim; ++d) {
        const double c = item.motion(f, d) - n.mean[d];
        sq[d] += c * c;
      }
  for (int d = 0; d < dim; ++d) {
    n.stddev[d] = std::sqrt(sq[d] / static_cast<double>(count));
    require(n.stddev[d] > 0.0, "channel " + std::to_string(d) + " is constant over the corpus");
  }
  return n;
}

Normalization Normalization::identity(int dim) {
  return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

MotionSequence Normalization::apply(const MotionSequence& m) const {
  require(static_cast<std::size_t>(m.dim()) == mean.size(), "normalization dimension mismatch");
  MotionSequence out(m.frames(), m.dim());
  for (int f = 0; f < m.frames(); ++f)
    for (int d = 0; d < m.dim(); ++d) out(f, d) = (m(f, d) - mean[d]) / stddev[d];
  return out;
}

MotionSequence Normalization::invert(const MotionSequence& m) const {
  require(static_cast<std::size_t>(m.dim()) == mean.size(), "normalization dimension mismatch");
  MotionSequence out(m.frames(), m.dim());
  for (int f = 0; f < m.frames(); ++f)
    for (int d = 0; d < m.dim(); ++d) out(f, d) = m(f, d) * stddev[d] + mean[d];
  return out;
}

std::size_t MixedDataset::count(SourceTag tag) const {
  return static_cast<std::size_t>(std::count_if(
      examples.begin(), examples.end(), [tag](const auto& e) { return e.source == tag; }));
}

void MixedDataset::validate() const {
  require(!examples.empty(), "dataset has no examples");
  require(noisy_ratio > 0.0 && noisy_ratio <= 1.0, "noisy_ratio must lie in (0, 1]");
  spec.validate(steps);
  require(normalization.stddev.size() == static_cast<std::size_t>(dim) &&
              normalization.mean.size() == static_cast<std::size_t>(dim),
          "normalization size does not match dim");
  for (double s : normalization.stddev) require(s > 0.0, "normalization std must be positive");
  for (const auto& e : examples) {
    require(e.motion.frames() == frames && e.motion.dim() == dim, "example shape mismatch");
    require(e.motion.all_finite(), "example contains non-finite values");
    if (!e.condition.is_null()) require(e.condition.id() < num_classes, "label out of range");
    if (e.source == SourceTag::NoisyAnnotated) {
      require(e.corruption_step.has_value(), "noisy example without corruption step");
      require(*e.corruption_step >= spec.t1 && *e.corruption_step <= spec.t2,
              "corruption step outside [T1, T2]");
    } else {
      require(!e.corruption_step.has_value(), "clean example with corruption step");
      if (annotations_erased) require(e.condition.is_null(), "clean example keeps its label");
    }
  }
  const double n = static_cast<double>(examples.size());
  const double frac = static_cast<double>(count(SourceTag::NoisyAnnotated)) / n;
  require(std::abs(frac - noisy_ratio) <= 1.0 / n + 1e-12, "noisy fraction does not match ratio");
}

namespace {

double triangle(double z) {
  const double frac = z - std::floor(z);
  return 4.0 * std::abs(frac - 0.5) - 1.0;
}

// Planar position of family `k` at progress u in [0, ~1.2].
std::pair<double, double> trajectory_point(int k, double u, double amp, double phase) {
  constexpr double pi = std::numbers::pi;
  const int family = k % 6;
  const int band = k / 6;
  const double f = 1.0 + 0.5 * band;
  double x = 0.0, y = 0.0;
  switch (family) {
    case 0:  // line walk
      x = amp * (2.0 * u - 1.0);
      y = 0.3 * amp * std::sin(phase) * (2.0 * u - 1.0);
      break;
    case 1: {  // circle
      const double th = phase + 1.8 * pi * f * u;
      x = amp * std::cos(th);
      y = amp * std::sin(th);
      break;
    }
    case 2: {  // figure-eight
      const double th = phase + 2.0 * pi * f * u;
      x = amp * std::sin(th);
      y = 0.5 * amp * std::sin(2.0 * th);
      break;
    }
    case 3:  // zigzag
      x = amp * (2.0 * u - 1.0);
      y = 0.5 * amp * triangle(2.0 * f * u + phase / (2.0 * pi));
      break;
    case 4:  // sine
      x = amp * (2.0 * u - 1.0);
      y = 0.5 * amp * std::sin(3.0 * pi * f * u + phase);
      break;
    default: {  // spiral
      const double r = amp * (0.25 + 0.75 * u);
      const double th = phase + 3.0 * pi * f * u;
      x = r * std::cos(th);
      y = r * std::sin(th);
      break;
    }
  }
  if (band > 0 && family == 0) y += 0.15 * amp * std::sin(2.0 * pi * band * 2.0 * u + phase);
  return {x, y};
}

}  // namespace

Corpus generate_synthetic_dataset(int num_classes, int per_class, int frames, int dim,
                                  std::uint64_t seed) {
  require(num_classes >= 2 && num_classes <= 16, "num_classes must lie in [2, 16]");
  require(per_class >= 1, "per_class must be positive");
  require(frames >= 8, "frames must be at least 8");
  require(dim >= 2, "dim must be at least 2");
  constexpr double pi = std::numbers::pi;

  Corpus corpus;
  corpus.reserve(static_cast<std::size_t>(num_classes) * per_class);
  for (int k = 0; k < num_classes; ++k) {
    for (int j = 0; j < per_class; ++j) {
      const std::uint64_t index = static_cast<std::uint64_t>(k) * per_class + j;
      Rng rng = make_rng(seed, index);
      const double phase = 2.0 * pi * uniform01(rng);
      const double amp = 0.8 + 0.4 * uniform01(rng);
      const double speed = 0.8 + 0.4 * uniform01(rng);

      MotionSequence m(frames, dim);
      for (int f = 0; f < frames; ++f) {
        const double u = speed * static_cast<double>(f) / (frames - 1);
        const auto [x, y] = trajectory_point(k, u, amp, phase);
        m(f, 0) = x;
        m(f, 1) = y;
        for (int c = 4; c < dim; ++c) {
          const int p = c - 4;
          const double arg = 2.0 * pi * (p / 2 + 1) * u + phase;
          m(f, c) = p % 2 == 0 ? std::sin(arg) : std::cos(arg);
        }
      }
      // Velocity channels: backward differences, with frame 0 taking the
      // forward difference so the channel is never constant.
      for (int c = 2; c < std::min(dim, 4); ++c) {
        const int src = c - 2;
        for (int f = 1; f < frames; ++f) m(f, c) = m(f, src) - m(f - 1, src);
        m(0, c) = m(1, src) - m(0, src);
      }
      corpus.push_back({std::move(m), k});
    }
  }
  return corpus;
}

MixedDataset prepare_motionmix(const Corpus& corpus, double noisy_ratio, const CorruptionSpec& spec,
                               const NoiseSchedule& sched, std::uint64_t seed,
                               const PrepareOptions& options) {
  require(!corpus.empty(), "cannot prepare an empty corpus");
  require(noisy_ratio > 0.0 && noisy_ratio <= 1.0, "noisy_ratio must lie in (0, 1]");
  spec.validate(sched.steps());

  const int frames = corpus.front().motion.frames();
  const int dim = corpus.front().motion.dim();
  int max_label = 0;
  for (const auto& item : corpus) {
    require(item.motion.frames() == frames && item.motion.dim() == dim,
            "corpus motions differ in shape");
    require(item.label >= 0, "corpus labels must be non-negative");
    max_label = std::max(max_label, item.label);
  }

  MixedDataset ds;
  ds.noisy_ratio = noisy_ratio;
  ds.spec = spec;
  ds.normalization = Normalization::fit(corpus);
  ds.steps = sched.steps();
  ds.num_classes = max_label + 1;
  ds.frames = frames;
  ds.dim = dim;
  ds.annotations_erased = options.erase_annotations;

  const std::size_t n = corpus.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng = make_rng(seed, streams::kShuffle);
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  // The epsilon keeps ratios like 0.7 * 10 from rounding up past the product.
  const auto n_noisy = static_cast<std::size_t>(std::ceil(noisy_ratio * n - 1e-9));

  ds.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const LabeledMotion& src = corpus[order[i]];
    MotionSequence normalized = ds.normalization.apply(src.motion);
    TrainingExample ex;
    if (i < n_noisy) {
      Rng rng = make_rng(seed, i);
      const int t_prime = uniform_int(rng, spec.t1, spec.t2);
      MotionSequence eps(frames, dim);
      fill_standard_normal(rng, eps.values());
      ex.motion = forward_diffuse(normalized, t_prime, eps, sched);
      ex.condition = Condition::class_id(src.label);
      ex.source = SourceTag::NoisyAnnotated;
      ex.corruption_step = t_prime;
    } else {
      ex.motion = std::move(normalized);
      ex.condition = options.erase_annotations ? Condition::null() : Condition::class_id(src.label);
      ex.source = SourceTag::CleanUnannotated;
    }
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

namespace {

void put_motion_record(io::ByteWriter& w, int label, int source, int step, const MotionSequence& m) {
  io::ByteWriter rec;
  rec.put_i32(label);
  rec.put_i32(source);
  rec.put_i32(step);
  rec.put_f64s(m.values());
  w.put_record(rec);
}

struct RawRecord {
  int label;
  int source;
  int step;
  MotionSequence motion;
};

RawRecord get_motion_record(io::ByteReader& reader, int frames, int dim) {
  io::ByteReader rec = reader.get_record();
  RawRecord r{rec.get_i32(), rec.get_i32(), rec.get_i32(), MotionSequence(frames, dim)};
  rec.get_f64s(r.motion.values());
  if (!rec.at_end()) throw IoError("record has trailing bytes");
  return r;
}

template <typename T>
T header_field(const nlohmann::json& h, const char* key) {
  if (!h.contains(key)) throw IoError(std::string("header missing '") + key + "'");
  try {
    return h.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw IoError(std::string("header field '") + key + "' has the wrong type");
  }
}

}  // namespace

void save_dataset(const MixedDataset& ds, const std::filesystem::path& path) {
  nlohmann::json header = {
      {"version", io::kFormatVersion},
      {"kind", "mixed"},
      {"T", ds.steps},
      {"T1", ds.spec.t1},
      {"T2", ds.spec.t2},
      {"noisy_ratio", ds.noisy_ratio},
      {"num_classes", ds.num_classes},
      {"frames", ds.frames},
      {"dim", ds.dim},
      {"count", ds.examples.size()},
      {"annotations_erased", ds.annotations_erased},
      {"normalization", {{"mean", ds.normalization.mean}, {"std", ds.normalization.stddev}}},
      {"provenance", ds.provenance},
  };
  io::ByteWriter w = io::begin_container(io::kDatasetMagic, header);
  for (const auto& e : ds.examples) {
    put_motion_record(w, e.condition.encoded(), static_cast<int>(e.source),
                      e.corruption_step.value_or(-1), e.motion);
  }
  io::write_file(path, w.bytes());
}

MixedDataset load_dataset(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  io::ByteReader reader(bytes);
  const nlohmann::json h = io::open_container(reader, io::kDatasetMagic);
  if (h.value("kind", std::string()) != "mixed") throw IoError("not a prepared dataset file");

  MixedDataset ds;
  ds.steps = header_field<int>(h, "T");
  ds.spec = {header_field<int>(h, "T1"), header_field<int>(h, "T2")};
  ds.noisy_ratio = header_field<double>(h, "noisy_ratio");
  ds.num_classes = header_field<int>(h, "num_classes");
  ds.frames = header_field<int>(h, "frames");
  ds.dim = header_field<int>(h, "dim");
  ds.annotations_erased = header_field<bool>(h, "annotations_erased");
  const auto& norm = h.at("normalization");
  ds.normalization.mean = header_field<std::vector<double>>(norm, "mean");
  ds.normalization.stddev = header_field<std::vector<double>>(norm, "std");
  ds.provenance = h.value("provenance", nlohmann::json::object());
  const auto count = header_field<std::size_t>(h, "count");
  if (ds.frames < 1 || ds.dim < 1) throw IoError("invalid shape in header");

  ds.examples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RawRecord r = get_motion_record(reader, ds.frames, ds.dim);
    if (r.source != 0 && r.source != 1) throw IoError("invalid source tag");
    TrainingExample e;
    e.motion = std::move(r.motion);
    e.condition = Condition::decode(r.label);
    e.source = static_cast<SourceTag>(r.source);
    if (r.step >= 0) e.corruption_step = r.step;
    ds.examples.push_back(std::move(e));
  }
  if (!reader.at_end()) throw IoError("trailing data after last record");
  try {
    ds.validate();
  } catch (const ConfigError& err) {
    throw IoError(std::string("dataset file fails validation: ") + err.what());
  }
  return ds;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path,
                 const nlohmann::json& provenance, const std::string& kind) {
  require(!corpus.empty(), "cannot save an empty corpus");
  int max_label = 0;
  for (const auto& item : corpus) max_label = std::max(max_label, item.label);
  nlohmann::json header = {
      {"version", io::kFormatVersion},
      {"kind", kind},
      {"num_classes", max_label + 1},
      {"frames", corpus.front().motion.frames()},
      {"dim", corpus.front().motion.dim()},
      {"count", corpus.size()},
      {"provenance", provenance},
  };
  io::ByteWriter w = io::begin_container(io::kDatasetMagic, header);
  for (const auto& item : corpus) {
    require(item.motion.same_shape(corpus.front().motion), "corpus motions differ in shape");
    put_motion_record(w, item.label, static_cast<int>(SourceTag::CleanUnannotated), -1, item.motion);
  }
  io::write_file(path, w.bytes());
}

Corpus load_corpus(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  io::ByteReader reader(bytes);
  const nlohmann::json h = io::open_container(reader, io::kDatasetMagic);
  const int frames = header_field<int>(h, "frames");
  const int dim = header_field<int>(h, "dim");
  const auto count = header_field<std::size_t>(h, "count");
  if (frames < 1 || dim < 1) throw IoError("invalid shape in header");
  Corpus corpus;
  corpus.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RawRecord r = get_motion_record(reader, frames, dim);
    if (r.label < 0) throw IoError("corpus record without a label");
    corpus.push_back({std::move(r.motion), r.label});
  }
  if (!reader.at_end()) throw IoError("trailing data after last record");
  return corpus;
}

nlohmann::json read_dataset_header(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  io::ByteReader reader(bytes);
  return io::open_container(reader, io::kDatasetMagic);
}

}  // namespace motionmix
