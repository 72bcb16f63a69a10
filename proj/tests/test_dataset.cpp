#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <algorithm>
#include <iterator>
#include <string>
#include <set>
#include <vector>

#include "doctest.h"
#include "motionmix/dataset.hpp"
#include "motionmix/error.hpp"
#include "test_util.hpp"

using namespace motionmix;

namespace {

Corpus small_corpus(int classes = 6, int per_class = 20, std::uint64_t seed = 1) {
  return generate_synthetic_dataset(classes, per_class, 16, 4, seed);
}

std::vector<unsigned char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::uint32_t le_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

}  // namespace

TEST_CASE("generator counts and labels") {
  const auto c = generate_synthetic_dataset(2, 3, 8, 2, 0);
  REQUIRE(c.size() == 6);
  const std::vector<int> expected{0, 0, 0, 1, 1, 1};
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(c[i].label == expected[i]);
    CHECK(c[i].motion.frames() == 8);
    CHECK(c[i].motion.dim() == 2);
  }
}

TEST_CASE("generator is deterministic in the seed") {
  const auto a = small_corpus(6, 5, 42);
  const auto b = small_corpus(6, 5, 42);
  const auto c = small_corpus(6, 5, 43);
  REQUIRE(a.size() == b.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].motion == b[i].motion);
    any_diff |= !(a[i].motion == c[i].motion);
  }
  CHECK(any_diff);
}

TEST_CASE("generator velocity channels are differences of positions") {
  for (int dim : {4, 6}) {
    const auto corpus = generate_synthetic_dataset(8, 10, 24, dim, 9);
    for (const auto& item : corpus) {
      const auto& m = item.motion;
      CHECK(m.all_finite());
      for (int f = 0; f < m.frames(); ++f) {
        for (int d = 0; d < 2; ++d) {
          const double diff = f == 0 ? m(1, d) - m(0, d) : m(f, d) - m(f - 1, d);
          CHECK(std::abs(m(f, 2 + d) - diff) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("generator classes are distinguishable on average") {
  const auto corpus = generate_synthetic_dataset(6, 30, 32, 4, 3);
  // Class-mean trajectories should differ pairwise.
  std::vector<std::vector<double>> means(6, std::vector<double>(32 * 4, 0.0));
  for (const auto& item : corpus)
    for (std::size_t i = 0; i < item.motion.size(); ++i) means[item.label][i] += item.motion.values()[i] / 30.0;
  for (int a = 0; a < 6; ++a)
    for (int b = a + 1; b < 6; ++b) {
      double d = 0.0;
      for (std::size_t i = 0; i < means[a].size(); ++i) d += std::pow(means[a][i] - means[b][i], 2);
      CHECK(d > 1e-3);
    }
}

TEST_CASE("generator parameter errors") {
  CHECK_THROWS_AS(generate_synthetic_dataset(1, 3, 8, 2, 0), ConfigError);
  CHECK_THROWS_AS(generate_synthetic_dataset(17, 3, 8, 2, 0), ConfigError);
  CHECK_THROWS_AS(generate_synthetic_dataset(2, 3, 7, 2, 0), ConfigError);
  CHECK_THROWS_AS(generate_synthetic_dataset(2, 3, 8, 1, 0), ConfigError);
  CHECK_THROWS_AS(generate_synthetic_dataset(2, 0, 8, 2, 0), ConfigError);
}

TEST_CASE("normalized corpus has zero mean and unit std per channel") {
  const auto corpus = small_corpus();
  const auto norm = Normalization::fit(corpus);
  std::vector<double> sum(4, 0.0), sq(4, 0.0);
  std::size_t n = 0;
  for (const auto& item : corpus) {
    const auto z = norm.apply(item.motion);
    for (int f = 0; f < z.frames(); ++f)
      for (int d = 0; d < 4; ++d) {
        sum[d] += z(f, d);
        sq[d] += z(f, d) * z(f, d);
      }
    n += z.frames();
    const auto back = norm.invert(z);
    for (std::size_t i = 0; i < back.size(); ++i)
      CHECK(std::abs(back.values()[i] - item.motion.values()[i]) < 1e-12);
  }
  for (int d = 0; d < 4; ++d) {
    const double mean = sum[d] / n;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(sq[d] / n - mean * mean) - 1.0) < 1e-9);
  }
}

TEST_CASE("full noisy ratio leaves no null conditions") {
  const auto corpus = small_corpus();
  const auto sched = NoiseSchedule::scaled_linear(100);
  const auto ds = prepare_motionmix(corpus, 1.0, {10, 30}, sched, 5);
  CHECK(ds.count(SourceTag::NoisyAnnotated) == corpus.size());
  for (const auto& e : ds.examples) CHECK_FALSE(e.condition.is_null());
  ds.validate();
}

TEST_CASE("half split: counts, clean motions unchanged, partition exhaustive") {
  const auto corpus = generate_synthetic_dataset(5, 20, 16, 4, 8);
  REQUIRE(corpus.size() == 100);
  const auto sched = NoiseSchedule::scaled_linear(100);
  const auto ds = prepare_motionmix(corpus, 0.5, {10, 30}, sched, 77);
  ds.validate();
  CHECK(ds.count(SourceTag::NoisyAnnotated) == 50);
  CHECK(ds.count(SourceTag::CleanUnannotated) == 50);
  CHECK(ds.examples.size() == 100);

  std::vector<MotionSequence> normalized;
  for (const auto& item : corpus) normalized.push_back(ds.normalization.apply(item.motion));
  std::set<std::size_t> used;
  for (const auto& e : ds.examples) {
    if (e.source == SourceTag::NoisyAnnotated) {
      REQUIRE(e.corruption_step.has_value());
      CHECK(*e.corruption_step >= 10);
      CHECK(*e.corruption_step <= 30);
      CHECK_FALSE(e.condition.is_null());
      continue;
    }
    CHECK(e.condition.is_null());
    CHECK_FALSE(e.corruption_step.has_value());
    std::size_t match = normalized.size();
    for (std::size_t i = 0; i < normalized.size(); ++i)
      if (!used.count(i) && normalized[i] == e.motion) {
        match = i;
        break;
      }
    REQUIRE(match < normalized.size());
    used.insert(match);
  }
  CHECK(used.size() == 50);
}

TEST_CASE("noisy fraction is within one example of the ratio") {
  const auto corpus = generate_synthetic_dataset(3, 7, 8, 2, 2);
  const auto sched = NoiseSchedule::scaled_linear(50);
  for (double r : {0.05, 0.3, 0.5, 0.7, 0.99}) {
    const auto ds = prepare_motionmix(corpus, r, {5, 20}, sched, 1);
    const double frac = double(ds.count(SourceTag::NoisyAnnotated)) / ds.examples.size();
    CHECK(std::abs(frac - r) <= 1.0 / ds.examples.size());
  }
}

TEST_CASE("preparation is deterministic in the seed") {
  const auto corpus = small_corpus();
  const auto sched = NoiseSchedule::scaled_linear(100);
  const auto a = prepare_motionmix(corpus, 0.5, {10, 30}, sched, 11);
  const auto b = prepare_motionmix(corpus, 0.5, {10, 30}, sched, 11);
  const auto c = prepare_motionmix(corpus, 0.5, {10, 30}, sched, 12);
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("corruption mean-square difference matches the analytic expectation") {
  // Unique labels let each corrupted record be paired with its source.
  auto corpus = generate_synthetic_dataset(6, 500, 32, 4, 7);
  for (std::size_t i = 0; i < corpus.size(); ++i) corpus[i].label = static_cast<int>(i);
  const auto sched = NoiseSchedule::scaled_linear(100);
  const CorruptionSpec spec{10, 30};
  const auto ds = prepare_motionmix(corpus, 1.0, spec, sched, 3);
  REQUIRE(ds.examples.size() == 3000);

  double m2 = 0.0;
  std::size_t coords = 0;
  for (const auto& item : corpus) {
    const auto z = ds.normalization.apply(item.motion);
    for (double v : z.values()) m2 += v * v;
    coords += item.motion.size();
  }
  m2 /= coords;
  double analytic = 0.0;
  for (int t = spec.t1; t <= spec.t2; ++t) {
    const double ab = sched.alpha_bar(t);
    analytic += std::pow(1.0 - std::sqrt(ab), 2) * m2 + (1.0 - ab);
  }
  analytic /= spec.t2 - spec.t1 + 1;

  double emp = 0.0;
  std::size_t n = 0;
  for (const auto& e : ds.examples) {
    const auto src = ds.normalization.apply(corpus[e.condition.id()].motion);
    for (std::size_t i = 0; i < src.size(); ++i) emp += std::pow(e.motion.values()[i] - src.values()[i], 2);
    n += src.size();
  }
  emp /= n;
  CAPTURE(emp);
  CAPTURE(analytic);
  CHECK(std::abs(emp / analytic - 1.0) < 0.05);
}

TEST_CASE("preparation errors") {
  const auto corpus = small_corpus();
  const auto sched = NoiseSchedule::scaled_linear(100);
  CHECK_THROWS_AS(prepare_motionmix({}, 0.5, {10, 30}, sched, 1), ConfigError);
  CHECK_THROWS_AS(prepare_motionmix(corpus, 0.0, {10, 30}, sched, 1), ConfigError);
  CHECK_THROWS_AS(prepare_motionmix(corpus, 1.5, {10, 30}, sched, 1), ConfigError);
  CHECK_THROWS_AS(prepare_motionmix(corpus, 0.5, {30, 10}, sched, 1), ConfigError);
  CHECK_THROWS_AS(prepare_motionmix(corpus, 0.5, {10, 101}, sched, 1), ConfigError);
  CHECK_THROWS_AS(prepare_motionmix(corpus, 0.5, {0, 10}, sched, 1), ConfigError);
}

TEST_CASE("dataset save and load round trip") {
  testutil::TempDir dir;
  const auto sched = NoiseSchedule::scaled_linear(100);
  auto ds = prepare_motionmix(small_corpus(), 0.3, {10, 30}, sched, 4);
  ds.provenance = {{"seed", 4}, {"note", "round trip"}};
  save_dataset(ds, dir / "ds.mmds");
  CHECK(load_dataset(dir / "ds.mmds") == ds);

  auto baseline = prepare_motionmix(small_corpus(), 0.5, {10, 30}, sched, 4, {.erase_annotations = false});
  save_dataset(baseline, dir / "naive.mmds");
  const auto loaded = load_dataset(dir / "naive.mmds");
  CHECK(loaded == baseline);
  CHECK_FALSE(loaded.annotations_erased);
}

TEST_CASE("dataset file has one record per example") {
  testutil::TempDir dir;
  const auto sched = NoiseSchedule::scaled_linear(100);
  const auto corpus = generate_synthetic_dataset(3, 1, 8, 2, 5);
  const auto ds = prepare_motionmix(corpus, 0.5, {10, 30}, sched, 2);
  REQUIRE(ds.examples.size() == 3);
  save_dataset(ds, dir / "three.mmds");

  const auto bytes = slurp(dir / "three.mmds");
  REQUIRE(bytes.size() > 12);
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "MMIXDS01");
  std::size_t pos = 8;
  pos += 4 + le_u32(&bytes[pos]);
  std::vector<int> labels, sources, steps;
  std::vector<double> firsts;
  while (pos < bytes.size()) {
    const std::uint32_t len = le_u32(&bytes[pos]);
    pos += 4;
    REQUIRE(pos + len <= bytes.size());
    std::int32_t label, source, step;
    std::memcpy(&label, &bytes[pos], 4);
    std::memcpy(&source, &bytes[pos + 4], 4);
    std::memcpy(&step, &bytes[pos + 8], 4);
    CHECK(len == 12 + 8 * 8 * 2);
    double first;
    std::memcpy(&first, &bytes[pos + 12], 8);
    labels.push_back(label);
    sources.push_back(source);
    steps.push_back(step);
    firsts.push_back(first);
    pos += len;
  }
  REQUIRE(sources.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& e = ds.examples[i];
    CHECK(sources[i] == static_cast<int>(e.source));
    CHECK(steps[i] == e.corruption_step.value_or(-1));
    CHECK(labels[i] == e.condition.encoded());
    CHECK(firsts[i] == e.motion.values()[0]);
  }
}

TEST_CASE("dataset loading rejects corrupted files") {
  testutil::TempDir dir;
  const auto sched = NoiseSchedule::scaled_linear(100);
  const auto ds = prepare_motionmix(small_corpus(), 0.5, {10, 30}, sched, 4);
  save_dataset(ds, dir / "ds.mmds");
  auto bytes = slurp(dir / "ds.mmds");

  auto write = [&](const std::string& name, const std::vector<unsigned char>& b) {
    std::ofstream out(dir / name, std::ios::binary);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    return dir / name;
  };
  auto bad_magic = bytes;
  bad_magic[3] = 'Z';
  CHECK_THROWS_AS(load_dataset(write("magic.mmds", bad_magic)), IoError);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 5);
  CHECK_THROWS_AS(load_dataset(write("trunc.mmds", truncated)), IoError);

  auto bad_version = bytes;
  const std::string needle = "\"version\":1";
  auto it = std::search(bad_version.begin(), bad_version.end(), needle.begin(), needle.end());
  REQUIRE(it != bad_version.end());
  *(it + needle.size() - 1) = '7';
  CHECK_THROWS_AS(load_dataset(write("version.mmds", bad_version)), IoError);

  CHECK_THROWS_AS(load_dataset(dir / "missing.mmds"), IoError);
}

TEST_CASE("corpus save and load round trip") {
  testutil::TempDir dir;
  const auto corpus = small_corpus(3, 4);
  save_corpus(corpus, dir / "c.mmds", {{"k", 1}});
  const auto back = load_corpus(dir / "c.mmds");
  REQUIRE(back.size() == corpus.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].label == corpus[i].label);
    CHECK(back[i].motion == corpus[i].motion);
  }
  // A corpus file is not a prepared dataset.
  CHECK_THROWS_AS(load_dataset(dir / "c.mmds"), IoError);
}
