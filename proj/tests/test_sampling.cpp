#include <cmath>
#include <vector>

#include "doctest.h"
#include "motionmix/error.hpp"
#include "motionmix/kernels.hpp"
#include "motionmix/sampling.hpp"
#include "motionmix/training.hpp"

using namespace motionmix;

namespace {

struct Fixture {
  NoiseSchedule sched = NoiseSchedule::scaled_linear(100);
  MixedDataset ds;
  DenoiserParams trained;
  DenoiserParams random_init;

  Fixture() {
    const auto corpus = generate_synthetic_dataset(4, 24, 8, 2, 1);
    ds = prepare_motionmix(corpus, 0.5, {10, 30}, sched, 1);
    TrainConfig cfg;
    cfg.steps = 300;
    cfg.batch_size = 32;
    cfg.hidden_width = 32;
    cfg.num_blocks = 1;
    cfg.time_embed_dim = 8;
    cfg.adam.learning_rate = 3e-3;
    cfg.seed = 2;
    trained = train(cfg, ds, sched).params;
    random_init = init_denoiser(trained.config, 77);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

SamplerConfig sampler(int t_star, std::uint64_t seed = 5) {
  SamplerConfig s;
  s.t_star = t_star;
  s.seed = seed;
  return s;
}

std::vector<std::pair<int, Condition>> record_trace(const DenoiserParams& p, const NoiseSchedule& sched,
                                                    Condition c, const SamplerConfig& scfg) {
  std::vector<std::pair<int, Condition>> trace;
  Rng rng = make_rng(scfg.seed);
  two_stage_sample(p, sched, c, scfg, rng, nullptr, [&](int t, Condition k) { trace.emplace_back(t, k); });
  return trace;
}

}  // namespace

TEST_CASE("cfg_combine identities") {
  const MotionSequence c(2, 2, {1.0, -2.0, 0.5, 3.25});
  const MotionSequence u(2, 2, {0.3, 4.0, -1.5, 0.0});
  CHECK(cfg_combine(c, u, 1.0) == c);
  CHECK(cfg_combine(c, u, 0.0) == u);
  for (double w : {-3.0, 0.5, 2.5, 7.0}) CHECK(cfg_combine(u, u, w) == u);
  const MotionSequence one(1, 1, {1.0}), zero(1, 1, {0.0});
  CHECK(cfg_combine(one, zero, 2.0)(0, 0) == 2.0);
  // Affine in w.
  const auto a = cfg_combine(c, u, 0.25), b = cfg_combine(c, u, 1.75), mid = cfg_combine(c, u, 1.0);
  for (std::size_t i = 0; i < c.size(); ++i)
    CHECK(0.5 * (a.values()[i] + b.values()[i]) == doctest::Approx(mid.values()[i]).epsilon(1e-14));
  CHECK_THROWS_AS(cfg_combine(c, MotionSequence(1, 4), 1.0), ConfigError);
}

TEST_CASE("condition trace switches at the pivot") {
  const auto& f = fixture();
  const Condition c = Condition::class_id(2);
  for (int t_star = 0; t_star <= 100; ++t_star) {
    CAPTURE(t_star);
    const auto trace = record_trace(f.random_init, f.sched, c, sampler(t_star));
    REQUIRE(trace.size() == 100);
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const int t = 100 - static_cast<int>(i);
      CHECK(trace[i].first == t);
      CHECK(trace[i].second == (t > t_star ? c : Condition::null()));
    }
  }
}

TEST_CASE("pivot zero is a plain guided conditional sampler") {
  const auto& f = fixture();
  const auto& p = f.trained;
  const Condition c = Condition::class_id(1);
  const auto scfg = sampler(0);
  Rng a = make_rng(scfg.seed);
  const auto out = two_stage_sample(p, f.sched, c, scfg, a);
  Rng b = make_rng(scfg.seed);
  const auto ref = reverse_chain(
      f.sched, p.config.frames, p.config.dim,
      [&](const MotionSequence& x, int t) {
        return cfg_combine(denoise_forward(p, x, t, c), denoise_forward(p, x, t, Condition::null()), scfg.guidance_w);
      },
      scfg.param_kind, scfg.clamp, b);
  CHECK(out == ref);
}

TEST_CASE("pivot at T equals the unconditional sampler") {
  const auto& f = fixture();
  for (double w : {0.0, 1.0, 2.5, -4.0}) {
    auto scfg = sampler(100);
    scfg.guidance_w = w;
    Rng a = make_rng(9);
    Rng b = make_rng(9);
    const auto conditional = two_stage_sample(f.trained, f.sched, Condition::class_id(3), scfg, a);
    const auto unconditional = two_stage_sample(f.trained, f.sched, Condition::null(), sampler(0), b);
    CHECK(conditional == unconditional);
  }
}

TEST_CASE("stage two ignores the guidance weight") {
  const auto& f = fixture();
  // Same stage 1 (w fixed), so any difference would come from stage 2.
  auto s1 = sampler(100);
  auto s2 = sampler(100);
  s1.guidance_w = 0.0;
  s2.guidance_w = 9.0;
  Rng a = make_rng(3), b = make_rng(3);
  CHECK(two_stage_sample(f.trained, f.sched, Condition::class_id(0), s1, a) ==
        two_stage_sample(f.trained, f.sched, Condition::class_id(0), s2, b));
}

TEST_CASE("sampling without CFG passes the condition alone") {
  const auto& f = fixture();
  const auto& p = f.trained;
  auto scfg = sampler(30);
  scfg.classifier_free = false;
  const Condition c = Condition::class_id(2);
  Rng a = make_rng(4), b = make_rng(4);
  const auto out = two_stage_sample(p, f.sched, c, scfg, a);
  const auto ref = reverse_chain(
      f.sched, p.config.frames, p.config.dim,
      [&](const MotionSequence& x, int t) { return denoise_forward(p, x, t, t > 30 ? c : Condition::null()); },
      scfg.param_kind, scfg.clamp, b);
  CHECK(out == ref);
}

TEST_CASE("sampling is deterministic and parallel equals serial") {
  const auto& f = fixture();
  std::vector<Condition> conds;
  for (int i = 0; i < 24; ++i) conds.push_back(i % 5 == 4 ? Condition::null() : Condition::class_id(i % 4));
  const auto par = sample_many(f.trained, f.sched, conds, sampler(30), &f.ds.normalization);
  const auto ser = sample_many_serial(f.trained, f.sched, conds, sampler(30), &f.ds.normalization);
  REQUIRE(par.size() == ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(par[i] == ser[i]);
    CHECK(par[i].all_finite());
    Rng rng = make_rng(5, i);
    CHECK(two_stage_sample(f.trained, f.sched, conds[i], sampler(30), rng, &f.ds.normalization) == par[i]);
  }
  CHECK_FALSE(par[0] == par[4]);
}

TEST_CASE("sampler argument errors") {
  const auto& f = fixture();
  Rng rng = make_rng(1);
  CHECK_THROWS_AS(two_stage_sample(f.trained, f.sched, Condition::class_id(0), sampler(101), rng), ConfigError);
  CHECK_THROWS_AS(two_stage_sample(f.trained, f.sched, Condition::class_id(0), sampler(-1), rng), ConfigError);
  CHECK_THROWS_AS(two_stage_sample(f.trained, f.sched, Condition::class_id(4), sampler(30), rng), ConfigError);
  auto eps = sampler(30);
  eps.param_kind = ParamKind::PredictEps;
  CHECK_THROWS_AS(two_stage_sample(f.trained, f.sched, Condition::class_id(0), eps, rng), ConfigError);
  CHECK_THROWS_AS(two_stage_sample(f.trained, NoiseSchedule::scaled_linear(50), Condition::class_id(0), sampler(30), rng),
                  ConfigError);
}

TEST_CASE("edit masks") {
  const auto m = EditMask::in_between(8, 2, 0.25);
  for (int fr = 0; fr < 8; ++fr)
    for (int d = 0; d < 2; ++d) CHECK(m.fixed[fr * 2 + d] == (fr < 2 || fr >= 6));
  CHECK_FALSE(EditMask::none(8, 2).any());
  CHECK(EditMask::all(8, 2).any());
  const int chans[] = {1};
  const auto ch = EditMask::channels(8, 2, chans);
  for (int fr = 0; fr < 8; ++fr) {
    CHECK_FALSE(ch.fixed[fr * 2]);
    CHECK(ch.fixed[fr * 2 + 1]);
  }
  const int bad[] = {2};
  CHECK_THROWS_AS(EditMask::channels(8, 2, bad), ConfigError);
  CHECK_THROWS_AS(EditMask::in_between(8, 2, 0.6), ConfigError);
}

TEST_CASE("editing with all, none, and in-between masks") {
  const auto& f = fixture();
  const auto& norm = f.ds.normalization;
  const auto reference = norm.invert(f.ds.examples.back().motion);
  const Condition c = Condition::class_id(1);
  for (const auto* params : {&f.trained, &f.random_init}) {
    Rng rng = make_rng(6);
    const auto all = edit_sample(*params, f.sched, reference, EditMask::all(8, 2), c, sampler(30), rng, 0, &norm);
    CHECK(all == reference);

    Rng a = make_rng(7), b = make_rng(7);
    const auto none = edit_sample(*params, f.sched, reference, EditMask::none(8, 2), c, sampler(30), a, 0, &norm);
    CHECK(none == two_stage_sample(*params, f.sched, c, sampler(30), b, &norm));

    const auto mask = EditMask::in_between(8, 2);
    Rng r = make_rng(8);
    const auto out = edit_sample(*params, f.sched, reference, mask, c, sampler(30), r, 0, &norm);
    CHECK(out.all_finite());
    bool interior_differs = false;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (mask.fixed[i]) CHECK(out.values()[i] == reference.values()[i]);
      else interior_differs |= out.values()[i] != reference.values()[i];
    }
    CHECK(interior_differs);
  }
}

TEST_CASE("edit argument errors") {
  const auto& f = fixture();
  Rng rng = make_rng(1);
  CHECK_THROWS_AS(edit_sample(f.trained, f.sched, MotionSequence(7, 2), EditMask::none(8, 2), Condition::null(),
                              sampler(30), rng),
                  ConfigError);
  CHECK_THROWS_AS(edit_sample(f.trained, f.sched, MotionSequence(8, 2), EditMask::none(7, 2), Condition::null(),
                              sampler(30), rng),
                  ConfigError);
}
