#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "vstab/engine.hpp"
#include "vstab/error.hpp"
#include "vstab/percept.hpp"
#include "vstab/registration.hpp"

using namespace vstab;

namespace {

ReferenceSet refs_for(const SceneConfig& sc) {
    const EyeTrace still(0.001, std::vector<Vec2>(2, Vec2{}));
    return capture_references(render_retina(still, 0.0, sc), sc);
}

SpatialArray disk_canvas(const SceneConfig& sc, ElementPos c) {
    SpatialArray a(sc.width, sc.height);
    for (const Translation& t : disk_footprint(sc.stimulus_radius)) {
        const ElementPos p = c + t;
        if (a.contains(p.x, p.y)) a.set(p.x, p.y, 1.0);
    }
    return a;
}

PerceptTrace from_positions(const std::vector<Vec2>& pts) {
    PerceptTrace t;
    for (Vec2 p : pts) t.push(p, true);
    return t;
}

ConditionResult condition(double g, double world, double perceived) {
    ConditionResult c;
    c.gain = g;
    c.world_motion = world;
    c.retinal_motion = world;
    c.perceived_motion = perceived;
    c.steps = 100;
    c.mode_counts[0] = 100;
    return c;
}

}  // namespace

TEST(Tracker, StaticCanvas) {
    SceneConfig sc;
    const ReferenceSet refs = refs_for(sc);
    StimulusTracker tracker(refs);
    const auto [p, ok] = tracker.locate(disk_canvas(sc, {64, 64}));
    EXPECT_TRUE(ok);
    EXPECT_EQ(p, (Vec2{64.0, 64.0}));
}

TEST(Tracker, MovingDisk) {
    SceneConfig sc;
    const ReferenceSet refs = refs_for(sc);
    std::vector<SpatialArray> canvases;
    for (int i = 0; i < 20; ++i) canvases.push_back(disk_canvas(sc, {50 + i, 70 - i}));
    const PerceptTrace t = track_stimulus(canvases, refs);
    ASSERT_EQ(t.valid_count(), 20u);
    for (int i = 0; i < 20; ++i) EXPECT_EQ(t.positions[i], (Vec2{50.0 + i, 70.0 - i}));
    EXPECT_NEAR(motion_magnitude(t), 19.0 * std::sqrt(2.0), 1e-9);
}

TEST(Tracker, MissingStimulusInvalid) {
    SceneConfig sc;
    StimulusTracker tracker(refs_for(sc));
    EXPECT_FALSE(tracker.locate(SpatialArray(sc.width, sc.height)).second);
    EXPECT_FALSE(tracker.locate(SpatialArray::filled(sc.width, sc.height, 0.4)).second);
}

TEST(Tracker, BadOptions) {
    SceneConfig sc;
    EXPECT_THROW(StimulusTracker(refs_for(sc), {-1, 0.9}), InvalidArgument);
    EXPECT_THROW(StimulusTracker(refs_for(sc), {10, 0.0}), InvalidArgument);
}

TEST(Tracker, GainZeroEnginePercept) {
    SceneConfig sc;
    EngineConfig ec;
    ec.latency_steps = 0;
    ec.search_radius = 30;
    const EyeTrace tr = generate_drift(3, 0.3, kStrongFixation.diffusion, 1000.0);
    const FixationRun run = run_fixation(tr, sc, ec);
    const PerceptTrace p = track_stimulus(run.canvases, run.refs);
    ASSERT_EQ(p.valid_count(), p.size());
    for (const Vec2& q : p.positions) {
        EXPECT_LE(std::abs(q.x - 64.0), 0.5);
        EXPECT_LE(std::abs(q.y - 64.0), 0.5);
    }
}

TEST(Metrics, MotionMagnitude) {
    EXPECT_EQ(motion_magnitude(from_positions(std::vector<Vec2>(50, Vec2{3, 4}))), 0.0);
    std::vector<Vec2> ramp;
    for (int i = 0; i <= 100; ++i) ramp.push_back({0.5 * i, 0.0});
    EXPECT_NEAR(motion_magnitude(from_positions(ramp)), 50.0, 1e-12);
    EXPECT_THROW(motion_magnitude(from_positions({{1, 1}})), InvalidArgument);
    PerceptTrace gaps = from_positions(ramp);
    for (std::size_t i = 1; i < gaps.size(); ++i) gaps.valid[i] = i == 100;
    EXPECT_NEAR(motion_magnitude(gaps), 50.0, 1e-12);
}

TEST(Metrics, RmsDeviation) {
    EXPECT_EQ(rms_deviation(from_positions({{2, 2}, {2, 2}})), 0.0);
    EXPECT_NEAR(rms_deviation(from_positions({{0, 0}, {2, 0}})), 1.0, 1e-12);
    PerceptTrace none;
    none.push({0, 0}, false);
    EXPECT_THROW(rms_deviation(none), InvalidArgument);
}

TEST(Metrics, OverrideEqualsWorldPath) {
    SceneConfig sc;
    sc.gain_g = 2.5;
    const EyeTrace tr = ramp_trace({40.0, 0.0}, 0.3, 1000.0);
    const FixationRun run = run_fixation(tr, sc, EngineConfig{});
    const PerceptTrace p = track_stimulus(run.canvases, run.refs);
    const ConditionResult c = measure_condition(sc.gain_g, run, p, sc.pitch);
    EXPECT_EQ(run.decisions.back().mode, Mode::VeridicalOverride);
    EXPECT_NEAR(c.perceived_motion, c.world_motion, 1.0);
    ASSERT_TRUE(c.ratio_world());
    EXPECT_NEAR(*c.ratio_world(), 1.0, 0.05);
}

TEST(ClosedForm, CoherentWithoutLatencyIsStationary) {
    const EyeTrace tr = generate_drift(4, 0.5, kWeakerFixation.diffusion, 1000.0);
    for (double g : {-1.0, 0.0, 0.5, 2.0}) {
        const PerceptTrace p = closed_form_percept(tr, {g, Mode::CoherentStabilize, 0});
        for (const Vec2& q : p.positions) EXPECT_EQ(q, (Vec2{64.0, 64.0}));
    }
}

TEST(ClosedForm, IdentityUnitGainIsStationary) {
    const EyeTrace tr = generate_drift(5, 0.5, kWeakerFixation.diffusion, 1000.0);
    const PerceptTrace p = closed_form_percept(tr, {1.0, Mode::Identity, 0});
    EXPECT_EQ(motion_magnitude(p), 0.0);
}

TEST(ClosedForm, PerfectEfferentIsWorldPosition) {
    const EyeTrace tr = generate_drift(6, 0.2, kWeakerFixation.diffusion, 1000.0);
    ClosedFormInputs in{0.7, Mode::Efferent, 0};
    in.efferent = EfferentConfig{true, 0.0, 0.0};
    const PerceptTrace p = closed_form_percept(tr, in);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const Vec2 w = stimulus_world_pos(0.7, tr[i], {64, 64});
        EXPECT_NEAR(p.positions[i].x, w.x, 1e-9);
        EXPECT_NEAR(p.positions[i].y, w.y, 1e-9);
    }
}

TEST(ClosedForm, LatencyResidualOnRamp) {
    const EyeTrace tr = ramp_trace({30.0, 0.0}, 0.2, 1000.0);
    const PerceptTrace p = closed_form_percept(tr, {0.0, Mode::CoherentStabilize, 20});
    // Once past the latency: s0 + (g-1) v L dt.
    EXPECT_NEAR(p.positions.back().x, 64.0 - 30.0 * 0.02, 1e-9);
    EXPECT_NEAR(p.positions.back().y, 64.0, 1e-12);
}

TEST(ClosedForm, TimeRescalingInvariance) {
    // Halving the step rate and the latency step count leaves the percept unchanged.
    const EyeTrace fast = ramp_trace({25.0, -10.0}, 0.3, 1000.0);
    const EyeTrace slow = ramp_trace({25.0, -10.0}, 0.3, 500.0);
    const PerceptTrace a = closed_form_percept(fast, {-0.5, Mode::CoherentStabilize, 20});
    const PerceptTrace b = closed_form_percept(slow, {-0.5, Mode::CoherentStabilize, 10});
    for (std::size_t i = 0; i < b.size(); ++i) {
        EXPECT_NEAR(a.positions[2 * i].x, b.positions[i].x, 1e-9);
        EXPECT_NEAR(a.positions[2 * i].y, b.positions[i].y, 1e-9);
    }
}

TEST(ClosedForm, EngineMatchesRasterizedIdentity) {
    SceneConfig sc;
    sc.background_mode = BackgroundMode::Absent;
    sc.gain_g = 0.4;
    const EyeTrace tr = generate_drift(7, 0.4, kWeakerFixation.diffusion, 1000.0);
    const FixationRun run = run_fixation(tr, sc, EngineConfig{});
    const PerceptTrace engine = track_stimulus(run.canvases, run.refs);
    const PerceptTrace model = closed_form_percept_rasterized(tr, sc, Mode::Identity, 0);
    ASSERT_EQ(engine.size(), model.size());
    for (std::size_t i = 0; i < engine.size(); ++i) {
        ASSERT_TRUE(engine.valid[i]);
        EXPECT_EQ(engine.positions[i], model.positions[i]) << i;
    }
}

TEST(ClosedForm, EngineMatchesRasterizedOverride) {
    SceneConfig sc;
    sc.gain_g = 2.0;
    const EyeTrace tr = ramp_trace({0.0, 50.0}, 0.3, 1000.0);
    const FixationRun run = run_fixation(tr, sc, EngineConfig{});
    const PerceptTrace engine = track_stimulus(run.canvases, run.refs);
    const PerceptTrace model = closed_form_percept_rasterized(tr, sc, Mode::VeridicalOverride, 0);
    for (std::size_t i = 0; i < engine.size(); ++i)
        if (run.decisions[i].mode == Mode::VeridicalOverride) EXPECT_EQ(engine.positions[i], model.positions[i]) << i;
}

TEST(Condition, RatiosUndefinedWithoutMotion) {
    ConditionResult c = condition(0.0, 0.0, 0.0);
    EXPECT_FALSE(c.ratio_world());
    EXPECT_FALSE(c.ratio_retinal());
    c.world_motion = 4.0;
    c.retinal_motion = 2.0;
    c.perceived_motion = 1.0;
    EXPECT_DOUBLE_EQ(*c.ratio_world(), 0.25);
    EXPECT_DOUBLE_EQ(*c.ratio_retinal(), 0.5);
}

TEST(Sweep, StationaryPerceptHasZeroDiscontinuity) {
    std::vector<ConditionResult> rs;
    for (double g : {0.5, 0.8, 1.2, 1.5}) rs.push_back(condition(g, 10.0, 0.0));
    const SweepSummary s = sweep_summary(rs);
    ASSERT_TRUE(s.discontinuity);
    EXPECT_EQ(*s.discontinuity, 0.0);
    ASSERT_EQ(s.rows.size(), 4u);
    EXPECT_EQ(s.rows[0].mode_fractions[0], 1.0);
}

TEST(Sweep, DiscontinuityFromWindows) {
    std::vector<ConditionResult> rs{condition(0.5, 10, 0), condition(0.8, 10, 1), condition(0.9, 10, 3),
                                    condition(1.1, 10, 8), condition(1.2, 10, 10), condition(1.5, 10, 10)};
    const SweepSummary s = sweep_summary(rs, 0.25);
    // (0.8 + 1.0)/2 - (0.1 + 0.3)/2
    EXPECT_NEAR(*s.discontinuity, 0.7, 1e-12);
}

TEST(Sweep, RepeatsAveraged) {
    std::vector<ConditionResult> rs{condition(0.5, 10, 2), condition(0.5, 10, 4), condition(0.8, 10, 0),
                                    condition(1.2, 10, 0), condition(1.5, 10, 0)};
    const SweepSummary s = sweep_summary(rs);
    EXPECT_EQ(s.rows[0].repeats, 2u);
    EXPECT_DOUBLE_EQ(s.rows[0].perceived_motion, 3.0);
    EXPECT_NEAR(s.rows[0].perceived_motion_sd, std::sqrt(2.0), 1e-12);
}

TEST(Sweep, InsufficientCoverage) {
    std::vector<ConditionResult> rs{condition(0.5, 10, 0), condition(1.2, 10, 0), condition(1.5, 10, 0)};
    EXPECT_THROW(sweep_summary(rs), InvalidArgument);
    EXPECT_FALSE(summarize_sweep(rs).discontinuity);
    std::vector<ConditionResult> far{condition(0.1, 10, 0), condition(0.2, 10, 0), condition(1.5, 10, 0),
                                     condition(1.8, 10, 0)};
    EXPECT_THROW(sweep_summary(far), InvalidArgument);
}

TEST(Sweep, CsvFormat) {
    std::vector<ConditionResult> rs;
    for (double g : {0.5, 0.8, 1.2, 1.5}) rs.push_back(condition(g, 10.0, 5.0));
    std::stringstream ss;
    write_sweep_csv(sweep_summary(rs), ss);
    std::string line;
    std::getline(ss, line);
    EXPECT_EQ(line.rfind("gain,world_motion,retinal_motion,perceived_motion,ratio_world,ratio_retinal,"
              "frac_stabilize,frac_override,frac_identity,frac_efferent", 0),
              0u);
    int rows = 0;
    std::string last;
    while (std::getline(ss, line)) {
        ++rows;
        last = line;
    }
    EXPECT_EQ(rows, 5);
    EXPECT_EQ(last, "discontinuity,0");
}

TEST(Sweep, EngineAbsentBackgroundTracksRetina) {
    SceneConfig sc;
    sc.background_mode = BackgroundMode::Absent;
    std::vector<ConditionResult> rs;
    for (double g : {0.5, 0.8, 1.2, 1.5}) {
        sc.gain_g = g;
        const EyeTrace tr = generate_drift(11, 0.3, kWeakerFixation.diffusion, 1000.0);
        const FixationRun run = run_fixation(tr, sc, EngineConfig{});
        rs.push_back(measure_condition(g, run, track_stimulus(run.canvases, run.refs), sc.pitch));
    }
    const SweepSummary s = sweep_summary(rs);
    for (const GainSweepRow& r : s.rows) {
        ASSERT_TRUE(r.motion_ratio_retinal);
        EXPECT_NEAR(*r.motion_ratio_retinal, 1.0, 1e-9);
        EXPECT_EQ(r.mode_fractions[static_cast<int>(Mode::Identity)], 1.0);
    }
}
