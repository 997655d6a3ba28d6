#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "vstab/engine.hpp"
#include "vstab/error.hpp"
#include "vstab/percept.hpp"

using namespace vstab;

namespace {

PerceptTrace tracked(const FixationRun& run) { return track_stimulus(run.canvases, run.refs); }

std::size_t count_mode(const FixationRun& run, Mode m) {
    std::size_t n = 0;
    for (const auto& d : run.decisions) n += d.mode == m;
    return n;
}

}  // namespace

TEST(SelectMode, Examples) {
    EXPECT_EQ(select_mode({3, 0}, {1, 0}, 45.0), Mode::CoherentStabilize);
    EXPECT_EQ(select_mode({3, 0}, {-2, 0}, 45.0), Mode::VeridicalOverride);
    EXPECT_EQ(select_mode({3, 0}, {0, 0}, 45.0), Mode::CoherentStabilize);
    EXPECT_THROW(select_mode({0, 0}, {1, 0}, 45.0), InvalidArgument);
}

TEST(SelectMode, SectorBoundary) {
    EXPECT_EQ(select_mode({1, 0}, {1, 1}, 45.0), Mode::CoherentStabilize);
    EXPECT_EQ(select_mode({1, 0}, {1, 2}, 45.0), Mode::VeridicalOverride);
    EXPECT_EQ(select_mode({1, 0}, {0, 1}, 90.0), Mode::VeridicalOverride);  // dot must be positive
    EXPECT_EQ(select_mode({2, 0}, {2, 0}, 0.0), Mode::CoherentStabilize);
    EXPECT_EQ(select_mode({2, 0}, {5, 1}, 0.0), Mode::VeridicalOverride);
    // Custom rule hook.
    auto always = [](Translation, Translation, double) { return true; };
    EXPECT_EQ(select_mode({3, 0}, {-2, 0}, 45.0, always), Mode::CoherentStabilize);
}

TEST(EfferentEstimate, Quantization) {
    EXPECT_EQ(efferent_estimate({3.2, 0.0}, 0.0, 1.0, 1), (Vec2{3.0, 0.0}));
    EXPECT_EQ(efferent_estimate({3.2, -1.7}, 0.0, 0.0, 1), (Vec2{3.2, -1.7}));
    EXPECT_EQ(efferent_estimate({3.2, -1.7}, 0.0, 0.5, 1), (Vec2{3.0, -1.5}));
}

TEST(EfferentEstimate, DeterministicPerSeedAndStep) {
    EXPECT_EQ(efferent_estimate({1, 1}, 2.0, 0.0, 9, 4), efferent_estimate({1, 1}, 2.0, 0.0, 9, 4));
    EXPECT_NE(efferent_estimate({1, 1}, 2.0, 0.0, 9, 4), efferent_estimate({1, 1}, 2.0, 0.0, 9, 5));
}

TEST(EfferentEstimate, FoldedGaussianMeanError) {
    // Oracle: E|N(0, s)| = s sqrt(2/pi) per axis.
    const double sd = 2.0;
    double acc = 0.0;
    for (std::uint64_t k = 0; k < 1000; ++k) acc += std::abs(efferent_estimate({4.0, -1.0}, sd, 0.0, 77, k).x - 4.0);
    EXPECT_NEAR(acc / 1000.0, sd * std::sqrt(2.0 / M_PI), 0.1 * sd * std::sqrt(2.0 / M_PI));
}

TEST(EngineConfig, ValidationPaths) {
    EngineConfig c;
    c.latency_steps = -1;
    try {
        c.validate();
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.path(), "engine.latency_steps");
    }
    EngineConfig d;
    d.sector_half_angle = 120;
    EXPECT_THROW(d.validate(), ValidationError);
}

TEST(Engine, StillEyeKeepsOnsetCanvas) {
    const EyeTrace t(0.001, std::vector<Vec2>(60, Vec2{}));
    for (double g : {-1.0, 0.0, 2.0}) {
        SceneConfig sc;
        sc.gain_g = g;
        const FixationRun run = run_fixation(t, sc, EngineConfig{});
        const SpatialArray f0 = render_retina(t, 0.0, sc).array;
        for (std::size_t i = 0; i < run.decisions.size(); ++i) {
            EXPECT_EQ(run.decisions[i].m_p, (Translation{0, 0}));
            ASSERT_TRUE(run.decisions[i].m_s.has_value());
            EXPECT_EQ(*run.decisions[i].m_s, (Translation{0, 0}));
            ASSERT_EQ(run.canvases[i], f0);
        }
    }
}

TEST(Engine, ZeroGainNoLatencyIsPixelPerfect) {
    const EyeTrace t = generate_drift(31, 1.0, kWeakerFixation.diffusion, 1000.0);
    SceneConfig sc;
    EngineConfig ec;
    ec.latency_steps = 0;
    ec.search_radius = 30;
    const FixationRun run = run_fixation(t, sc, ec);
    const SpatialArray f0 = render_retina(t, 0.0, sc).array;
    for (std::size_t i = 0; i < run.canvases.size(); ++i) {
        ASSERT_EQ(run.canvases[i], f0) << "step " << i;
        EXPECT_TRUE(run.decisions[i].single_mapping());
    }
}

TEST(Engine, PrimaryMappingIsEyeOffset) {
    const EyeTrace t = generate_drift(32, 0.5, kWeakerFixation.diffusion, 1000.0);
    SceneConfig sc;
    sc.gain_g = 0.5;
    const FixationRun run = run_fixation(t, sc, EngineConfig{}, false);
    for (std::size_t i = 0; i < run.decisions.size(); ++i) ASSERT_EQ(run.decisions[i].m_p, run.samples[i].eye_offset);
}

TEST(Engine, GainTwoRampPerceivedAsWorldMotion) {
    const EyeTrace t = ramp_trace({60.0, 0.0}, 0.25, 1000.0);
    SceneConfig sc;
    sc.gain_g = 2.0;
    const FixationRun run = run_fixation(t, sc, EngineConfig{});
    const PerceptTrace p = tracked(run);
    for (std::size_t i = 20; i < t.size(); ++i) {
        ASSERT_TRUE(p.valid[i]);
        const Vec2 expect = stimulus_world_pos(2.0, t[i], sc.stimulus_center_s0);
        // One element of rounding plus the display hold (g * 60'/s * 1/60 s).
        EXPECT_NEAR(p.positions[i].x, expect.x, 1.0 + 2.0) << i;
        EXPECT_NEAR(p.positions[i].y, expect.y, 1.0) << i;
        // The world stimulus element drawn this step is where the percept sits.
        EXPECT_NEAR(p.positions[i].x, run.samples[i].stimulus_world_element.x, 1e-9) << i;
    }
}

TEST(Engine, FigureNineModeSequences) {
    const EyeTrace t = generate_drift(33, 1.0, kWeakerFixation.diffusion, 1000.0);
    auto run_g = [&](double g) {
        SceneConfig sc;
        sc.gain_g = g;
        return run_fixation(t, sc, EngineConfig{}, false);
    };
    const FixationRun g0 = run_g(0.0);
    for (const auto& d : g0.decisions) EXPECT_TRUE(d.single_mapping());
    const FixationRun gm1 = run_g(-1.0);
    EXPECT_GT(count_mode(gm1, Mode::CoherentStabilize), gm1.decisions.size() / 2);
    const FixationRun g2 = run_g(2.0);
    EXPECT_GT(count_mode(g2, Mode::VeridicalOverride), g2.decisions.size() / 2);
}

TEST(Engine, AbsentBackgroundIsIdentity) {
    const EyeTrace t = generate_drift(34, 0.5, kWeakerFixation.diffusion, 1000.0);
    SceneConfig sc;
    sc.background_mode = BackgroundMode::Absent;
    sc.gain_g = 0.5;
    const FixationRun run = run_fixation(t, sc, EngineConfig{});
    EXPECT_EQ(count_mode(run, Mode::Identity), run.decisions.size());
    // The canvas shows the rasterized retinal stimulus, display hold included.
    const PerceptTrace p = tracked(run);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const ElementPos r = run.samples[i].stimulus_retinal_element;
        EXPECT_EQ(p.positions[i], (Vec2{static_cast<double>(r.x), static_cast<double>(r.y)})) << i;
    }
}

TEST(Engine, AbsentBackgroundWithEfferent) {
    const EyeTrace t = generate_drift(35, 0.3, kWeakerFixation.diffusion, 1000.0);
    SceneConfig sc;
    sc.background_mode = BackgroundMode::Absent;
    sc.gain_g = 1.0;
    EngineConfig ec;
    ec.efferent.enabled = true;
    ec.efferent.noise_sd = 0.0;
    const FixationRun run = run_fixation(t, sc, ec);
    for (std::size_t i = 0; i < t.size(); ++i) {
        ASSERT_EQ(run.decisions[i].mode, Mode::Efferent);
        const Vec2 e = efferent_estimate(t[i], 0.0, 1.0, ec.seed, i);
        EXPECT_EQ(run.decisions[i].m_p, (Translation{static_cast<int>(e.x), static_cast<int>(e.y)}));
    }
    // Perfect efferent: the percept follows world motion.
    const PerceptTrace p = tracked(run);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(p.positions[i].x, 64.0 + t[i].x, 2.0);
}

TEST(Engine, AnnulusFallsBackToIdentity) {
    const EyeTrace t = generate_drift(36, 0.5, kStrongFixation.diffusion, 1000.0);
    SceneConfig sc;
    sc.background_mode = BackgroundMode::Annulus;
    sc.gain_g = 0.5;
    const FixationRun run = run_fixation(t, sc, EngineConfig{}, false);
    EXPECT_GE(count_mode(run, Mode::Identity), run.decisions.size() * 9 / 10);
}

TEST(Engine, ModeSplitsAcrossUnitGainOnAxisRamp) {
    // Monotone drift along one axis: stabilize below unit gain (with the display hold), and
    // override whenever the stimulus slip is resolvable above it (hold disabled, since a held
    // sample lags the eye and can reverse a slip smaller than the lag).
    const EyeTrace t = ramp_trace({20.0, 0.0}, 0.5, 1000.0);
    for (double g : {-2.0, -1.0, 0.0, 0.5, 0.9}) {
        SceneConfig sc;
        sc.gain_g = g;
        const FixationRun run = run_fixation(t, sc, EngineConfig{}, false);
        for (const auto& d : run.decisions) ASSERT_EQ(d.mode, Mode::CoherentStabilize) << g;
    }
    for (double g : {1.1, 1.5, 2.0}) {
        SceneConfig sc;
        sc.gain_g = g;
        sc.display_rate = 1000.0;
        const FixationRun run = run_fixation(t, sc, EngineConfig{}, false);
        std::size_t override = 0;
        for (const auto& d : run.decisions) {
            override += d.mode == Mode::VeridicalOverride;
            // Any coherent step had no resolvable slip or a shared mapping.
            if (d.mode == Mode::CoherentStabilize && !d.m_p.is_zero()) ASSERT_TRUE(d.m_s->is_zero() || *d.m_s == d.m_p) << g;
        }
        EXPECT_GT(override, 0u) << g;
        if (g >= 1.5) EXPECT_GT(override, run.decisions.size() / 2) << g;
    }
}

TEST(Engine, LatencyResidualOnRamp) {
    const EyeTrace t = ramp_trace({60.0, 0.0}, 0.3, 1000.0);  // stays inside the radius-20 search
    const int L = 50;  // e(t) - e(t - L dt) = 3 arcmin
    std::vector<double> rms;
    for (double g : {0.5, -1.0, -2.0}) {
        SceneConfig sc;
        sc.gain_g = g;
        EngineConfig ec;
        ec.latency_steps = L;
        const FixationRun run = run_fixation(t, sc, ec);
        const PerceptTrace p = tracked(run);
        double acc = 0.0;
        std::size_t n = 0;
        for (std::size_t i = L + 20; i < t.size(); ++i) {
            ASSERT_EQ(run.decisions[i].mode, Mode::CoherentStabilize);
            const double expect = 64.0 + (g - 1.0) * (t[i].x - t[i - L].x);
            // One element of rounding plus the display hold on each end of the window.
            EXPECT_NEAR(p.positions[i].x, expect, 1.0 + 2.0 * std::abs(g) * 1.0) << g << " " << i;
            acc += (p.positions[i].x - 64.0) * (p.positions[i].x - 64.0);
            ++n;
        }
        rms.push_back(std::sqrt(acc / n));
    }
    for (std::size_t k = 1; k < rms.size(); ++k) EXPECT_GE(rms[k], rms[k - 1]);

    // At g=0 both mappings coincide, so the single undelayed mapping leaves no residual.
    SceneConfig sc;
    EngineConfig ec;
    ec.latency_steps = L;
    const FixationRun run = run_fixation(t, sc, ec);
    for (const Vec2& q : tracked(run).positions) EXPECT_EQ(q, (Vec2{64.0, 64.0}));
}

TEST(Engine, OverrideAndIdentityPerceptGeometry) {
    const EyeTrace t = generate_drift(37, 1.0, kWeakerFixation.diffusion, 1000.0);
    SceneConfig full;
    full.gain_g = 2.0;
    const FixationRun over = run_fixation(t, full, EngineConfig{});
    const PerceptTrace po = tracked(over);
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (over.decisions[i].mode != Mode::VeridicalOverride) continue;
        EXPECT_EQ(po.positions[i].x, over.samples[i].stimulus_world_element.x);
        EXPECT_EQ(po.positions[i].y, over.samples[i].stimulus_world_element.y);
    }
    SceneConfig absent;
    absent.background_mode = BackgroundMode::Absent;
    absent.gain_g = -1.0;
    const FixationRun id = run_fixation(t, absent, EngineConfig{});
    const PerceptTrace pi = tracked(id);
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_EQ(pi.positions[i].x, id.samples[i].stimulus_retinal_element.x);
        EXPECT_EQ(pi.positions[i].y, id.samples[i].stimulus_retinal_element.y);
    }
}

TEST(Engine, BackgroundPerceptStable) {
    const EyeTrace t = generate_drift(38, 1.0, kStrongFixation.diffusion, 1000.0);
    SceneConfig sc;
    sc.gain_g = -1.0;
    EngineConfig ec;
    ec.latency_steps = 0;
    const FixationRun run = run_fixation(t, sc, ec);
    const SpatialArray& bg0 = *run.refs.background_ref;
    for (std::size_t i = 0; i < run.canvases.size(); i += 50) {
        std::size_t same = 0, total = 0;
        for (int y = 0; y < 128; ++y)
            for (int x = 0; x < 128; ++x) {
                if (std::hypot(x - 64.0, y - 64.0) <= 6.0 + 4.0) continue;  // stimulus neighborhood
                ++total;
                same += run.canvases[i](x, y) == bg0(x, y);
            }
        EXPECT_GE(static_cast<double>(same) / total, 0.99) << i;
    }
}

TEST(Engine, DecisionLogFormat) {
    std::vector<MappingDecision> d(2);
    d[0] = {Mode::CoherentStabilize, {1, -2}, Translation{0, 1}, 12.5, false};
    d[1] = {Mode::Identity, {0, 0}, std::nullopt, 0.0, false};
    std::stringstream ss;
    write_decision_log(d, ss);
    std::string header, l0, l1;
    std::getline(ss, header);
    std::getline(ss, l0);
    std::getline(ss, l1);
    EXPECT_EQ(header, "step,mode,m_p.dx,m_p.dy,m_s.dx,m_s.dy,match_energy");
    EXPECT_EQ(l0.rfind("0,stabilize,1,-2,0,1,", 0), 0u);
    EXPECT_EQ(l1.rfind("1,identity,0,0,,,", 0), 0u);
}

TEST(Engine, DeterministicRuns) {
    const EyeTrace t = generate_drift(39, 0.3, kWeakerFixation.diffusion, 1000.0);
    SceneConfig sc;
    sc.gain_g = 1.25;
    const FixationRun a = run_fixation(t, sc, EngineConfig{});
    const FixationRun b = run_fixation(t, sc, EngineConfig{});
    EXPECT_EQ(a.canvases, b.canvases);
    std::stringstream sa, sb;
    write_decision_log(a.decisions, sa);
    write_decision_log(b.decisions, sb);
    EXPECT_EQ(sa.str(), sb.str());
}
