#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <algorithm>

#include "teleop/batch.hpp"
#include "teleop/config_io.hpp"
#include "teleop/engine.hpp"
#include "teleop/metrics.hpp"
#include "teleop/trace.hpp"

using namespace teleop;
using namespace teleop::harness;

namespace {

ScenarioConfig short_fig2(ControllerKind c, double duration = 3.0) {
  ScenarioConfig cfg = make_scenario(ScenarioId::Fig2, c);
  cfg.duration = duration;
  cfg.phases.clear();
  return cfg;
}

TraceRow row_with(double t, double L1, double err) {
  TraceRow r;
  r.t = t;
  r.L1 = Vec3::Constant(L1);
  r.x = Vec3(err, 0, 0);
  r.error = err;
  return r;
}

}  // namespace

// --- scenarios ----------------------------------------------------------------

TEST(Scenario, PresetPins) {
  const auto f = make_scenario(ScenarioId::Fig2, ControllerKind::IAC);
  EXPECT_EQ(f.delta, 0.1);
  EXPECT_EQ(f.duration, 10.0);
  EXPECT_EQ(f.ticks(), 10000);
  const auto& sine = std::get<controllers::SineTrajectory>(f.trajectory);
  EXPECT_EQ(sine.amplitude[0], 0.10);
  EXPECT_EQ(sine.frequency, 0.6);

  EXPECT_EQ(make_scenario(ScenarioId::Balloon, ControllerKind::TIC).high_gain_L1[0], 300.0);
  EXPECT_EQ(std::get<ConstantStiffness>(make_scenario(ScenarioId::Balloon, ControllerKind::IAC)
                                            .schedule)
                .L1[0],
            60.0);

  const auto p = make_scenario(ScenarioId::BilateralPolish, ControllerKind::IAC);
  EXPECT_TRUE(p.bilateral);
  EXPECT_EQ(p.delta, 0.0);
  for (auto id : {ScenarioId::Fig2, ScenarioId::FreeTracking, ScenarioId::Balloon,
                  ScenarioId::BilateralPolish, ScenarioId::Custom}) {
    EXPECT_NO_THROW(make_scenario(id, ControllerKind::TIC).validate()) << to_string(id);
    EXPECT_EQ(parse_scenario(to_string(id)), id);
  }
  EXPECT_THROW(parse_scenario("fig3"), ConfigError);
}

TEST(Scenario, ValidateNamesTheProblem) {
  auto p = make_scenario(ScenarioId::BilateralPolish, ControllerKind::IAC);
  p.delta = 0.1;
  EXPECT_THROW(p.validate(), ConfigError);
  ScenarioConfig c;
  c.dt = 0.0;
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("dt"), std::string::npos);
  }
  c = ScenarioConfig{};
  c.schedule = SinusoidStiffness{100.0, 200.0};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Scenario, DesiredStiffness) {
  const auto f = make_scenario(ScenarioId::Fig2, ControllerKind::IAC);
  EXPECT_EQ(desired_stiffness(f, 1.0)[0], 500.0);
  EXPECT_EQ(desired_stiffness(f, 5.0)[0], 50.0);
  EXPECT_EQ(desired_stiffness(f, 8.0)[0], 500.0);

  const auto p = make_scenario(ScenarioId::BilateralPolish, ControllerKind::IAC);
  // Grasp 10 N on the ramp: 80 + 62 * 10.
  EXPECT_DOUBLE_EQ(desired_stiffness(p, 5.0)[0], 700.0);
  EXPECT_DOUBLE_EQ(desired_stiffness(p, 15.0)[0], 1320.0);
  EXPECT_DOUBLE_EQ(desired_stiffness(p, 30.0)[0], 80.0);

  const auto s = make_scenario(ScenarioId::FreeTracking, ControllerKind::IAC);
  EXPECT_NEAR(desired_stiffness(s, 2.0)[1], 1320.0, 1e-9);
}

// --- engine and trace ----------------------------------------------------------

TEST(Engine, RowCountAndHold) {
  const auto cfg = short_fig2(ControllerKind::IAC, 1.0);
  const ScenarioTrace tr = run_scenario(cfg);
  ASSERT_EQ(tr.rows.size(), static_cast<std::size_t>(cfg.ticks() + 1));
  EXPECT_EQ(tr.rows.front().t, 0.0);
  EXPECT_DOUBLE_EQ(tr.rows.back().t, 1.0);
  for (long k = 0; k < 100; ++k) EXPECT_EQ(tr.packet_age[static_cast<std::size_t>(k)], -1);
  for (std::size_t k = 100; k < tr.rows.size(); ++k) ASSERT_EQ(tr.packet_age[k], 100);
}

TEST(Engine, ResetMatchesFreshStart) {
  const auto cfg = short_fig2(ControllerKind::IAC, 0.5);
  Engine a(cfg);
  for (int k = 0; k < 300; ++k) a.tick();
  a.set_grasp(5.0);
  a.set_delay(0.02);
  a.reset();
  const ScenarioTrace fresh = run_scenario(cfg);
  a.run();
  EXPECT_EQ(a.trace().rows, fresh.rows);
}

TEST(Engine, LiveControls) {
  Engine e(short_fig2(ControllerKind::IAC, 1.0));
  EXPECT_THROW(e.set_grasp(-1.0), ConfigError);
  EXPECT_THROW(e.set_delay(-0.1), ConfigError);
  EXPECT_THROW(e.set_live_target(Vec3(NAN, 0, 0)), Error);
  e.set_delay(0.0);
  e.set_live_target(Vec3(0.05, 0, 0));
  e.tick();
  EXPECT_EQ(e.trace().packet_age.back(), 0);
  Engine b(make_scenario(ScenarioId::BilateralPolish, ControllerKind::IAC));
  EXPECT_THROW(b.set_delay(0.1), ConfigError);
}

TEST(Engine, DivergenceIsReported) {
  auto cfg = short_fig2(ControllerKind::TIC, 2.0);
  cfg.divergence_bound = 0.05;
  EXPECT_THROW(run_scenario(cfg), DivergenceError);
}

TEST(Trace, CsvRoundTripIsExact) {
  const ScenarioTrace tr = run_scenario(short_fig2(ControllerKind::IAC, 0.3));
  const std::string csv = trace_to_csv(tr);
  EXPECT_EQ(csv.rfind("t,", 0), 0u);
  const ScenarioTrace back = parse_trace_csv(csv);
  EXPECT_EQ(back.rows, tr.rows);
  EXPECT_EQ(trace_to_csv(back), csv);

  const auto path = std::filesystem::temp_directory_path() / "teleop_trace_test.csv";
  export_trace(tr, path);
  EXPECT_EQ(read_trace(path).rows, tr.rows);
  std::filesystem::remove(path);
  EXPECT_THROW(read_trace("/nonexistent/dir/x.csv"), Error);
  EXPECT_THROW(parse_trace_csv("t,bogus\n1,2\n"), Error);
}

TEST(Trace, HashIsDeterministic) {
  auto cfg = make_scenario(ScenarioId::FreeTracking, ControllerKind::IAC);
  cfg.duration = 1.0;
  const auto h1 = trace_hash(run_scenario(cfg));
  EXPECT_EQ(trace_hash(run_scenario(cfg)), h1);
  cfg.seed += 1;
  EXPECT_NE(trace_hash(run_scenario(cfg)), h1);
}

TEST(Trace, ColumnsAreAxisSuffixed) {
  const auto& cols = trace_columns();
  EXPECT_EQ(cols.front(), "t");
  EXPECT_EQ(cols.back(), "error");
  EXPECT_NE(std::find(cols.begin(), cols.end(), "F_env_z"), cols.end());
}

// --- metrics ---------------------------------------------------------------------

TEST(Metrics, HandBuiltTrace) {
  ScenarioTrace tr;
  // L1 = 100 with errors 1, 3; L1 = 1100 with errors 2, 2, 8; L1 = 1400 (right edge) error 4.
  tr.rows = {row_with(0.0, 100, 1), row_with(0.001, 100, 3), row_with(0.002, 1100, 2),
             row_with(0.003, 1100, 2), row_with(0.004, 1100, 8), row_with(0.005, 1400, 4)};
  const MetricsReport m = compute_metrics(tr);
  EXPECT_EQ(m.rows, 6u);
  EXPECT_DOUBLE_EQ(m.mean_error, 20.0 / 6.0);
  EXPECT_DOUBLE_EQ(m.max_error, 8.0);
  EXPECT_DOUBLE_EQ(m.rms_error, std::sqrt((1 + 9 + 4 + 4 + 64 + 16) / 6.0));
  ASSERT_EQ(m.bins.size(), 3u);  // empty bins absent
  EXPECT_EQ(m.bins[0].lo, 0.0);
  EXPECT_EQ(m.bins[0].count, 2u);
  EXPECT_DOUBLE_EQ(m.bins[0].mean, 2.0);
  EXPECT_DOUBLE_EQ(m.bins[0].stddev, 1.0);
  EXPECT_EQ(m.bins[1].lo, 1000.0);
  EXPECT_DOUBLE_EQ(m.bins[1].mean, 4.0);
  EXPECT_EQ(m.bins[2].lo, 1200.0);
  EXPECT_EQ(m.bins[2].count, 1u);

  EXPECT_DOUBLE_EQ(*mean_error_above(tr, 1000.0), 4.0);
  EXPECT_FALSE(mean_error_above(tr, 5000.0).has_value());

  const PhaseStats ps = phase_stats(tr, {"mid", 0.002, 0.005});
  EXPECT_EQ(ps.count, 3u);
  EXPECT_DOUBLE_EQ(ps.max_error, 8.0);
  EXPECT_DOUBLE_EQ(ps.max_error_xy, 8.0);

  // Pure: same input, same output.
  EXPECT_EQ(metrics_to_json(compute_metrics(tr)), metrics_to_json(m));
  EXPECT_THROW(compute_metrics(tr, {1.0}), ConfigError);
}

TEST(Metrics, ZeroErrorTrace) {
  ScenarioTrace tr;
  for (int k = 0; k < 10; ++k) tr.rows.push_back(row_with(k * 1e-3, 500, 0.0));
  const auto m = compute_metrics(tr);
  EXPECT_EQ(m.mean_error, 0.0);
  EXPECT_EQ(m.max_error, 0.0);
  ASSERT_EQ(m.bins.size(), 1u);
  EXPECT_EQ(m.bins[0].stddev, 0.0);
}

// --- config files ----------------------------------------------------------------

TEST(Config, UnknownKeyNamesField) {
  try {
    parse_config(R"({"scenario":"fig2","follower":{"mass":3,"masss":4}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("follower.masss"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config(R"({"dt":"fast"})"), ConfigError);
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  EXPECT_THROW(parse_config(R"({"scenario":"fig9"})"), ConfigError);
}

TEST(Config, PresetThenOverrides) {
  const auto c = parse_config(R"({"scenario":"fig2","controller":"tic","delta":0.05,"seed":9})");
  EXPECT_EQ(c.id, ScenarioId::Fig2);
  EXPECT_EQ(c.controller, ControllerKind::TIC);
  EXPECT_EQ(c.delta, 0.05);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.duration, 10.0);  // from the preset
  const auto d = parse_config(R"({"scenario":"fig2"})", ScenarioId::Balloon, ControllerKind::TIC);
  EXPECT_EQ(d.id, ScenarioId::Balloon);
  EXPECT_EQ(d.high_gain_L1[0], 300.0);
}

TEST(Config, DumpRoundTrips) {
  for (auto id : {ScenarioId::Fig2, ScenarioId::FreeTracking, ScenarioId::Balloon,
                  ScenarioId::BilateralPolish}) {
    auto cfg = make_scenario(id, ControllerKind::IAC);
    cfg.estimator = EstimatorKind::Observer;
    const std::string text = config_to_json(cfg);
    const ScenarioConfig back = parse_config(text);
    EXPECT_EQ(config_to_json(back), text) << to_string(id);
    auto shorter = back;
    shorter.duration = 0.2;
    auto orig = cfg;
    orig.duration = 0.2;
    EXPECT_EQ(trace_hash(run_scenario(shorter)), trace_hash(run_scenario(orig))) << to_string(id);
  }
}

// --- batch -------------------------------------------------------------------

TEST(Batch, ParallelMatchesSerial) {
  auto base = make_scenario(ScenarioId::FreeTracking, ControllerKind::IAC);
  base.duration = 0.5;
  auto configs = seed_sweep(base, 1, 6);
  configs[3].divergence_bound = 1e-9;  // fails on purpose
  const auto serial = run_batch_serial(configs);
  const auto parallel = run_batch_parallel(configs, 3);
  ASSERT_EQ(serial.size(), 6u);
  for (std::size_t k = 0; k < serial.size(); ++k) {
    EXPECT_EQ(serial[k].trace_hash, parallel[k].trace_hash) << k;
    EXPECT_EQ(serial[k].error, parallel[k].error) << k;
    EXPECT_EQ(metrics_to_json(serial[k].metrics), metrics_to_json(parallel[k].metrics));
  }
  EXPECT_FALSE(serial[3].error.empty());
  EXPECT_TRUE(serial[0].error.empty());
  EXPECT_NE(serial[0].trace_hash, serial[1].trace_hash);
  EXPECT_EQ(configs[4].seed, 5u);
}

// --- estimators in the loop -------------------------------------------------------

TEST(Estimators, ObserverTracksLikeDirectSolve) {
  auto cfg = make_scenario(ScenarioId::Fig2, ControllerKind::IAC);
  const double direct = compute_metrics(run_scenario(cfg)).rms_error;
  cfg.estimator = EstimatorKind::Observer;
  const double observer = compute_metrics(run_scenario(cfg)).rms_error;
  EXPECT_LT(std::abs(observer - direct), 0.2 * direct) << direct << " vs " << observer;
}

TEST(Estimators, TwoLinkFollowerMatchesPointMass) {
  auto cfg = short_fig2(ControllerKind::IAC, 2.0);
  const ScenarioTrace pm = run_scenario(cfg);
  cfg.follower_model = FollowerModel::TwoLink;
  cfg.follower.gravity_force = Vec3::Zero();
  const ScenarioTrace arm = run_scenario(cfg);
  double worst = 0.0;
  for (std::size_t k = 0; k < pm.rows.size(); ++k) {
    worst = std::max(worst, (pm.rows[k].x - arm.rows[k].x).norm());
  }
  EXPECT_LT(worst, 1e-6);
}
