#include <gtest/gtest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <string>

#include "teleop/batch.hpp"
#include "teleop/session.hpp"
#include "teleop/udp_channel.hpp"

using namespace teleop;
using namespace teleop::harness;
using nlohmann::json;

namespace {

ScenarioConfig live_config() {
  ScenarioConfig cfg = make_scenario(ScenarioId::Fig2, ControllerKind::IAC);
  cfg.trajectory = controllers::LiveTarget{};
  cfg.schedule = ConstantStiffness{Vec3::Constant(80.0)};
  cfg.duration = 3600.0;
  return cfg;
}

json step_until_snapshot(net::SessionCore& core) {
  for (int k = 0; k < 1000; ++k) {
    if (auto s = core.step()) return json::parse(*s);
  }
  ADD_FAILURE() << "no snapshot";
  return {};
}

}  // namespace

// --- datagram channel -------------------------------------------------------------

TEST(Udp, MatchesInProcessRun) {
  auto cfg = make_scenario(ScenarioId::Fig2, ControllerKind::IAC);
  cfg.duration = 1.0;
  const auto reference = trace_hash(run_scenario(cfg));
  auto channel = std::make_unique<net::UdpLoopbackChannel>();
  auto* raw = channel.get();
  Engine e(cfg, std::move(channel));
  EXPECT_EQ(trace_hash(e.run()), reference);
  EXPECT_EQ(raw->datagrams_lost(), 0u);
  EXPECT_GT(raw->port(), 0);
}

// --- session state machine -----------------------------------------------------------

TEST(Session, RejectsMalformedMessages) {
  net::SessionCore core(live_config());
  for (const char* bad :
       {"not json", "[1,2]", R"({"v":2,"type":"pause"})", R"({"kind":"pause"})",
        R"({"type":"warp"})", R"({"type":"grasp_level","grasp":"lots"})",
        R"({"type":"grasp_level","grasp":25})", R"({"type":"leader_target_move","position":[1,2]})",
        R"({"type":"delay_set","delay_ms":-5})", R"({"type":"scene_select","scenario":"moon"})",
        R"({"type":"controller_toggle","controller":"pid"})"}) {
    EXPECT_TRUE(core.submit(bad).has_value()) << bad;
  }
  EXPECT_EQ(core.pending_events(), 0u);
  EXPECT_FALSE(core.submit(R"({"v":1,"type":"pause"})").has_value());
  EXPECT_EQ(core.pending_events(), 1u);
}

TEST(Session, SnapshotDecimationAndFields) {
  net::SessionCore core(live_config(), 16);
  int snapshots = 0;
  for (int k = 0; k < 160; ++k) snapshots += core.step().has_value();
  EXPECT_EQ(snapshots, 10);
  const json s = json::parse(core.snapshot());
  for (const char* key : {"v", "type", "t", "x_l", "x", "tau", "L1", "L1_applied", "F_env",
                          "error", "controller", "scenario", "delay_ms", "ruptured", "paused"}) {
    EXPECT_TRUE(s.contains(key)) << key;
  }
  EXPECT_EQ(s["type"], "snapshot");
  EXPECT_EQ(s["delay_ms"], 100.0);
  EXPECT_THROW(net::SessionCore(live_config(), 0), ConfigError);
}

TEST(Session, GraspTakesEffectNextTick) {
  net::SessionCore a(live_config()), b(live_config());
  for (int k = 0; k < 50; ++k) {
    a.step();
    b.step();
  }
  ASSERT_FALSE(a.submit(R"({"type":"grasp_level","grasp":20})").has_value());
  a.step();
  b.step();
  EXPECT_GT(a.engine().shaped_gains().L1[0], b.engine().shaped_gains().L1[0]);
  EXPECT_EQ(a.ticks_run(), 51);
}

TEST(Session, FloodCoalescesToLatest) {
  net::SessionCore flood(live_config()), single(live_config());
  for (int k = 0; k < 1000; ++k) {
    const json m{{"type", "leader_target_move"}, {"x", 0.0001 * k}, {"z", -0.0001 * k}};
    ASSERT_FALSE(flood.submit(m.dump()).has_value());
  }
  EXPECT_EQ(flood.pending_events(), 1000u);
  single.submit(R"({"type":"leader_target_move","x":0.0999,"z":-0.0999})");
  for (int k = 0; k < 200; ++k) {
    flood.step();
    single.step();
  }
  EXPECT_EQ(flood.pending_events(), 0u);
  EXPECT_EQ(flood.snapshot(), single.snapshot());
  EXPECT_GT(flood.engine().leader().position[0], 0.01);
}

TEST(Session, ToggleIsContinuous) {
  net::SessionCore core(live_config(), 1);
  core.submit(R"({"type":"leader_target_move","position":[0.05,0,0]})");
  for (int k = 0; k < 500; ++k) core.step();
  const Vec3 before = core.engine().follower().position;
  core.submit(R"({"type":"controller_toggle"})");
  const json s = json::parse(*core.step());
  EXPECT_EQ(s["controller"], "tic");
  const Vec3 after = core.engine().follower().position;
  // One tick of motion, no jump.
  EXPECT_LT((after - before).norm(), 1e-3);
  core.submit(R"({"type":"controller_toggle","controller":"iac"})");
  EXPECT_EQ(json::parse(*core.step())["controller"], "iac");
}

TEST(Session, PauseThenResetMatchesFreshStart) {
  net::SessionCore used(live_config(), 1), fresh(live_config(), 1);
  used.submit(R"({"type":"leader_target_move","x":0.05,"z":0})");
  used.submit(R"({"type":"grasp_level","grasp":12})");
  used.submit(R"({"type":"delay_set","delay_ms":20})");
  for (int k = 0; k < 300; ++k) used.step();
  used.submit(R"({"type":"pause"})");
  EXPECT_FALSE(used.step().has_value());
  EXPECT_TRUE(used.paused());
  const long frozen = used.ticks_run();
  used.step();
  EXPECT_EQ(used.ticks_run(), frozen);
  used.submit(R"({"type":"reset"})");
  used.submit(R"({"type":"resume"})");
  EXPECT_EQ(step_until_snapshot(used), step_until_snapshot(fresh));
  for (int k = 0; k < 100; ++k) EXPECT_EQ(used.step(), fresh.step());
}

TEST(Session, SceneSelectAndDelay) {
  net::SessionCore core(live_config(), 1);
  core.submit(R"({"type":"delay_set","delay_ms":40})");
  EXPECT_EQ(json::parse(*core.step())["delay_ms"], 40.0);
  core.submit(R"({"type":"scene_select","scenario":"bilateral_polish"})");
  const json s = json::parse(*core.step());
  EXPECT_EQ(s["scenario"], "bilateral_polish");
  EXPECT_EQ(s["delay_ms"], 0.0);
  // Bilateral scenes keep zero delay.
  core.submit(R"({"type":"delay_set","delay_ms":40})");
  EXPECT_EQ(json::parse(*core.step())["delay_ms"], 0.0);
}

// --- websocket endpoint -----------------------------------------------------------------

TEST(Server, WebsocketRoundTrip) {
  namespace beast = boost::beast;
  namespace asio = boost::asio;
  net::SessionServer server(live_config(), 0, 8);
  const std::uint16_t port = server.start();
  ASSERT_GT(port, 0);

  asio::io_context io;
  asio::ip::tcp::resolver resolver(io);
  beast::websocket::stream<asio::ip::tcp::socket> ws(io);
  asio::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
  ws.handshake("127.0.0.1", "/");

  auto read_json = [&] {
    beast::flat_buffer buf;
    ws.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  };

  const json first = read_json();
  EXPECT_EQ(first["type"], "snapshot");
  EXPECT_EQ(first["v"], net::kSessionProtocolVersion);

  ws.write(asio::buffer(std::string("{broken")));
  bool saw_error = false;
  for (int k = 0; k < 2000 && !saw_error; ++k) saw_error = read_json()["type"] == "error";
  EXPECT_TRUE(saw_error);

  ws.write(asio::buffer(std::string(R"({"type":"controller_toggle","controller":"tic"})")));
  bool toggled = false;
  for (int k = 0; k < 2000 && !toggled; ++k) {
    const json m = read_json();
    toggled = m["type"] == "snapshot" && m["controller"] == "tic";
  }
  EXPECT_TRUE(toggled);

  ws.close(beast::websocket::close_code::normal);
  server.stop();
}
