#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "teleop/engine.hpp"

namespace teleop::net {

inline constexpr int kSessionProtocolVersion = 1;

// Interactive session state machine, independent of any socket. Input
// messages may arrive from another thread; they are queued and applied at the
// next tick boundary. Target and grasp updates coalesce (latest wins).
class SessionCore {
 public:
  explicit SessionCore(harness::ScenarioConfig config, long snapshot_every = 16);

  // Parses and queues one JSON input message. Returns an error description
  // for a malformed message, which is otherwise ignored. Thread-safe.
  std::optional<std::string> submit(const std::string& message);

  // Applies queued inputs, then advances one tick unless paused. Returns a
  // snapshot message when one is due. Engine-thread only.
  std::optional<std::string> step();

  // Snapshot of the current state regardless of decimation.
  std::string snapshot() const;

  bool paused() const { return paused_; }
  long ticks_run() const { return engine_->tick_index(); }
  const harness::Engine& engine() const { return *engine_; }
  double dt() const { return engine_->config().dt; }
  std::size_t pending_events() const;

 private:
  struct Pending {
    std::optional<Vec3> target;
    std::optional<double> grasp;
    std::optional<harness::ControllerKind> controller;
    bool toggle = false;
    std::optional<double> delay;
    std::optional<harness::ScenarioId> scene;
    std::optional<bool> pause;
    bool reset = false;
    std::size_t count = 0;
  };

  void apply(Pending& p);

  std::unique_ptr<harness::Engine> engine_;
  long snapshot_every_;
  bool paused_ = false;
  std::uint64_t snapshots_sent_ = 0;

  mutable std::mutex mu_;
  Pending pending_;
};

// Websocket endpoint serving one SessionCore. The engine runs on its own
// thread at wall-clock pace; snapshots are broadcast to every client.
class SessionServer {
 public:
  SessionServer(harness::ScenarioConfig config, std::uint16_t port, long snapshot_every = 16);
  ~SessionServer();

  // Binds and starts the network and engine threads. Returns the bound port.
  std::uint16_t start();
  void stop();
  // Blocks until stop() is called from another thread or a signal handler.
  void wait();

  SessionCore& core() { return core_; }

 private:
  struct Impl;
  SessionCore core_;
  std::uint16_t port_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace teleop::net
