#include "teleop/session.hpp"

#include <chrono>
#include <condition_variable>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

namespace teleop::net {

using json = nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

double number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ConfigError(std::string("'") + key + "' must be a number");
  }
  const double v = j.at(key).get<double>();
  require_finite(v, key);
  return v;
}

}  // namespace

SessionCore::SessionCore(harness::ScenarioConfig config, long snapshot_every)
    : engine_(std::make_unique<harness::Engine>(std::move(config))),
      snapshot_every_(snapshot_every) {
  if (snapshot_every_ < 1) throw ConfigError("snapshot decimation must be >= 1");
  engine_->set_recording(false);
}

std::optional<std::string> SessionCore::submit(const std::string& message) {
  Pending update;
  try {
    const json j = json::parse(message);
    if (!j.is_object()) return "message must be a JSON object";
    if (j.contains("v") && (!j.at("v").is_number_integer() ||
                            j.at("v").get<int>() != kSessionProtocolVersion)) {
      return "unsupported protocol version";
    }
    if (!j.contains("type") || !j.at("type").is_string()) return "missing 'type'";
    const std::string type = j.at("type").get<std::string>();
    if (type == "leader_target_move") {
      Vec3 p = Vec3::Zero();
      if (j.contains("position")) {
        const json& a = j.at("position");
        if (!a.is_array() || a.size() != 3) return "'position' must be an array of 3 numbers";
        for (int i = 0; i < 3; ++i) {
          if (!a[i].is_number()) return "'position' must be an array of 3 numbers";
          p[i] = a[i].get<double>();
        }
        require_finite(p, "position");
      } else {
        p[0] = number(j, "x");
        p[2] = number(j, "z");
        if (j.contains("y")) p[1] = number(j, "y");
      }
      update.target = p;
    } else if (type == "grasp_level") {
      const double g = number(j, "grasp");
      if (g < 0.0 || g > 20.0) return "'grasp' must be within [0, 20] N";
      update.grasp = g;
    } else if (type == "controller_toggle") {
      if (j.contains("controller")) {
        if (!j.at("controller").is_string()) return "'controller' must be a string";
        update.controller = harness::parse_controller(j.at("controller").get<std::string>());
      } else {
        update.toggle = true;
      }
    } else if (type == "delay_set") {
      const double ms = number(j, "delay_ms");
      if (ms < 0.0) return "'delay_ms' must be non-negative";
      update.delay = ms / 1000.0;
    } else if (type == "scene_select") {
      if (!j.contains("scenario") || !j.at("scenario").is_string()) return "missing 'scenario'";
      update.scene = harness::parse_scenario(j.at("scenario").get<std::string>());
    } else if (type == "pause") {
      update.pause = true;
    } else if (type == "resume") {
      update.pause = false;
    } else if (type == "reset") {
      update.reset = true;
    } else {
      return "unknown message type '" + type + "'";
    }
  } catch (const json::exception& e) {
    return std::string("malformed JSON: ") + e.what();
  } catch (const Error& e) {
    return e.what();
  }

  std::lock_guard lock(mu_);
  Pending& p = pending_;
  if (update.scene) {
    // A new scene discards everything queued for the old one.
    p = Pending{};
    p.scene = update.scene;
  }
  if (update.reset) {
    p.target.reset();
    p.grasp.reset();
    p.reset = true;
  }
  if (update.target) p.target = update.target;
  if (update.grasp) p.grasp = update.grasp;
  if (update.controller) {
    p.controller = update.controller;
    p.toggle = false;
  }
  if (update.toggle) p.toggle = !p.toggle;
  if (update.delay) p.delay = update.delay;
  if (update.pause) p.pause = update.pause;
  ++p.count;
  return std::nullopt;
}

std::size_t SessionCore::pending_events() const {
  std::lock_guard lock(mu_);
  return pending_.count;
}

void SessionCore::apply(Pending& p) {
  if (p.scene) {
    harness::ScenarioConfig cfg =
        harness::make_scenario(*p.scene, engine_->config().controller);
    engine_ = std::make_unique<harness::Engine>(std::move(cfg));
    engine_->set_recording(false);
  }
  if (p.reset) engine_->reset();
  if (p.controller) {
    engine_->set_controller(*p.controller);
  } else if (p.toggle) {
    engine_->set_controller(engine_->config().controller == harness::ControllerKind::IAC
                                ? harness::ControllerKind::TIC
                                : harness::ControllerKind::IAC);
  }
  if (p.delay) {
    try {
      engine_->set_delay(*p.delay);
    } catch (const ConfigError&) {
      // Bilateral scenes keep zero delay.
    }
  }
  if (p.grasp) engine_->set_grasp(*p.grasp);
  if (p.target) engine_->set_live_target(*p.target);
  if (p.pause) paused_ = *p.pause;
}

std::optional<std::string> SessionCore::step() {
  Pending p;
  {
    std::lock_guard lock(mu_);
    std::swap(p, pending_);
  }
  if (p.count > 0) apply(p);
  if (paused_) return std::nullopt;
  engine_->tick();
  if (engine_->tick_index() % snapshot_every_ == 0) {
    ++snapshots_sent_;
    return snapshot();
  }
  return std::nullopt;
}

std::string SessionCore::snapshot() const {
  const harness::TraceRow& r = engine_->last_row();
  json j;
  j["v"] = kSessionProtocolVersion;
  j["type"] = "snapshot";
  j["t"] = r.t;
  j["x_l"] = vec_json(r.x_l);
  j["x"] = vec_json(r.x);
  j["tau"] = vec_json(r.tau);
  j["L1"] = vec_json(engine_->shaped_gains().L1);
  j["L1_applied"] = vec_json(r.L1);
  j["F_env"] = vec_json(r.F_env);
  j["error"] = r.error;
  j["controller"] = harness::to_string(engine_->config().controller);
  j["scenario"] = harness::to_string(engine_->config().id);
  j["delay_ms"] = engine_->config().delta * 1000.0;
  j["ruptured"] = engine_->ruptured();
  j["paused"] = paused_;
  return j.dump();
}

// --- websocket server -------------------------------------------------------

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, SessionCore& core, std::function<void(Connection*)> on_close)
      : ws_(std::move(socket)), core_(core), on_close_(std::move(on_close)) {}

  void start() {
    ws_.text(true);
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->close();
      self->read();
    });
  }

  void send(std::string msg) {
    // Drop stale snapshots if the client cannot keep up; the front entry may
    // be in flight.
    if (queue_.size() > 64) queue_.erase(queue_.begin() + 1);
    queue_.push_back(std::move(msg));
    if (!writing_) write();
  }

 private:
  void read() {
    ws_.async_read(buf_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      const std::string msg = beast::buffers_to_string(self->buf_.data());
      self->buf_.consume(self->buf_.size());
      if (auto err = self->core_.submit(msg)) {
        json e{{"v", kSessionProtocolVersion}, {"type", "error"}, {"message", *err}};
        self->send(e.dump());
      }
      self->read();
    });
  }

  void write() {
    if (queue_.empty()) {
      writing_ = false;
      return;
    }
    writing_ = true;
    ws_.async_write(asio::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) return self->close();
                      self->queue_.pop_front();
                      self->write();
                    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    on_close_(this);
  }

  websocket::stream<tcp::socket> ws_;
  SessionCore& core_;
  std::function<void(Connection*)> on_close_;
  beast::flat_buffer buf_;
  std::deque<std::string> queue_;
  bool writing_ = false;
  bool closed_ = false;
};

}  // namespace

struct SessionServer::Impl {
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::set<std::shared_ptr<Connection>> clients;
  std::thread net_thread;
  std::thread engine_thread;
  std::atomic<bool> running{false};
  std::mutex mu;
  std::condition_variable cv;

  void accept(SessionCore& core) {
    acceptor.async_accept([this, &core](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto conn = std::make_shared<Connection>(std::move(socket), core, [this](Connection* c) {
        for (auto it = clients.begin(); it != clients.end(); ++it) {
          if (it->get() == c) {
            clients.erase(it);
            break;
          }
        }
      });
      clients.insert(conn);
      conn->start();
      accept(core);
    });
  }
};

SessionServer::SessionServer(harness::ScenarioConfig config, std::uint16_t port,
                             long snapshot_every)
    : core_(std::move(config), snapshot_every), port_(port), impl_(std::make_unique<Impl>()) {}

SessionServer::~SessionServer() { stop(); }

std::uint16_t SessionServer::start() {
  Impl& s = *impl_;
  const tcp::endpoint ep(asio::ip::address_v4::loopback(), port_);
  s.acceptor.open(ep.protocol());
  s.acceptor.set_option(asio::socket_base::reuse_address(true));
  s.acceptor.bind(ep);
  s.acceptor.listen();
  port_ = s.acceptor.local_endpoint().port();
  s.running = true;
  s.accept(core_);
  s.net_thread = std::thread([&s] { s.io.run(); });
  s.engine_thread = std::thread([this, &s] {
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(core_.dt()));
    auto next = std::chrono::steady_clock::now();
    while (s.running) {
      std::optional<std::string> snap;
      try {
        snap = core_.step();
      } catch (const std::exception& e) {
        // A diverged scene is reset rather than ending the session.
        core_.submit(R"({"type":"reset"})");
        snap = json{{"v", kSessionProtocolVersion}, {"type", "error"}, {"message", e.what()}}.dump();
      }
      if (snap) {
        asio::post(s.io, [&s, msg = std::move(*snap)] {
          for (const auto& c : s.clients) c->send(msg);
        });
      }
      next += period;
      std::this_thread::sleep_until(next);
    }
  });
  return port_;
}

void SessionServer::stop() {
  Impl& s = *impl_;
  {
    std::lock_guard lock(s.mu);
    if (!s.running && !s.net_thread.joinable()) return;
    s.running = false;
  }
  s.cv.notify_all();
  if (s.engine_thread.joinable()) s.engine_thread.join();
  asio::post(s.io, [&s] {
    beast::error_code ec;
    s.acceptor.close(ec);
    s.clients.clear();
    s.io.stop();
  });
  if (s.net_thread.joinable()) s.net_thread.join();
}

void SessionServer::wait() {
  Impl& s = *impl_;
  std::unique_lock lock(s.mu);
  s.cv.wait(lock, [&s] { return !s.running; });
}

}  // namespace teleop::net
