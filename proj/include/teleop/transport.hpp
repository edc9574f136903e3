#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "teleop/types.hpp"

namespace teleop::transport {

enum class PayloadKind : std::uint8_t { RawState = 0, Target = 1, Feedback = 2 };

struct LeaderPacket {
  std::uint32_t seq = 0;
  double t_send = 0.0;
  PayloadKind kind = PayloadKind::RawState;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 L1 = Vec3::Zero();
  Vec3 L2 = Vec3::Zero();

  bool operator==(const LeaderPacket&) const = default;
};

struct FeedbackPacket {
  std::uint32_t seq = 0;
  double t_send = 0.0;
  Vec3 F_env = Vec3::Zero();

  bool operator==(const FeedbackPacket&) const = default;
};

using Packet = std::variant<LeaderPacket, FeedbackPacket>;

inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kHeaderSize = 2 + 1 + 1 + 4 + 8;
inline constexpr std::size_t kLeaderWireSize = kHeaderSize + 12 * 8;
inline constexpr std::size_t kFeedbackWireSize = kHeaderSize + 3 * 8;

class DecodeError : public std::runtime_error {
 public:
  DecodeError(const std::string& what, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

std::vector<std::uint8_t> encode(const LeaderPacket& p);
std::vector<std::uint8_t> encode(const FeedbackPacket& p);
std::vector<std::uint8_t> encode(const Packet& p);

// Never reads outside `bytes`; throws DecodeError on any framing problem.
Packet decode(std::span<const std::uint8_t> bytes);
LeaderPacket decode_leader(std::span<const std::uint8_t> bytes);
FeedbackPacket decode_feedback(std::span<const std::uint8_t> bytes);

// Constant-delay channel counted in whole ticks. A packet enqueued on tick k
// becomes visible on tick k + delay_ticks; polling returns the newest visible
// packet and discards older ones.
template <class P>
class DelayLine {
 public:
  explicit DelayLine(long delay_ticks = 0) : delay_ticks_(delay_ticks) {
    if (delay_ticks < 0) throw ConfigError("delay must be non-negative");
  }

  // Delay in seconds rounded to ticks of length dt.
  static long ticks_for(double delta, double dt);

  void enqueue(const P& packet, long tick) {
    if (tick < last_enqueue_) throw ConfigError("delay line: out-of-order enqueue");
    last_enqueue_ = tick;
    queue_.push_back({tick + delay_ticks_, packet, tick});
  }

  std::optional<P> poll_latest(long tick) {
    std::optional<P> out;
    while (!queue_.empty() && queue_.front().release_tick <= tick) {
      out = queue_.front().packet;
      last_send_tick_ = queue_.front().send_tick;
      queue_.pop_front();
    }
    return out;
  }

  // Send tick of the packet most recently returned by poll_latest.
  long last_send_tick() const { return last_send_tick_; }
  long delay_ticks() const { return delay_ticks_; }
  std::size_t pending() const { return queue_.size(); }

  // Changes the delay for packets enqueued from now on. Packets already in
  // flight keep their release tick.
  void set_delay_ticks(long d) {
    if (d < 0) throw ConfigError("delay must be non-negative");
    delay_ticks_ = d;
  }
  void clear() {
    queue_.clear();
    last_enqueue_ = -1;
    last_send_tick_ = -1;
  }

 private:
  struct Entry {
    long release_tick;
    P packet;
    long send_tick;
  };
  long delay_ticks_;
  long last_enqueue_ = -1;
  long last_send_tick_ = -1;
  std::deque<Entry> queue_;
};

template <class P>
long DelayLine<P>::ticks_for(double delta, double dt) {
  if (!(delta >= 0.0)) throw ConfigError("delay must be non-negative");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  return static_cast<long>(std::llround(delta / dt));
}

}  // namespace teleop::transport
