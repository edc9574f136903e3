#pragma once

#include <chrono>
#include <cstdint>
#include <memory>

#include "teleop/engine.hpp"

namespace teleop::net {

// Leader channel that sends every packet through a UDP socket on the loopback
// interface and applies the tick delay on the receiving side. Decoded packets
// are bitwise identical to the sent ones, so runs match the in-process
// channel. A datagram that does not arrive within `timeout` counts as lost
// and the follower keeps its last command.
class UdpLoopbackChannel : public harness::LeaderChannel {
 public:
  explicit UdpLoopbackChannel(std::uint16_t port = 0,
                              std::chrono::milliseconds timeout = std::chrono::milliseconds(500));
  ~UdpLoopbackChannel() override;

  void send(const transport::LeaderPacket& p, long tick) override;
  std::optional<transport::LeaderPacket> poll(long tick) override;
  long last_send_tick() const override;
  void set_delay_ticks(long ticks) override;
  void clear() override;

  std::uint16_t port() const;
  std::uint64_t datagrams_lost() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace teleop::net
