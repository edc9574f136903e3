#include "teleop/udp_channel.hpp"

#include <array>

#include <boost/asio.hpp>

namespace teleop::net {

namespace asio = boost::asio;
using asio::ip::udp;

struct UdpLoopbackChannel::Impl {
  asio::io_context io;
  udp::socket rx{io};
  udp::socket tx{io};
  udp::endpoint target;
  std::chrono::milliseconds timeout;
  transport::DelayLine<transport::LeaderPacket> line{0};
  std::uint64_t lost = 0;
  std::array<std::uint8_t, 1500> buf{};

  // Waits for the datagram carrying `seq`, discarding strays.
  std::optional<transport::LeaderPacket> receive(std::uint32_t seq) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < deadline) {
      boost::system::error_code ec;
      udp::endpoint from;
      const std::size_t n = rx.receive_from(asio::buffer(buf), from, 0, ec);
      if (ec == asio::error::would_block || ec == asio::error::try_again) {
        rx.wait(udp::socket::wait_read, ec);
        continue;
      }
      if (ec) return std::nullopt;
      try {
        auto p = transport::decode_leader(std::span<const std::uint8_t>(buf.data(), n));
        if (p.seq == seq) return p;
      } catch (const transport::DecodeError&) {
        // Not ours; keep waiting.
      }
    }
    return std::nullopt;
  }
};

UdpLoopbackChannel::UdpLoopbackChannel(std::uint16_t port, std::chrono::milliseconds timeout)
    : impl_(std::make_unique<Impl>()) {
  impl_->timeout = timeout;
  const auto loopback = asio::ip::address_v4::loopback();
  impl_->rx.open(udp::v4());
  impl_->rx.bind(udp::endpoint(loopback, port));
  impl_->rx.non_blocking(true);
  impl_->tx.open(udp::v4());
  impl_->target = udp::endpoint(loopback, impl_->rx.local_endpoint().port());
}

UdpLoopbackChannel::~UdpLoopbackChannel() = default;

void UdpLoopbackChannel::send(const transport::LeaderPacket& p, long tick) {
  const auto bytes = transport::encode(p);
  impl_->tx.send_to(asio::buffer(bytes), impl_->target);
  if (auto got = impl_->receive(p.seq)) {
    impl_->line.enqueue(*got, tick);
  } else {
    ++impl_->lost;
  }
}

std::optional<transport::LeaderPacket> UdpLoopbackChannel::poll(long tick) {
  return impl_->line.poll_latest(tick);
}

long UdpLoopbackChannel::last_send_tick() const { return impl_->line.last_send_tick(); }
void UdpLoopbackChannel::set_delay_ticks(long ticks) { impl_->line.set_delay_ticks(ticks); }
void UdpLoopbackChannel::clear() { impl_->line.clear(); }
std::uint16_t UdpLoopbackChannel::port() const { return impl_->rx.local_endpoint().port(); }
std::uint64_t UdpLoopbackChannel::datagrams_lost() const { return impl_->lost; }

}  // namespace teleop::net
