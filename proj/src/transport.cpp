#include "teleop/transport.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <string>

namespace teleop::transport {

DecodeError::DecodeError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}

namespace {

class Writer {
 public:
  explicit Writer(std::size_t size) { buf_.reserve(size); }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void vec(const Vec3& v) {
    for (int i = 0; i < 3; ++i) f64(v[i]);
  }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::size_t offset() const { return pos_; }
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw DecodeError("truncated packet", pos_);
  }
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }
  Vec3 vec() {
    Vec3 v;
    for (int i = 0; i < 3; ++i) v[i] = f64();
    return v;
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void header(Writer& w, PayloadKind kind, std::uint32_t seq, double t_send) {
  w.u8('T');
  w.u8('Q');
  w.u8(kWireVersion);
  w.u8(static_cast<std::uint8_t>(kind));
  w.u32(seq);
  w.f64(t_send);
}

struct Header {
  PayloadKind kind;
  std::uint32_t seq;
  double t_send;
};

Header read_header(Reader& r, std::size_t total) {
  if (r.u8() != 'T') throw DecodeError("bad magic", 0);
  if (r.u8() != 'Q') throw DecodeError("bad magic", 1);
  if (r.u8() != kWireVersion) throw DecodeError("unsupported version", 2);
  const std::uint8_t kind = r.u8();
  if (kind > static_cast<std::uint8_t>(PayloadKind::Feedback)) {
    throw DecodeError("unknown payload kind", 3);
  }
  Header h{static_cast<PayloadKind>(kind), 0, 0.0};
  const std::size_t expected =
      h.kind == PayloadKind::Feedback ? kFeedbackWireSize : kLeaderWireSize;
  if (total > expected) throw DecodeError("trailing bytes", expected);
  h.seq = r.u32();
  h.t_send = r.f64();
  return h;
}

}  // namespace

std::vector<std::uint8_t> encode(const LeaderPacket& p) {
  if (p.kind == PayloadKind::Feedback) {
    throw ConfigError("leader packet cannot carry the feedback kind");
  }
  Writer w(kLeaderWireSize);
  header(w, p.kind, p.seq, p.t_send);
  w.vec(p.position);
  w.vec(p.velocity);
  w.vec(p.L1);
  w.vec(p.L2);
  return w.take();
}

std::vector<std::uint8_t> encode(const FeedbackPacket& p) {
  Writer w(kFeedbackWireSize);
  header(w, PayloadKind::Feedback, p.seq, p.t_send);
  w.vec(p.F_env);
  return w.take();
}

std::vector<std::uint8_t> encode(const Packet& p) {
  return std::visit([](const auto& v) { return encode(v); }, p);
}

Packet decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const Header h = read_header(r, bytes.size());
  if (h.kind == PayloadKind::Feedback) {
    FeedbackPacket p;
    p.seq = h.seq;
    p.t_send = h.t_send;
    p.F_env = r.vec();
    return p;
  }
  LeaderPacket p;
  p.seq = h.seq;
  p.t_send = h.t_send;
  p.kind = h.kind;
  p.position = r.vec();
  p.velocity = r.vec();
  p.L1 = r.vec();
  p.L2 = r.vec();
  return p;
}

LeaderPacket decode_leader(std::span<const std::uint8_t> bytes) {
  Packet p = decode(bytes);
  if (auto* l = std::get_if<LeaderPacket>(&p)) return *l;
  throw DecodeError("expected a leader packet", 3);
}

FeedbackPacket decode_feedback(std::span<const std::uint8_t> bytes) {
  Packet p = decode(bytes);
  if (auto* f = std::get_if<FeedbackPacket>(&p)) return *f;
  throw DecodeError("expected a feedback packet", 3);
}

}  // namespace teleop::transport
