#include "privmon/transport.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace privmon {

// ---- mailbox ---------------------------------------------------------------

Mailbox::Mailbox(unsigned senders, std::chrono::milliseconds timeout)
    : queues_(senders), closed_(senders), timeout_(timeout) {}

void Mailbox::deliver(PartyId from, std::vector<u8> frame) {
  {
    std::lock_guard lock(mu_);
    if (from >= queues_.size()) throw ProtocolError("message from unknown node " + std::to_string(from));
    queues_[from].push_back(std::move(frame));
  }
  cv_.notify_all();
}

std::vector<u8> Mailbox::take(PartyId from) {
  std::unique_lock lock(mu_);
  if (from >= queues_.size()) throw ProtocolError("no link to node " + std::to_string(from));
  auto& q = queues_[from];
  const bool ready = cv_.wait_for(lock, timeout_, [&] { return !q.empty() || !closed_[from].empty(); });
  if (!q.empty()) {
    auto f = std::move(q.front());
    q.pop_front();
    return f;
  }
  if (!ready) throw ProtocolError("timed out waiting for node " + std::to_string(from));
  throw ProtocolError(closed_[from]);
}

void Mailbox::close_sender(PartyId from, const std::string& why) {
  {
    std::lock_guard lock(mu_);
    if (from < closed_.size() && closed_[from].empty()) closed_[from] = why;
  }
  cv_.notify_all();
}

void Mailbox::close(const std::string& why) {
  {
    std::lock_guard lock(mu_);
    for (auto& c : closed_) {
      if (c.empty()) c = why;
    }
  }
  cv_.notify_all();
}

// ---- in-process hub --------------------------------------------------------

class InProcessHub::Local : public Endpoint {
 public:
  Local(InProcessHub& hub, PartyId id) : hub_(hub), id_(id) {}

  PartyId id() const override { return id_; }
  unsigned nodes() const override { return hub_.nodes(); }

  void send(PartyId to, const RoundMessage& m) override {
    if (to >= hub_.nodes() || to == id_) throw ProtocolError("bad destination " + std::to_string(to));
    auto frame = encode_frame(m);
    bytes_sent_ += frame.size();
    hub_.deliver(id_, to, std::move(frame));
  }

  RoundMessage recv(PartyId from) override { return decode_frame(hub_.boxes_[id_]->take(from)); }

 private:
  InProcessHub& hub_;
  PartyId id_;
};

InProcessHub::InProcessHub(unsigned nodes, std::chrono::milliseconds timeout)
    : watched_(nodes, false), observed_(nodes) {
  for (unsigned i = 0; i < nodes; ++i) {
    boxes_.push_back(std::make_unique<Mailbox>(nodes, timeout));
    endpoints_.push_back(std::make_unique<Local>(*this, i));
  }
}

InProcessHub::~InProcessHub() = default;

Endpoint& InProcessHub::endpoint(PartyId id) { return *endpoints_.at(id); }

void InProcessHub::watch(PartyId id) {
  std::lock_guard lock(watch_mu_);
  watched_.at(id) = true;
}

std::vector<ObservedMessage> InProcessHub::observed(PartyId id) const {
  std::lock_guard lock(watch_mu_);
  return observed_.at(id);
}

void InProcessHub::close(const std::string& why) {
  for (auto& b : boxes_) b->close(why);
}

void InProcessHub::deliver(PartyId from, PartyId to, std::vector<u8> frame) {
  {
    std::lock_guard lock(watch_mu_);
    if (watched_[to]) observed_[to].push_back({from, decode_frame(frame)});
  }
  boxes_[to]->deliver(from, std::move(frame));
}

// ---- TCP -------------------------------------------------------------------

namespace {

std::pair<std::string, std::string> split_address(const std::string& a) {
  auto colon = a.rfind(':');
  if (colon == std::string::npos) throw Error("address '" + a + "' lacks a port");
  return {a.substr(0, colon), a.substr(colon + 1)};
}

addrinfo* resolve(const std::string& address, bool passive) {
  auto [host, port] = split_address(address);
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const int rc = getaddrinfo(host.empty() ? nullptr : host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) throw Error("cannot resolve " + address + ": " + gai_strerror(rc));
  return res;
}

void write_all(int fd, const u8* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("send failed: ") + std::strerror(errno));
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

bool read_all(int fd, u8* data, std::size_t n) {
  while (n > 0) {
    const ssize_t r = ::recv(fd, data, n, 0);
    if (r == 0) return false;
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

void set_nodelay(int fd) {
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

TcpEndpoint::TcpEndpoint(PartyId self, std::vector<std::string> addresses, std::chrono::milliseconds timeout)
    : self_(self),
      addresses_(std::move(addresses)),
      fds_(addresses_.size(), -1),
      box_(static_cast<unsigned>(addresses_.size()), timeout) {
  const unsigned n = nodes();
  if (self_ >= n) throw Error("node id outside the address list");
  for (unsigned i = 0; i < n; ++i) write_mu_.push_back(std::make_unique<std::mutex>());

  int listener = -1;
  if (self_ + 1 < n) {
    addrinfo* res = resolve(addresses_[self_], true);
    listener = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    int one = 1;
    setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (listener < 0 || ::bind(listener, res->ai_addr, res->ai_addrlen) != 0 || ::listen(listener, 16) != 0) {
      freeaddrinfo(res);
      throw Error("cannot listen on " + addresses_[self_] + ": " + std::strerror(errno));
    }
    freeaddrinfo(res);
  }

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (PartyId j = 0; j < self_; ++j) {
    for (;;) {
      addrinfo* res = resolve(addresses_[j], false);
      const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
      const bool ok = fd >= 0 && ::connect(fd, res->ai_addr, res->ai_addrlen) == 0;
      freeaddrinfo(res);
      if (ok) {
        set_nodelay(fd);
        u8 hello[4];
        for (int b = 0; b < 4; ++b) hello[b] = static_cast<u8>(self_ >> (8 * b));
        write_all(fd, hello, 4);
        fds_[j] = fd;
        break;
      }
      if (fd >= 0) ::close(fd);
      if (std::chrono::steady_clock::now() > deadline) throw ProtocolError("cannot reach node " + std::to_string(j));
      std::this_thread::sleep_for(50ms);
    }
  }

  for (unsigned accepted = 0; accepted + self_ + 1 < n; ++accepted) {
    const int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) throw ProtocolError(std::string("accept failed: ") + std::strerror(errno));
    set_nodelay(fd);
    u8 hello[4];
    if (!read_all(fd, hello, 4)) throw ProtocolError("peer closed during handshake");
    u32 peer = 0;
    for (int b = 0; b < 4; ++b) peer |= u32{hello[b]} << (8 * b);
    if (peer <= self_ || peer >= n || fds_[peer] != -1) throw ProtocolError("unexpected peer id in handshake");
    fds_[peer] = fd;
  }
  if (listener >= 0) ::close(listener);

  for (PartyId j = 0; j < n; ++j) {
    if (j != self_) readers_.emplace_back(&TcpEndpoint::reader, this, j, fds_[j]);
  }
}

TcpEndpoint::~TcpEndpoint() {
  for (int fd : fds_) {
    if (fd >= 0) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& t : readers_) t.join();
  for (int fd : fds_) {
    if (fd >= 0) ::close(fd);
  }
}

void TcpEndpoint::reader(PartyId peer, int fd) {
  for (;;) {
    u8 prefix[4];
    if (!read_all(fd, prefix, 4)) break;
    const u32 len = u32{prefix[0]} | u32{prefix[1]} << 8 | u32{prefix[2]} << 16 | u32{prefix[3]} << 24;
    std::vector<u8> frame(4 + std::size_t{len});
    std::memcpy(frame.data(), prefix, 4);
    if (!read_all(fd, frame.data() + 4, len)) break;
    box_.deliver(peer, std::move(frame));
  }
  box_.close_sender(peer, "link to node " + std::to_string(peer) + " closed");
}

void TcpEndpoint::send(PartyId to, const RoundMessage& m) {
  if (to >= nodes() || to == self_) throw ProtocolError("bad destination " + std::to_string(to));
  const auto frame = encode_frame(m);
  std::lock_guard lock(*write_mu_[to]);
  write_all(fds_[to], frame.data(), frame.size());
  bytes_sent_ += frame.size();
}

RoundMessage TcpEndpoint::recv(PartyId from) { return decode_frame(box_.take(from)); }

}  // namespace privmon
