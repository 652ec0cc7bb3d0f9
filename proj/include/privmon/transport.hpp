#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "privmon/wire.hpp"

namespace privmon {

using namespace std::chrono_literals;

// One node's view of the network: the System (id 0) or a monitor party.
// Delivery is reliable and FIFO per sender.
class Endpoint {
 public:
  virtual ~Endpoint() = default;

  virtual PartyId id() const = 0;
  // Number of nodes including the System.
  virtual unsigned nodes() const = 0;
  virtual void send(PartyId to, const RoundMessage& m) = 0;
  // Blocks until the next message from `from` arrives. Throws ProtocolError
  // on timeout or when the endpoint has been closed.
  virtual RoundMessage recv(PartyId from) = 0;

  u64 bytes_sent() const { return bytes_sent_.load(); }

 protected:
  std::atomic<u64> bytes_sent_{0};
};

// Per-sender frame queues for one receiving node.
class Mailbox {
 public:
  Mailbox(unsigned senders, std::chrono::milliseconds timeout);

  void deliver(PartyId from, std::vector<u8> frame);
  std::vector<u8> take(PartyId from);
  // Takes from a closed sender fail once its queue is drained.
  void close_sender(PartyId from, const std::string& why);
  void close(const std::string& why);

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::deque<std::vector<u8>>> queues_;
  std::vector<std::string> closed_;  // non-empty reason once closed
  std::chrono::milliseconds timeout_;
};

struct ObservedMessage {
  PartyId from;
  RoundMessage message;
};

// Lossless in-memory network. Messages are still framed and parsed so byte
// counts match the TCP transport.
class InProcessHub {
 public:
  explicit InProcessHub(unsigned nodes, std::chrono::milliseconds timeout = 60s);
  ~InProcessHub();

  Endpoint& endpoint(PartyId id);
  unsigned nodes() const { return static_cast<unsigned>(endpoints_.size()); }

  // Records every message delivered to `id` from now on.
  void watch(PartyId id);
  std::vector<ObservedMessage> observed(PartyId id) const;

  void close(const std::string& why);

 private:
  class Local;
  friend class Local;
  void deliver(PartyId from, PartyId to, std::vector<u8> frame);

  std::vector<std::unique_ptr<Mailbox>> boxes_;
  std::vector<std::unique_ptr<Local>> endpoints_;
  mutable std::mutex watch_mu_;
  std::vector<bool> watched_;
  std::vector<std::vector<ObservedMessage>> observed_;
};

// Full mesh over TCP. Node i dials every node with a lower id and accepts
// connections from every higher id; each link starts with the dialer's id.
class TcpEndpoint : public Endpoint {
 public:
  // addresses[j] is "host:port" for node j.
  TcpEndpoint(PartyId self, std::vector<std::string> addresses, std::chrono::milliseconds timeout = 60s);
  ~TcpEndpoint() override;

  PartyId id() const override { return self_; }
  unsigned nodes() const override { return static_cast<unsigned>(addresses_.size()); }
  void send(PartyId to, const RoundMessage& m) override;
  RoundMessage recv(PartyId from) override;

 private:
  void reader(PartyId peer, int fd);

  PartyId self_;
  std::vector<std::string> addresses_;
  std::vector<int> fds_;
  std::vector<std::unique_ptr<std::mutex>> write_mu_;
  Mailbox box_;
  std::vector<std::thread> readers_;
};

}  // namespace privmon
