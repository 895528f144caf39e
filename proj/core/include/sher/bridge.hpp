#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sher/config.hpp"
#include "sher/protocol.hpp"

namespace sher {

struct BridgeOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 7878;  // 0 picks an ephemeral port
  double snapshot_hz = 60.0;
  bool realtime = true;  // pace the loop at dt of wall-clock time
  std::optional<std::filesystem::path> out_dir;      // per-trial CSVs
  std::optional<std::filesystem::path> command_log;  // JSONL of applied commands
  // When set, commands come from this log instead of the network; every
  // client is read-only and the server stops once the log is played out.
  std::optional<std::vector<TimedCommand>> replay;
  std::size_t queue_capacity = 1024;
};

struct BridgeStats {
  std::uint64_t ticks = 0;
  double max_jitter = 0.0;  // s, worst lateness of a realtime tick
  std::size_t commands = 0;
  std::vector<std::filesystem::path> trial_files;
};

/// Live teleoperation service over TCP. One JSON object per line in both
/// directions; the server greets with {"type":"hello","protocol_version":1,
/// "role":...}. The first connection is interactive, later ones read-only.
/// A dedicated worker owns the LiveSession; the network thread only parses
/// and queues commands and forwards published messages. The session is paused
/// while no interactive client is connected, and a disconnect injects a zero
/// master velocity before pausing.
class BridgeServer {
 public:
  BridgeServer(SimConfig cfg, BridgeOptions opts);
  ~BridgeServer();
  BridgeServer(const BridgeServer&) = delete;
  BridgeServer& operator=(const BridgeServer&) = delete;

  // Binds and spawns the worker threads. Throws Error if the endpoint cannot
  // be bound.
  void start();
  [[nodiscard]] std::uint16_t port() const { return bound_port_; }
  void request_stop();
  // Blocks until the server stops (request_stop, or the replay finished).
  void wait();
  // False once the loop has stopped (request_stop, fatal error or replay end).
  [[nodiscard]] bool running() const { return !stop_.load(); }
  [[nodiscard]] BridgeStats stats() const;

 private:
  struct Event {
    enum Kind : std::uint8_t { Connect, Disconnect, Cmd } kind = Cmd;
    Command cmd;
  };

  void loop_main();
  void net_main();
  void publish(std::string line);
  bool push_event(Event e);

  SimConfig cfg_;
  BridgeOptions opts_;
  int listen_fd_ = -1;
  int wake_pipe_[2] = {-1, -1};
  std::uint16_t bound_port_ = 0;

  std::atomic<bool> stop_{false};
  std::atomic<bool> stopped_{true};
  std::thread loop_thread_;
  std::thread net_thread_;

  std::mutex queue_mutex_;
  std::deque<Event> queue_;

  std::mutex outbox_mutex_;
  std::vector<std::string> outbox_;

  mutable std::mutex stats_mutex_;
  BridgeStats stats_;
};

}  // namespace sher
