#include "sher/bridge.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "sher/errors.hpp"
#include "sher/session.hpp"
#include "sher/sim.hpp"

namespace sher {

namespace {

constexpr std::size_t kMaxLine = 64 * 1024;
constexpr std::size_t kMaxPending = 4 * 1024 * 1024;

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL, 0) | O_NONBLOCK); }

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

struct Client {
  int fd = -1;
  bool interactive = false;
  std::string in;
  std::string out;
};

}  // namespace

BridgeServer::BridgeServer(SimConfig cfg, BridgeOptions opts)
    : cfg_(std::move(cfg)), opts_(std::move(opts)) {
  cfg_.validate();
  if (!(opts_.snapshot_hz > 0.0)) {
    throw ConfigError("snapshot rate must be > 0");
  }
}

BridgeServer::~BridgeServer() {
  request_stop();
  wait();
  for (int fd : {listen_fd_, wake_pipe_[0], wake_pipe_[1]}) {
    if (fd >= 0) {
      ::close(fd);
    }
  }
}

void BridgeServer::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) {
    throw Error(sys_error("socket"));
  }
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(opts_.port);
  if (::inet_pton(AF_INET, opts_.host.c_str(), &addr.sin_addr) != 1) {
    throw ConfigError("bad listen address '" + opts_.host + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    throw Error(sys_error("bind " + opts_.host + ":" + std::to_string(opts_.port)));
  }
  if (::listen(listen_fd_, 8) < 0) {
    throw Error(sys_error("listen"));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  bound_port_ = ntohs(addr.sin_port);
  set_nonblocking(listen_fd_);
  if (::pipe(wake_pipe_) < 0) {
    throw Error(sys_error("pipe"));
  }
  set_nonblocking(wake_pipe_[0]);
  set_nonblocking(wake_pipe_[1]);

  stop_ = false;
  stopped_ = false;
  loop_thread_ = std::thread([this] { loop_main(); });
  net_thread_ = std::thread([this] { net_main(); });
}

void BridgeServer::request_stop() {
  stop_ = true;
  if (wake_pipe_[1] >= 0) {
    const char b = 1;
    [[maybe_unused]] const auto n = ::write(wake_pipe_[1], &b, 1);
  }
}

void BridgeServer::wait() {
  if (loop_thread_.joinable()) {
    loop_thread_.join();
  }
  request_stop();
  if (net_thread_.joinable()) {
    net_thread_.join();
  }
  stopped_ = true;
}

BridgeStats BridgeServer::stats() const {
  std::lock_guard lock(stats_mutex_);
  return stats_;
}

bool BridgeServer::push_event(Event e) {
  std::lock_guard lock(queue_mutex_);
  if (queue_.size() >= opts_.queue_capacity) {
    return false;
  }
  queue_.push_back(std::move(e));
  return true;
}

void BridgeServer::publish(std::string line) {
  {
    std::lock_guard lock(outbox_mutex_);
    outbox_.push_back(std::move(line));
  }
  const char b = 0;
  [[maybe_unused]] const auto n = ::write(wake_pipe_[1], &b, 1);
}

void BridgeServer::loop_main() {
  using clock = std::chrono::steady_clock;
  LiveSession session(cfg_);
  const double dt = cfg_.trial.dt;
  const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(dt));
  const bool replaying = opts_.replay.has_value();
  bool paused = !replaying;
  std::size_t replay_next = 0;
  std::uint64_t iteration = 0;
  std::size_t trial_count = 0;
  double max_jitter = 0.0;
  auto next = clock::now();

  try {
    while (!stop_) {
      if (opts_.realtime || paused) {
        std::this_thread::sleep_until(next);
        const double late = std::chrono::duration<double>(clock::now() - next).count();
        if (!paused) {
          max_jitter = std::max(max_jitter, late);
        }
        next += period;
        if (clock::now() - next > std::chrono::milliseconds(200)) {
          next = clock::now();  // resync after a stall instead of bursting
        }
      }

      if (replaying) {
        const std::vector<TimedCommand>& log = *opts_.replay;
        while (replay_next < log.size() && log[replay_next].tick <= session.ticks()) {
          session.apply(log[replay_next].cmd);
          ++replay_next;
        }
        if (replay_next >= log.size() && !session.trial_running()) {
          break;
        }
      } else {
        std::deque<Event> events;
        {
          std::lock_guard lock(queue_mutex_);
          events.swap(queue_);
        }
        for (Event& e : events) {
          switch (e.kind) {
            case Event::Connect:
              paused = false;
              break;
            case Event::Disconnect:
              session.apply(MasterVelocityCmd{});
              paused = true;
              break;
            case Event::Cmd:
              try {
                session.apply(e.cmd);
              } catch (const Error& err) {
                publish(error_message(err.what()));
              }
              break;
          }
        }
      }

      if (!paused) {
        session.tick();
        for (TrialRecord& rec : session.take_finished()) {
          ++trial_count;
          std::string file;
          if (opts_.out_dir) {
            const std::filesystem::path path =
                *opts_.out_dir / ("live" + std::to_string(trial_count) + "_" + trial_file_name(rec));
            try {
              write_csv_file(path, rec);
              file = path.string();
              std::lock_guard lock(stats_mutex_);
              stats_.trial_files.push_back(path);
            } catch (const Error& err) {
              publish(error_message(err.what()));
            }
          }
          publish(trial_complete_message(file, rec.summary.completed, rec.summary.completion_time,
                                         rec.summary.max_fs));
        }
      }

      const double before = std::floor(static_cast<double>(iteration) * opts_.snapshot_hz * dt);
      ++iteration;
      const double after = std::floor(static_cast<double>(iteration) * opts_.snapshot_hz * dt);
      if (after > before) {
        publish(serialize_snapshot(session.snapshot()));
      }
      {
        std::lock_guard lock(stats_mutex_);
        stats_.ticks = session.ticks();
        stats_.max_jitter = max_jitter;
        stats_.commands = session.command_log().size();
      }
    }
  } catch (const std::exception& e) {
    publish(error_message(std::string("simulation stopped: ") + e.what()));
  }

  publish(serialize_snapshot(session.snapshot()));
  if (opts_.command_log) {
    std::ofstream out(*opts_.command_log);
    write_command_log(out, session.command_log());
  }
  stop_ = true;
  const char b = 1;
  [[maybe_unused]] const auto n = ::write(wake_pipe_[1], &b, 1);
}

void BridgeServer::net_main() {
  std::vector<Client> clients;
  const bool replaying = opts_.replay.has_value();

  auto drop = [&](std::size_t i) {
    if (clients[i].interactive) {
      push_event({Event::Disconnect, {}});
    }
    ::close(clients[i].fd);
    clients.erase(clients.begin() + static_cast<std::ptrdiff_t>(i));
  };
  auto send_line = [](Client& c, const std::string& line) {
    if (c.out.size() + line.size() < kMaxPending) {
      c.out += line;
      c.out += '\n';
    }
  };

  for (;;) {
    std::vector<pollfd> fds;
    fds.push_back({wake_pipe_[0], POLLIN, 0});
    fds.push_back({listen_fd_, POLLIN, 0});
    for (const Client& c : clients) {
      fds.push_back({c.fd, static_cast<short>(POLLIN | (c.out.empty() ? 0 : POLLOUT)), 0});
    }
    ::poll(fds.data(), fds.size(), 50);

    if (fds[0].revents & POLLIN) {
      char buf[256];
      while (::read(wake_pipe_[0], buf, sizeof buf) > 0) {
      }
    }
    std::vector<std::string> lines;
    {
      std::lock_guard lock(outbox_mutex_);
      lines.swap(outbox_);
    }
    for (Client& c : clients) {
      for (const std::string& l : lines) {
        send_line(c, l);
      }
    }

    if (fds[1].revents & POLLIN) {
      for (;;) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
          break;
        }
        set_nonblocking(fd);
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        Client c;
        c.fd = fd;
        c.interactive = !replaying && std::none_of(clients.begin(), clients.end(),
                                                   [](const Client& x) { return x.interactive; });
        send_line(c, hello_message(c.interactive));
        if (c.interactive) {
          push_event({Event::Connect, {}});
        }
        clients.push_back(std::move(c));
      }
    }

    // Client sockets start at fds[2]; iterate backwards so drops keep indices.
    for (std::size_t k = clients.size(); k-- > 0;) {
      const short rev = k + 2 < fds.size() && fds[k + 2].fd == clients[k].fd ? fds[k + 2].revents : 0;
      Client& c = clients[k];
      bool dead = (rev & (POLLERR | POLLNVAL)) != 0;
      if (!dead && (rev & (POLLIN | POLLHUP))) {
        char buf[4096];
        for (;;) {
          const ssize_t n = ::recv(c.fd, buf, sizeof buf, 0);
          if (n > 0) {
            c.in.append(buf, static_cast<std::size_t>(n));
            continue;
          }
          if (n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK)) {
            dead = true;
          }
          break;
        }
        std::size_t pos;
        while ((pos = c.in.find('\n')) != std::string::npos) {
          std::string line = c.in.substr(0, pos);
          c.in.erase(0, pos + 1);
          if (!line.empty() && line.back() == '\r') {
            line.pop_back();
          }
          if (line.empty()) {
            continue;
          }
          const auto j = nlohmann::json::parse(line, nullptr, false);
          if (j.is_object() && j.value("type", "") == "hello") {
            if (j.value("protocol_version", -1) != kProtocolVersion) {
              send_line(c, error_message("unsupported protocol_version; server speaks " +
                                         std::to_string(kProtocolVersion)));
            }
            continue;
          }
          try {
            Command cmd = parse_command(line);
            if (!c.interactive) {
              send_line(c, error_message("read-only connection"));
            } else if (!push_event({Event::Cmd, std::move(cmd)})) {
              send_line(c, error_message("command queue full"));
            }
          } catch (const ProtocolError& e) {
            send_line(c, error_message(e.what()));
          }
        }
        if (c.in.size() > kMaxLine) {
          send_line(c, error_message("line too long"));
          c.in.clear();
        }
      }
      if (!dead && !c.out.empty()) {
        const ssize_t n = ::send(c.fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
        if (n > 0) {
          c.out.erase(0, static_cast<std::size_t>(n));
        } else if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK) {
          dead = true;
        }
      }
      if (dead) {
        drop(k);
      }
    }

    if (stop_) {
      // Flush what is queued, then close.
      std::vector<std::string> rest;
      {
        std::lock_guard lock(outbox_mutex_);
        rest.swap(outbox_);
      }
      for (Client& c : clients) {
        for (const std::string& l : rest) {
          send_line(c, l);
        }
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(500);
        while (!c.out.empty() && std::chrono::steady_clock::now() < deadline) {
          const ssize_t n = ::send(c.fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
          if (n > 0) {
            c.out.erase(0, static_cast<std::size_t>(n));
          } else if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK) {
            break;
          } else {
            std::this_thread::sleep_for(std::chrono::milliseconds(1));
          }
        }
        ::close(c.fd);
      }
      return;
    }
  }
}

}  // namespace sher
