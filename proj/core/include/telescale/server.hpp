#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>

#include "telescale/scenario.hpp"
#include "telescale/session.hpp"
#include "telescale/websocket.hpp"

namespace telescale {

struct ServerOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 8765;
    SessionOptions session;
    /// Outbound messages held for a slow client; frames are dropped oldest first.
    std::size_t outbound_capacity = 256;
    /// Status lines (connections, trial results) go here when set.
    std::ostream* status = nullptr;
};

/// Real-time transport counters of one session.
struct TransportStats {
    std::uint64_t messages_in = 0;
    std::uint64_t messages_out = 0;
    std::uint64_t frames_dropped = 0;
    /// Worst lateness of the tick loop against the wall clock.
    double max_tick_lag_ms = 0.0;
};

/// WebSocket front end for SessionCore. One operator session at a time; the
/// session thread owns the simulation and runs it at the scenario rate while
/// reader and writer threads move messages through queues.
class SessionServer {
public:
    SessionServer(Scenario scenario, ServerOptions options);
    ~SessionServer();
    SessionServer(const SessionServer&) = delete;
    SessionServer& operator=(const SessionServer&) = delete;

    /// Binds and starts accepting; returns once the port is open.
    void start();
    /// Bound port, useful when options.port was 0.
    std::uint16_t port() const;
    void stop();
    /// Blocks until stop() is called from elsewhere.
    void wait();

    std::uint64_t sessions_served() const { return sessions_.load(); }
    TransportStats last_stats() const;

private:
    void accept_loop();
    void run_session(int fd);

    Scenario scenario_;
    ServerOptions options_;
    std::unique_ptr<ws::Listener> listener_;
    std::thread acceptor_;
    std::atomic<bool> stopping_{false};
    std::atomic<std::uint64_t> sessions_{0};
    mutable std::mutex mutex_;
    ws::Connection* active_ = nullptr;
    TransportStats last_stats_;
};

}  // namespace telescale
