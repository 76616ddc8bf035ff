#include "telescale/server.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <optional>
#include <variant>

#include "telescale/error.hpp"

namespace telescale {
namespace {

using Clock = std::chrono::steady_clock;

struct Disconnected {};

/// Inbound text messages from the reader thread.
class InboundQueue {
public:
    void push(std::variant<std::string, Disconnected> item) {
        std::lock_guard lock(mutex_);
        items_.push_back(std::move(item));
    }

    std::deque<std::variant<std::string, Disconnected>> drain() {
        std::lock_guard lock(mutex_);
        return std::exchange(items_, {});
    }

private:
    std::mutex mutex_;
    std::deque<std::variant<std::string, Disconnected>> items_;
};

/// Outbound messages for the writer thread. Never blocks the producer; when
/// full, the oldest frame (or, failing that, the oldest message) is dropped.
class OutboundQueue {
public:
    explicit OutboundQueue(std::size_t capacity) : capacity_(capacity) {}

    std::uint64_t push(WireMessage message) {
        std::uint64_t dropped = 0;
        {
            std::lock_guard lock(mutex_);
            while (items_.size() >= capacity_ && !items_.empty()) {
                auto it = std::find_if(items_.begin(), items_.end(),
                                       [](const WireMessage& m) { return m.type == MessageType::Frame; });
                items_.erase(it != items_.end() ? it : items_.begin());
                ++dropped;
            }
            items_.push_back(std::move(message));
        }
        ready_.notify_one();
        return dropped;
    }

    std::optional<WireMessage> pop() {
        std::unique_lock lock(mutex_);
        ready_.wait(lock, [&] { return closed_ || !items_.empty(); });
        if (items_.empty()) return std::nullopt;
        WireMessage m = std::move(items_.front());
        items_.pop_front();
        return m;
    }

    /// Lets the writer finish what is queued, then stop.
    void close() {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        ready_.notify_all();
    }

private:
    std::size_t capacity_;
    std::mutex mutex_;
    std::condition_variable ready_;
    std::deque<WireMessage> items_;
    bool closed_ = false;
};

}  // namespace

SessionServer::SessionServer(Scenario scenario, ServerOptions options)
    : scenario_(std::move(scenario)), options_(std::move(options)) {
    scenario_.validate();
    if (options_.outbound_capacity == 0) throw ConfigError("outbound capacity must be positive");
}

SessionServer::~SessionServer() { stop(); }

void SessionServer::start() {
    listener_ = std::make_unique<ws::Listener>(options_.host, options_.port);
    acceptor_ = std::thread([this] { accept_loop(); });
    if (options_.status) {
        *options_.status << "listening on ws://" << options_.host << ':' << listener_->port() << '/' << std::endl;
    }
}

std::uint16_t SessionServer::port() const { return listener_ ? listener_->port() : 0; }

void SessionServer::stop() {
    if (stopping_.exchange(true)) {
        if (acceptor_.joinable()) acceptor_.join();
        return;
    }
    if (listener_) listener_->close();
    {
        std::lock_guard lock(mutex_);
        if (active_) active_->shutdown();
    }
    if (acceptor_.joinable()) acceptor_.join();
}

void SessionServer::wait() {
    if (acceptor_.joinable()) acceptor_.join();
}

TransportStats SessionServer::last_stats() const {
    std::lock_guard lock(mutex_);
    return last_stats_;
}

void SessionServer::accept_loop() {
    while (!stopping_) {
        const auto fd = listener_->accept();
        if (!fd) break;
        if (stopping_) {
            ::close(*fd);
            break;
        }
        try {
            run_session(*fd);
        } catch (const std::exception& e) {
            if (options_.status) *options_.status << "session failed: " << e.what() << std::endl;
        }
    }
}

void SessionServer::run_session(int fd) {
    ws::Connection conn = ws::Connection::accept_upgrade(fd);
    const std::uint64_t number = ++sessions_;
    {
        std::lock_guard lock(mutex_);
        active_ = &conn;
    }
    if (options_.status) *options_.status << "session " << number << " connected" << std::endl;

    SessionOptions session_options = options_.session;
    session_options.session_id = session_options.session_id + "-" + std::to_string(number);
    SessionCore core(scenario_, session_options);
    TransportStats stats;

    InboundQueue inbound;
    OutboundQueue outbound(options_.outbound_capacity);
    std::thread reader([&] {
        try {
            while (auto text = conn.receive()) inbound.push(std::move(*text));
        } catch (const std::exception&) {
        }
        inbound.push(Disconnected{});
    });
    std::atomic<bool> writer_failed{false};
    std::thread writer([&] {
        while (auto m = outbound.pop()) {
            if (writer_failed) continue;
            try {
                conn.send_text(encode(*m));
            } catch (const std::exception&) {
                writer_failed = true;
                conn.shutdown();
            }
        }
    });

    auto send = [&](std::vector<WireMessage> messages) {
        for (auto& m : messages) {
            if (m.type == MessageType::TrialDone) {
                m.payload["transport"] = {{"messages_in", stats.messages_in},
                                          {"messages_out", stats.messages_out},
                                          {"frames_dropped", stats.frames_dropped},
                                          {"max_tick_lag_ms", stats.max_tick_lag_ms}};
                if (options_.status) {
                    *options_.status << "session " << number << " trial done: weighted error "
                                     << m.payload["record"]["weighted_error"] << ", time "
                                     << m.payload["record"]["completion_time_s"] << " s" << std::endl;
                }
            }
            ++stats.messages_out;
            stats.frames_dropped += outbound.push(std::move(m));
        }
    };

    bool connected = true;
    auto next = Clock::now();
    while (connected && !stopping_) {
        for (auto& item : inbound.drain()) {
            if (std::holds_alternative<Disconnected>(item)) {
                connected = false;
                break;
            }
            ++stats.messages_in;
            const auto& text = std::get<std::string>(item);
            try {
                send(core.receive(decode(text)));
            } catch (const ProtocolError& e) {
                send(core.reject(e.what()));
            }
        }
        if (!connected) break;
        // A configure may change the rate, so the period is read every tick.
        const auto period =
            std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(core.scenario().clock().dt()));
        send(core.tick());

        next += period;
        const auto now = Clock::now();
        if (now < next) {
            std::this_thread::sleep_until(next);
        } else {
            const double lag = std::chrono::duration<double, std::milli>(now - next).count();
            if (core.state() == SessionCore::State::Running) stats.max_tick_lag_ms = std::max(stats.max_tick_lag_ms, lag);
            // Idle sessions do not accumulate a backlog of ticks.
            if (core.state() != SessionCore::State::Running) next = now;
        }
    }

    core.disconnect();
    if (auto path = core.last_log_path(); path && options_.status) {
        *options_.status << "session " << number << " log: " << path->string() << std::endl;
    }
    outbound.close();
    writer.join();
    conn.close();
    conn.shutdown();
    reader.join();
    {
        std::lock_guard lock(mutex_);
        active_ = nullptr;
        last_stats_ = stats;
    }
    if (options_.status) *options_.status << "session " << number << " closed" << std::endl;
}

}  // namespace telescale
