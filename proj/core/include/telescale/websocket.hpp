#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace telescale::ws {

/// Sec-WebSocket-Accept value for a client key (SHA-1, then base64).
std::string accept_key(std::string_view client_key);

/// Connection-level failure: bad handshake, protocol violation or socket error.
class WebSocketError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One RFC 6455 connection carrying text messages over a blocking socket.
/// send_text may be called from one thread while another blocks in receive.
class Connection {
public:
    Connection() = default;
    Connection(Connection&& other) noexcept;
    Connection& operator=(Connection&& other) noexcept;
    Connection(const Connection&) = delete;
    Connection& operator=(const Connection&) = delete;
    ~Connection();

    /// Server side: reads the HTTP upgrade request on an accepted socket and
    /// answers it. Takes ownership of fd.
    static Connection accept_upgrade(int fd);
    /// Client side: connects and performs the opening handshake.
    static Connection connect(const std::string& host, std::uint16_t port, const std::string& path = "/");

    /// Next complete text message; nullopt once the peer closed the connection.
    std::optional<std::string> receive();
    void send_text(std::string_view text);
    /// Sends a close frame; the socket stays open until destruction.
    void close(std::uint16_t code = 1000);
    /// Unblocks a concurrent receive().
    void shutdown();

    bool is_open() const { return fd_ >= 0; }

    static constexpr std::size_t kMaxMessage = 1 << 20;

private:
    Connection(int fd, bool client);
    void send_frame(std::uint8_t opcode, std::string_view payload);
    void read_exact(void* data, std::size_t size);
    void write_all(const void* data, std::size_t size);

    int fd_ = -1;
    bool client_ = false;
    bool close_sent_ = false;
    std::mutex write_mutex_;
};

/// Listening TCP socket. Port 0 binds an ephemeral port.
class Listener {
public:
    Listener(const std::string& host, std::uint16_t port);
    Listener(const Listener&) = delete;
    Listener& operator=(const Listener&) = delete;
    ~Listener();

    std::uint16_t port() const { return port_; }
    /// Blocks for the next connection; nullopt after close().
    std::optional<int> accept();
    void close();

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

}  // namespace telescale::ws
