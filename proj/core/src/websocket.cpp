#include "telescale/websocket.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <random>
#include <utility>
#include <vector>

#include <openssl/evp.h>

namespace telescale::ws {
namespace {

constexpr std::string_view kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
constexpr std::size_t kMaxHeader = 8192;

enum Opcode : std::uint8_t { Continuation = 0x0, Text = 0x1, Binary = 0x2, Close = 0x8, Ping = 0x9, Pong = 0xA };

std::string base64(const unsigned char* data, std::size_t size) {
    std::string out(4 * ((size + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data, static_cast<int>(size));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

/// Reads an HTTP head up to and including the blank line.
std::string read_head(int fd) {
    std::string head;
    char c = 0;
    while (head.size() < kMaxHeader) {
        const ssize_t n = ::recv(fd, &c, 1, 0);
        if (n <= 0) throw WebSocketError("connection closed during handshake");
        head.push_back(c);
        if (head.size() >= 4 && head.compare(head.size() - 4, 4, "\r\n\r\n") == 0) return head;
    }
    throw WebSocketError("handshake header too large");
}

/// Header fields keyed by lower-case name; the first line is returned separately.
std::pair<std::string, std::vector<std::pair<std::string, std::string>>> parse_head(const std::string& head) {
    std::vector<std::pair<std::string, std::string>> fields;
    std::size_t pos = head.find("\r\n");
    const std::string first = head.substr(0, pos);
    while (pos != std::string::npos && pos + 2 < head.size()) {
        const std::size_t next = head.find("\r\n", pos + 2);
        const std::string line = head.substr(pos + 2, next - pos - 2);
        pos = next;
        if (line.empty()) break;
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        fields.emplace_back(lower(trim(line.substr(0, colon))), trim(line.substr(colon + 1)));
    }
    return {first, fields};
}

std::optional<std::string> field(const std::vector<std::pair<std::string, std::string>>& fields,
                                 std::string_view name) {
    for (const auto& [k, v] : fields) {
        if (k == name) return v;
    }
    return std::nullopt;
}

void send_raw(int fd, std::string_view text) {
    std::size_t sent = 0;
    while (sent < text.size()) {
        const ssize_t n = ::send(fd, text.data() + sent, text.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) {
            if (n < 0 && errno == EINTR) continue;
            throw WebSocketError("send failed");
        }
        sent += static_cast<std::size_t>(n);
    }
}

}  // namespace

std::string accept_key(std::string_view client_key) {
    const std::string input = std::string(client_key) + std::string(kGuid);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int size = 0;
    if (EVP_Digest(input.data(), input.size(), digest.data(), &size, EVP_sha1(), nullptr) != 1) {
        throw WebSocketError("SHA-1 digest failed");
    }
    return base64(digest.data(), size);
}

Connection::Connection(int fd, bool client) : fd_(fd), client_(client) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

Connection::Connection(Connection&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), client_(other.client_), close_sent_(other.close_sent_) {}

Connection& Connection::operator=(Connection&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        fd_ = std::exchange(other.fd_, -1);
        client_ = other.client_;
        close_sent_ = other.close_sent_;
    }
    return *this;
}

Connection::~Connection() {
    if (fd_ >= 0) ::close(fd_);
}

Connection Connection::accept_upgrade(int fd) {
    Connection conn(fd, false);
    const auto [request, fields] = parse_head(read_head(fd));
    const auto key = field(fields, "sec-websocket-key");
    const auto upgrade = field(fields, "upgrade");
    if (request.rfind("GET ", 0) != 0 || !key || !upgrade || lower(*upgrade) != "websocket") {
        send_raw(fd, "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\nConnection: close\r\n\r\n");
        throw WebSocketError("not a WebSocket upgrade request");
    }
    send_raw(fd, "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                 "Sec-WebSocket-Accept: " + accept_key(*key) + "\r\n\r\n");
    return conn;
}

Connection Connection::connect(const std::string& host, std::uint16_t port, const std::string& path) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &found) != 0 || !found) {
        throw WebSocketError("cannot resolve " + host);
    }
    int fd = -1;
    for (addrinfo* a = found; a; a = a->ai_next) {
        fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(found);
    if (fd < 0) throw WebSocketError("cannot connect to " + host + ":" + std::to_string(port));
    Connection conn(fd, true);

    std::random_device rd;
    std::array<unsigned char, 16> nonce{};
    for (auto& b : nonce) b = static_cast<unsigned char>(rd());
    const std::string key = base64(nonce.data(), nonce.size());
    send_raw(fd, "GET " + path + " HTTP/1.1\r\nHost: " + host + ":" + std::to_string(port) +
                     "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Key: " + key +
                     "\r\nSec-WebSocket-Version: 13\r\n\r\n");
    const auto [status, fields] = parse_head(read_head(fd));
    if (status.find(" 101") == std::string::npos) throw WebSocketError("upgrade refused: " + status);
    if (field(fields, "sec-websocket-accept") != accept_key(key)) throw WebSocketError("bad Sec-WebSocket-Accept");
    return conn;
}

void Connection::read_exact(void* data, std::size_t size) {
    auto* p = static_cast<unsigned char*>(data);
    std::size_t got = 0;
    while (got < size) {
        const ssize_t n = ::recv(fd_, p + got, size - got, 0);
        if (n == 0) throw WebSocketError("connection closed");
        if (n < 0) {
            if (errno == EINTR) continue;
            throw WebSocketError("receive failed");
        }
        got += static_cast<std::size_t>(n);
    }
}

void Connection::write_all(const void* data, std::size_t size) {
    send_raw(fd_, std::string_view(static_cast<const char*>(data), size));
}

void Connection::send_frame(std::uint8_t opcode, std::string_view payload) {
    std::lock_guard lock(write_mutex_);
    if (fd_ < 0) throw WebSocketError("connection is closed");
    std::vector<unsigned char> frame;
    frame.reserve(payload.size() + 14);
    frame.push_back(static_cast<unsigned char>(0x80 | opcode));
    const unsigned char mask_bit = client_ ? 0x80 : 0x00;
    const std::uint64_t n = payload.size();
    if (n < 126) {
        frame.push_back(static_cast<unsigned char>(mask_bit | n));
    } else if (n <= 0xFFFF) {
        frame.push_back(mask_bit | 126);
        frame.push_back(static_cast<unsigned char>(n >> 8));
        frame.push_back(static_cast<unsigned char>(n));
    } else {
        frame.push_back(mask_bit | 127);
        for (int i = 7; i >= 0; --i) frame.push_back(static_cast<unsigned char>(n >> (8 * i)));
    }
    if (client_) {
        thread_local std::mt19937 rng{std::random_device{}()};
        std::array<unsigned char, 4> mask{};
        for (auto& b : mask) b = static_cast<unsigned char>(rng());
        frame.insert(frame.end(), mask.begin(), mask.end());
        for (std::size_t i = 0; i < payload.size(); ++i) {
            frame.push_back(static_cast<unsigned char>(payload[i]) ^ mask[i % 4]);
        }
    } else {
        frame.insert(frame.end(), payload.begin(), payload.end());
    }
    write_all(frame.data(), frame.size());
}

std::optional<std::string> Connection::receive() {
    std::string message;
    bool in_message = false;
    try {
        while (true) {
            std::array<unsigned char, 2> head{};
            read_exact(head.data(), 2);
            const bool fin = head[0] & 0x80;
            const std::uint8_t opcode = head[0] & 0x0F;
            const bool masked = head[1] & 0x80;
            std::uint64_t size = head[1] & 0x7F;
            if (size == 126) {
                std::array<unsigned char, 2> ext{};
                read_exact(ext.data(), 2);
                size = (std::uint64_t{ext[0]} << 8) | ext[1];
            } else if (size == 127) {
                std::array<unsigned char, 8> ext{};
                read_exact(ext.data(), 8);
                size = 0;
                for (unsigned char b : ext) size = (size << 8) | b;
            }
            if (masked == client_) throw WebSocketError(client_ ? "server frames must not be masked"
                                                                : "client frames must be masked");
            if (size > kMaxMessage || message.size() + size > kMaxMessage) {
                close(1009);
                throw WebSocketError("message too large");
            }
            std::array<unsigned char, 4> mask{};
            if (masked) read_exact(mask.data(), 4);
            std::string payload(size, '\0');
            if (size > 0) read_exact(payload.data(), size);
            if (masked) {
                for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<char>(payload[i] ^ mask[i % 4]);
            }

            switch (opcode) {
                case Ping: send_frame(Pong, payload); break;
                case Pong: break;
                case Close: {
                    bool reply = false;
                    {
                        std::lock_guard lock(write_mutex_);
                        reply = !close_sent_;
                        close_sent_ = true;
                    }
                    if (reply) {
                        try {
                            send_frame(Close, payload.substr(0, 2));
                        } catch (const WebSocketError&) {
                        }
                    }
                    return std::nullopt;
                }
                case Text:
                case Binary:
                    if (in_message) throw WebSocketError("new message inside a fragmented one");
                    message = std::move(payload);
                    in_message = !fin;
                    if (fin) return message;
                    break;
                case Continuation:
                    if (!in_message) throw WebSocketError("continuation without a message");
                    message += payload;
                    if (fin) return message;
                    break;
                default: throw WebSocketError("unknown opcode");
            }
        }
    } catch (const WebSocketError&) {
        // A peer that closed after our close frame ends the stream normally.
        if (close_sent_) return std::nullopt;
        throw;
    }
}

void Connection::send_text(std::string_view text) { send_frame(Text, text); }

void Connection::close(std::uint16_t code) {
    {
        std::lock_guard lock(write_mutex_);
        if (close_sent_ || fd_ < 0) return;
        close_sent_ = true;
    }
    const char payload[2] = {static_cast<char>(code >> 8), static_cast<char>(code & 0xFF)};
    try {
        send_frame(Close, std::string_view(payload, 2));
    } catch (const WebSocketError&) {
    }
}

void Connection::shutdown() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Listener::Listener(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* found = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &found) != 0 || !found) {
        throw WebSocketError("cannot resolve " + host);
    }
    for (addrinfo* a = found; a; a = a->ai_next) {
        fd_ = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (fd_ < 0) continue;
        int one = 1;
        ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(fd_, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd_, 4) == 0) break;
        ::close(fd_);
        fd_ = -1;
    }
    ::freeaddrinfo(found);
    if (fd_ < 0) throw WebSocketError("cannot listen on " + host + ":" + std::to_string(port) + ": " +
                                      std::strerror(errno));
    sockaddr_storage addr{};
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    if (addr.ss_family == AF_INET) {
        port_ = ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
    } else {
        port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
    }
}

Listener::~Listener() {
    if (fd_ >= 0) ::close(fd_);
}

std::optional<int> Listener::accept() {
    while (fd_ >= 0) {
        const int fd = ::accept(fd_, nullptr, nullptr);
        if (fd >= 0) return fd;
        if (errno != EINTR && errno != ECONNABORTED) return std::nullopt;
    }
    return std::nullopt;
}

void Listener::close() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

}  // namespace telescale::ws
