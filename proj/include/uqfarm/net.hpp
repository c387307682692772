#pragma once

#include <optional>
#include <string>

namespace uqfarm {

// Minimal blocking TCP with newline-delimited text framing.
class LineSocket {
  public:
    LineSocket() = default;
    explicit LineSocket(int fd) : fd_(fd) {}
    LineSocket(LineSocket&& other) noexcept;
    LineSocket& operator=(LineSocket&& other) noexcept;
    LineSocket(const LineSocket&) = delete;
    LineSocket& operator=(const LineSocket&) = delete;
    ~LineSocket();

    bool valid() const { return fd_ >= 0; }
    void close();

    // Throws ConnectionLost on a broken stream.
    void write_line(const std::string& line);
    // nullopt on clean EOF.
    std::optional<std::string> read_line();

    static LineSocket connect_to(const std::string& host, int port);

  private:
    int fd_ = -1;
    std::string buffer_;
};

class Listener {
  public:
    Listener(const std::string& host, int port); // port 0 -> ephemeral
    ~Listener();
    Listener(const Listener&) = delete;
    Listener& operator=(const Listener&) = delete;

    int port() const { return port_; }
    // nullopt when the listener has been shut down.
    std::optional<LineSocket> accept_connection();
    void shutdown();

  private:
    int fd_ = -1;
    int port_ = 0;
};

} // namespace uqfarm
