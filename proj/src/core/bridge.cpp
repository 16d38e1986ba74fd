#include "ihi/bridge.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <climits>
#include <cstring>

#include "ihi/error.hpp"
#include "ihi/io.hpp"

namespace ihi {

namespace {

using Clock = std::chrono::steady_clock;

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::byte* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

// Remaining poll budget; -1 waits forever.
int remaining_ms(Clock::time_point deadline, bool infinite) {
  if (infinite) return -1;
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return static_cast<int>(std::max<std::int64_t>(0, left.count()));
}

void wait_ready(int fd, short events, Clock::time_point deadline, bool infinite) {
  for (;;) {
    pollfd p{fd, events, 0};
    const int r = ::poll(&p, 1, remaining_ms(deadline, infinite));
    if (r > 0) return;
    if (r == 0) fail(Errc::bridge_timeout, "external prior did not answer in time", "bridge");
    if (errno != EINTR) fail(Errc::bridge_protocol, std::string("poll failed: ") + std::strerror(errno), "bridge");
  }
}

std::string stage_field(std::size_t stage) { return "stage " + std::to_string(stage); }

}  // namespace

std::vector<std::byte> encode_frame(std::span<const std::byte> payload, std::uint16_t stage) {
  require(payload.size() <= kMaxBridgePayload, Errc::bridge_protocol, "payload too large",
          "length");
  std::vector<std::byte> out;
  out.reserve(kBridgeHeaderBytes + payload.size() + 2);
  for (char c : kBridgeMagic) out.push_back(static_cast<std::byte>(c));
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  out.push_back(static_cast<std::byte>(stage & 0xff));
  out.push_back(static_cast<std::byte>(stage >> 8));
  return out;
}

BridgeChannel::~BridgeChannel() {
  if (!owned_) return;
  if (read_fd_ >= 0) ::close(read_fd_);
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
}

void BridgeChannel::write_all(std::span<const std::byte> bytes, std::chrono::milliseconds timeout) {
  const bool infinite = timeout.count() < 0;
  const auto deadline = Clock::now() + timeout;
  std::size_t done = 0;
  while (done < bytes.size()) {
    wait_ready(write_fd_, POLLOUT, deadline, infinite);
    ssize_t n = ::send(write_fd_, bytes.data() + done, bytes.size() - done,
                       MSG_NOSIGNAL | MSG_DONTWAIT);
    // Pipes only guarantee PIPE_BUF bytes after POLLOUT.
    if (n < 0 && errno == ENOTSOCK)
      n = ::write(write_fd_, bytes.data() + done, std::min<std::size_t>(bytes.size() - done, PIPE_BUF));
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail(Errc::bridge_protocol, std::string("write failed: ") + std::strerror(errno), "bridge");
    }
    done += static_cast<std::size_t>(n);
  }
}

void BridgeChannel::read_exact(std::span<std::byte> out, std::chrono::milliseconds timeout) {
  const bool infinite = timeout.count() < 0;
  const auto deadline = Clock::now() + timeout;
  std::size_t done = 0;
  while (done < out.size()) {
    wait_ready(read_fd_, POLLIN, deadline, infinite);
    const ssize_t n = ::read(read_fd_, out.data() + done, out.size() - done);
    if (n == 0) fail(Errc::bridge_protocol, "peer closed the connection", "bridge");
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail(Errc::bridge_protocol, std::string("read failed: ") + std::strerror(errno), "bridge");
    }
    done += static_cast<std::size_t>(n);
  }
}

BridgeFrame BridgeChannel::read_frame(std::chrono::milliseconds timeout) {
  BridgeFrame frame;
  if (!try_read_frame(frame, timeout))
    fail(Errc::bridge_protocol, "peer closed the connection", "bridge");
  return frame;
}

bool BridgeChannel::try_read_frame(BridgeFrame& frame, std::chrono::milliseconds timeout) {
  std::byte header[kBridgeHeaderBytes];
  {
    const bool infinite = timeout.count() < 0;
    wait_ready(read_fd_, POLLIN, Clock::now() + timeout, infinite);
    const ssize_t n = ::read(read_fd_, header, 1);
    if (n == 0) return false;
    if (n < 0) fail(Errc::bridge_protocol, std::string("read failed: ") + std::strerror(errno), "bridge");
  }
  read_exact({header + 1, kBridgeHeaderBytes - 1}, timeout);
  if (std::memcmp(header, kBridgeMagic, 4) != 0)
    fail(Errc::bridge_protocol, "bad frame magic", "magic");
  const std::uint32_t length = get_u32(header + 4);
  if (length > kMaxBridgePayload) fail(Errc::bridge_protocol, "payload too large", "length");
  frame.payload.resize(length);
  read_exact(frame.payload, timeout);
  std::byte stage[2];
  read_exact(stage, timeout);
  frame.stage = static_cast<std::uint16_t>(static_cast<unsigned>(stage[0]) |
                                           (static_cast<unsigned>(stage[1]) << 8));
  return true;
}

BridgeEndpoint BridgeEndpoint::from_json(const nlohmann::json& j) {
  BridgeEndpoint e;
  e.command = j.value("command", std::string());
  e.host = j.value("host", std::string("127.0.0.1"));
  e.port = j.value("port", 0);
  e.timeout = std::chrono::milliseconds(j.value("timeout_ms", 10000));
  require(!e.command.empty() || (e.port > 0 && e.port < 65536), Errc::invalid_argument,
          "external prior needs a command or a TCP port", "endpoint");
  require(e.timeout.count() > 0, Errc::invalid_argument, "must be positive", "timeout_ms");
  return e;
}

nlohmann::json BridgeEndpoint::to_json() const {
  nlohmann::json j = {{"timeout_ms", timeout.count()}};
  if (!command.empty()) j["command"] = command;
  else {
    j["host"] = host;
    j["port"] = port;
  }
  return j;
}

ExternalPrior::ExternalPrior(BridgeEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

ExternalPrior::~ExternalPrior() { close(); }

nlohmann::json ExternalPrior::describe() const {
  nlohmann::json j = endpoint_.to_json();
  j["id"] = id();
  return j;
}

void ExternalPrior::connect() {
  if (channel_) return;
  if (!endpoint_.command.empty()) {
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
      fail(Errc::prior_failure, std::string("socketpair: ") + std::strerror(errno), "bridge");
    const pid_t pid = ::fork();
    if (pid < 0) {
      ::close(sv[0]);
      ::close(sv[1]);
      fail(Errc::prior_failure, std::string("fork: ") + std::strerror(errno), "bridge");
    }
    if (pid == 0) {
      ::setpgid(0, 0);
      ::dup2(sv[1], STDIN_FILENO);
      ::dup2(sv[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", endpoint_.command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(sv[1]);
    child_pid_ = pid;
    channel_ = std::make_unique<BridgeChannel>(sv[0]);
    return;
  }

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(endpoint_.port);
  if (::getaddrinfo(endpoint_.host.c_str(), port.c_str(), &hints, &res) != 0 || !res)
    fail(Errc::prior_failure, "cannot resolve host", endpoint_.host);
  int fd = -1;
  for (addrinfo* a = res; a; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0)
    fail(Errc::prior_failure, "cannot connect to external prior",
         endpoint_.host + ":" + port);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  channel_ = std::make_unique<BridgeChannel>(fd);
}

void ExternalPrior::close() {
  channel_.reset();
  if (child_pid_ > 0) {
    int status = 0;
    // Closing the channel ends the server loop; a stuck child group is killed.
    for (int i = 0; i < 100; ++i) {
      if (::waitpid(child_pid_, &status, WNOHANG) == child_pid_) {
        child_pid_ = -1;
        return;
      }
      ::usleep(10000);
    }
    ::kill(-child_pid_, SIGKILL);
    ::waitpid(child_pid_, &status, 0);
    child_pid_ = -1;
  }
}

Cube ExternalPrior::denoise(const Cube& x, std::size_t stage) {
  require(stage <= 0xffff, Errc::invalid_argument, "stage index exceeds 65535", "stage");
  const std::string where = stage_field(stage);
  try {
    connect();
    Cube request = x;
    request.set_storage(ScalarType::f64);
    const auto s16 = static_cast<std::uint16_t>(stage);
    channel_->write_all(encode_frame(encode_cube(request), s16), endpoint_.timeout);
    const BridgeFrame reply = channel_->read_frame(endpoint_.timeout);
    if (reply.stage != s16)
      fail(Errc::bridge_protocol,
           "reply stage " + std::to_string(reply.stage) + " does not match request", where);
    RawArray raw;
    try {
      raw = decode_array(reply.payload);
    } catch (const Error& e) {
      fail(Errc::bridge_protocol, std::string("reply payload is not a valid array: ") + e.what(), where);
    }
    if (raw.dims.size() != 3 || raw.dims[0] != x.height() || raw.dims[1] != x.width() ||
        raw.dims[2] != x.channels()) {
      std::string dims;
      for (auto d : raw.dims) dims += (dims.empty() ? "" : "x") + std::to_string(d);
      fail(Errc::bridge_shape_mismatch,
           "reply shape " + dims + " differs from request " + std::to_string(x.height()) + "x" +
               std::to_string(x.width()) + "x" + std::to_string(x.channels()),
           where);
    }
    Cube out(x.height(), x.width(), x.channels(), x.axis(), x.profile_id(), std::move(raw.values),
             x.storage());
    if (!out.all_finite()) fail(Errc::prior_failure, "external prior returned non-finite values", where);
    return out;
  } catch (const Error& e) {
    close();
    if (e.field() == where) throw;
    fail(e.code(), e.what(), where);
  }
}

std::unique_ptr<Prior> make_external_prior(const nlohmann::json& config) {
  return std::make_unique<ExternalPrior>(BridgeEndpoint::from_json(config));
}

ServeMode parse_serve_mode(const std::string& name) {
  if (name == "echo") return ServeMode::echo;
  if (name == "wrong-shape") return ServeMode::wrong_shape;
  if (name == "bad-magic") return ServeMode::bad_magic;
  fail(Errc::invalid_argument, "unknown serve mode '" + name + "'", "mode");
}

std::size_t serve_bridge(BridgeChannel& channel, ServeMode mode) {
  const std::chrono::milliseconds forever{-1};
  std::size_t errors = 0;
  for (;;) {
    BridgeFrame frame;
    try {
      if (!channel.try_read_frame(frame, forever)) return errors;
    } catch (const Error&) {
      return errors + 1;  // protocol violation: drop the connection
    }
    std::vector<std::byte> reply = frame.payload;
    if (mode == ServeMode::wrong_shape) {
      try {
        RawArray raw = decode_array(frame.payload);
        std::vector<std::uint32_t> dims = raw.dims;
        if (!dims.empty() && dims.back() > 1) --dims.back();
        else dims.push_back(1);
        std::size_t count = 1;
        for (auto d : dims) count *= d;
        raw.values.resize(count);
        reply = encode_array(dims, raw.values, raw.dtype);
      } catch (const Error&) {
        ++errors;
      }
    }
    std::vector<std::byte> bytes = encode_frame(reply, frame.stage);
    if (mode == ServeMode::bad_magic) std::memcpy(bytes.data(), "XXXX", 4);
    try {
      channel.write_all(bytes, forever);
    } catch (const Error&) {
      return errors + 1;
    }
  }
}

std::size_t serve_bridge_stdio(ServeMode mode) {
  BridgeChannel channel(STDIN_FILENO, STDOUT_FILENO, false);
  return serve_bridge(channel, mode);
}

std::size_t serve_bridge_tcp(const std::string& host, int port, ServeMode mode,
                             std::size_t max_connections, const std::function<void(int)>& on_bound) {
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) fail(Errc::io, std::string("socket: ") + std::strerror(errno), "bridge");
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    fail(Errc::invalid_argument, "expected an IPv4 address", host);
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 4) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd);
    fail(Errc::io, "cannot listen: " + why, host + ":" + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_bound) on_bound(ntohs(addr.sin_port));

  std::size_t errors = 0;
  for (std::size_t served = 0; max_connections == 0 || served < max_connections; ++served) {
    const int client = ::accept4(fd, nullptr, nullptr, SOCK_CLOEXEC);
    if (client < 0) {
      if (errno == EINTR) continue;
      break;
    }
    BridgeChannel channel(client);
    errors += serve_bridge(channel, mode);
  }
  ::close(fd);
  return errors;
}

}  // namespace ihi
