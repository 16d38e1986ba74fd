#pragma once

// IHPB prior bridge frame, both directions:
//   "IHPB" | u32 LE payload length | IHIC payload | u16 LE stage index

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ihi/cube.hpp"
#include "ihi/priors.hpp"

namespace ihi {

inline constexpr char kBridgeMagic[4] = {'I', 'H', 'P', 'B'};
inline constexpr std::size_t kBridgeHeaderBytes = 8;
inline constexpr std::uint32_t kMaxBridgePayload = 1u << 30;

struct BridgeFrame {
  std::vector<std::byte> payload;
  std::uint16_t stage = 0;
};

std::vector<std::byte> encode_frame(std::span<const std::byte> payload, std::uint16_t stage);

/// Byte stream with deadlines over a socket or a read/write descriptor pair.
class BridgeChannel {
 public:
  explicit BridgeChannel(int fd, bool owned = true) : read_fd_(fd), write_fd_(fd), owned_(owned) {}
  BridgeChannel(int read_fd, int write_fd, bool owned)
      : read_fd_(read_fd), write_fd_(write_fd), owned_(owned) {}
  ~BridgeChannel();
  BridgeChannel(const BridgeChannel&) = delete;
  BridgeChannel& operator=(const BridgeChannel&) = delete;

  /// Throws bridge_timeout or bridge_protocol (peer closed).
  void write_all(std::span<const std::byte> bytes, std::chrono::milliseconds timeout);
  void read_exact(std::span<std::byte> out, std::chrono::milliseconds timeout);
  /// Reads one frame; throws bridge_protocol on bad magic or oversize length.
  BridgeFrame read_frame(std::chrono::milliseconds timeout);
  /// False on clean end of stream before a frame starts.
  bool try_read_frame(BridgeFrame& frame, std::chrono::milliseconds timeout);

 private:
  int read_fd_;
  int write_fd_;
  bool owned_;
};

struct BridgeEndpoint {
  std::string command;  // subprocess, run through /bin/sh -c
  std::string host = "127.0.0.1";
  int port = 0;         // TCP when command is empty
  std::chrono::milliseconds timeout{10000};

  static BridgeEndpoint from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Prior served by an external process. One session, one request in flight.
class ExternalPrior final : public Prior {
 public:
  explicit ExternalPrior(BridgeEndpoint endpoint);
  ~ExternalPrior() override;

  Cube denoise(const Cube& x, std::size_t stage) override;
  std::string id() const override { return "external"; }
  nlohmann::json describe() const override;

 private:
  void connect();
  void close();

  BridgeEndpoint endpoint_;
  std::unique_ptr<BridgeChannel> channel_;
  int child_pid_ = -1;
};

std::unique_ptr<Prior> make_external_prior(const nlohmann::json& config);

enum class ServeMode { echo, wrong_shape, bad_magic };
ServeMode parse_serve_mode(const std::string& name);

/// Reference server loop on one connected stream: answers frames until the
/// peer closes. Returns the number of protocol errors seen.
std::size_t serve_bridge(BridgeChannel& channel, ServeMode mode);

/// Serves a stdin/stdout pair (subprocess mode).
std::size_t serve_bridge_stdio(ServeMode mode);

/// Listens on host:port and serves connections one at a time; stops after
/// `max_connections` (0 = forever). `on_bound` receives the bound port.
std::size_t serve_bridge_tcp(const std::string& host, int port, ServeMode mode,
                             std::size_t max_connections,
                             const std::function<void(int)>& on_bound = {});

}  // namespace ihi
