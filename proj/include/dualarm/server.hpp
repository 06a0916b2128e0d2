#pragma once

// JSON-lines protocol exposing RearrangeEnv to out-of-process trainers.
// Every request line yields exactly one response line carrying the
// request's "id". Object indices are 0-based; -1 means IDLE.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>

#include "json.hpp"

#include "dualarm/env.hpp"

namespace dualarm {

inline constexpr int kProtocolVersion = 1;

nlohmann::json to_json(const Observation& obs);

class EnvSession {
 public:
  explicit EnvSession(WorkspaceConfig default_config = {}) : default_config_(default_config) {}

  /// One request line in, one response line out (without newline).
  std::string handle_line(const std::string& line);
  nlohmann::json handle(const nlohmann::json& request);

  bool closed() const { return closed_; }
  const RearrangeEnv& env() const { return env_; }

 private:
  nlohmann::json handle_reset(const nlohmann::json& request);
  nlohmann::json handle_step(const nlohmann::json& request);
  nlohmann::json handle_spec() const;

  WorkspaceConfig default_config_;
  RearrangeEnv env_;
  bool closed_ = false;
};

/// Serves one session over a pair of streams until "close" or end of input.
void serve_stream(std::istream& in, std::ostream& out, const WorkspaceConfig& config = {});

struct TcpOptions {
  std::uint16_t port = 0;
  /// Number of sessions to accept before returning; 0 serves forever.
  int sessions = 1;
  /// Called with the bound port once the socket listens.
  std::function<void(std::uint16_t)> on_listening;
  WorkspaceConfig config;
};

/// Accepts connections on 127.0.0.1; each connection is an independent
/// session handled on its own thread.
void serve_tcp(const TcpOptions& options);

}  // namespace dualarm
