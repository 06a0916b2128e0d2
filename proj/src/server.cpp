#include "dualarm/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>
#include <vector>

#include "dualarm/sampler.hpp"
#include "dualarm/serialization.hpp"

namespace dualarm {

using nlohmann::json;

namespace {

struct ProtocolError {
  std::string code;
  std::string message;
};

json error_response(const json& id, const std::string& code, const std::string& message) {
  return {{"id", id}, {"error", {{"code", code}, {"message", message}}}};
}

std::string dump_line(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

Slot slot_from(const json& request, const char* key) {
  if (!request.contains(key)) throw ProtocolError{"BAD_REQUEST", std::string("missing field '") + key + "'"};
  const json& v = request.at(key);
  if (!v.is_number_integer()) throw ProtocolError{"BAD_REQUEST", std::string("field '") + key + "' must be an integer"};
  const auto raw = v.get<long long>();
  if (raw == -1) return std::nullopt;
  if (raw < 0) throw ProtocolError{"BAD_REQUEST", std::string("field '") + key + "' must be >= -1"};
  return static_cast<std::size_t>(raw);
}

}  // namespace

json to_json(const Observation& obs) {
  json arms = json::array();
  for (const auto& a : obs.arm_states) arms.push_back({a.x, a.y});
  json objects = json::array();
  for (const auto& o : obs.object_states) objects.push_back({o[0], o[1], o[2], o[3]});
  return {{"arms", std::move(arms)},
          {"objects", std::move(objects)},
          {"mask", obs.global_mask},
          {"reach_mask", {obs.reach_mask[0], obs.reach_mask[1]}}};
}

json EnvSession::handle_spec() const {
  json j = {{"protocol", kProtocolVersion}, {"sampler_version", kSamplerVersion}};
  if (env_.started()) {
    j["n"] = env_.instance().size();
    j["scheme"] = to_string(env_.instance().scheme);
    j["config"] = to_json(env_.instance().config);
    j["round"] = env_.round();
    j["done"] = env_.done();
  } else {
    j["n"] = nullptr;
    j["scheme"] = nullptr;
    j["config"] = to_json(default_config_);
  }
  return j;
}

json EnvSession::handle_reset(const json& request) {
  EnvConfig env_config;
  if (request.contains("reward_mode")) {
    const json& mode = request.at("reward_mode");
    if (mode == "per_round")
      env_config.reward_mode = RewardMode::PerRound;
    else if (mode == "terminal")
      env_config.reward_mode = RewardMode::Terminal;
    else
      throw ProtocolError{"BAD_REQUEST", "reward_mode must be per_round or terminal"};
  }
  if (request.contains("gamma")) {
    if (!request.at("gamma").is_number()) throw ProtocolError{"BAD_REQUEST", "gamma must be a number"};
    env_config.gamma = request.at("gamma").get<double>();
  }

  Instance instance;
  try {
    if (request.contains("instance")) {
      instance = instance_from_json(request.at("instance"));
    } else {
      SamplerSpec spec;
      spec.config = request.contains("config") ? config_from_json(request.at("config")) : default_config_;
      const json& n = request.value("n", json(10));
      if (!n.is_number_integer() || n.get<long long>() < 1) throw ProtocolError{"BAD_REQUEST", "n must be a positive integer"};
      spec.n = static_cast<std::size_t>(n.get<long long>());
      const json& scheme = request.value("scheme", json("CA"));
      if (!scheme.is_string()) throw ProtocolError{"BAD_REQUEST", "scheme must be a string"};
      spec.scheme = scheme_from_string(scheme.get<std::string>());
      const json& seed = request.value("seed", json(0));
      if (!seed.is_number_unsigned()) throw ProtocolError{"BAD_REQUEST", "seed must be an unsigned integer"};
      spec.seed = seed.get<std::uint64_t>();
      instance = sample_instance(spec);
    }
  } catch (const FormatError& e) {
    throw ProtocolError{"BAD_REQUEST", e.what()};
  } catch (const DomainError& e) {
    throw ProtocolError{"BAD_REQUEST", e.what()};
  }

  env_ = RearrangeEnv(env_config);
  return {{"obs", to_json(env_.reset(std::move(instance)))}};
}

json EnvSession::handle_step(const json& request) {
  if (!env_.started()) throw ProtocolError{"NO_EPISODE", "reset before step"};
  if (env_.done()) throw ProtocolError{"EPISODE_DONE", "episode already finished; reset first"};
  const AssignmentPair pair{slot_from(request, "a1"), slot_from(request, "a2")};
  StepResult r;
  try {
    r = env_.step(pair);
  } catch (const IllegalAction& e) {
    json err = error_response(nullptr, "ILLEGAL_ACTION", e.what());
    err["error"]["reason"] = to_string(e.reason());
    throw err;
  }
  return {{"obs", to_json(r.observation)},
          {"reward", r.reward},
          {"done", r.done},
          {"info", {{"m_tau", r.info.m_tau}, {"delay", r.info.delay}, {"round", r.info.round}}}};
}

json EnvSession::handle(const json& request) {
  json id = nullptr;
  try {
    if (!request.is_object()) return error_response(id, "BAD_REQUEST", "request must be a JSON object");
    if (request.contains("id")) id = request.at("id");
    if (closed_) return error_response(id, "SESSION_CLOSED", "session is closed");
    if (!request.contains("cmd") || !request.at("cmd").is_string())
      return error_response(id, "BAD_REQUEST", "missing string field 'cmd'");
    const std::string cmd = request.at("cmd").get<std::string>();
    json body;
    if (cmd == "spec") {
      body = handle_spec();
    } else if (cmd == "reset") {
      body = handle_reset(request);
    } else if (cmd == "step") {
      body = handle_step(request);
    } else if (cmd == "close") {
      closed_ = true;
      body = {{"closed", true}};
    } else {
      return error_response(id, "UNKNOWN_CMD", "unknown command '" + cmd + "'");
    }
    json response = {{"id", id}};
    response.update(body);
    return response;
  } catch (const ProtocolError& e) {
    return error_response(id, e.code, e.message);
  } catch (json& err) {
    err["id"] = id;
    return err;
  } catch (const std::exception& e) {
    return error_response(id, "INTERNAL", e.what());
  }
}

std::string EnvSession::handle_line(const std::string& line) {
  json request;
  try {
    request = json::parse(line);
  } catch (const json::exception& e) {
    return dump_line(error_response(nullptr, "PARSE_ERROR", e.what()));
  }
  return dump_line(handle(request));
}

void serve_stream(std::istream& in, std::ostream& out, const WorkspaceConfig& config) {
  EnvSession session(config);
  std::string line;
  while (!session.closed() && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out << session.handle_line(line) << '\n' << std::flush;
  }
}

namespace {

bool write_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

void run_connection(int fd, WorkspaceConfig config) {
  EnvSession session(config);
  std::string buffer;
  char chunk[4096];
  while (!session.closed()) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    while (!session.closed() && (nl = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!write_all(fd, session.handle_line(line) + "\n")) {
        ::close(fd);
        return;
      }
    }
  }
  ::close(fd);
}

}  // namespace

void serve_tcp(const TcpOptions& options) {
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  const int yes = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(options.port);
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listener, 16) < 0) {
    const std::string msg = std::strerror(errno);
    ::close(listener);
    throw std::runtime_error("bind/listen: " + msg);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
  if (options.on_listening) options.on_listening(ntohs(addr.sin_port));

  std::vector<std::thread> workers;
  for (int accepted = 0; options.sessions <= 0 || accepted < options.sessions;) {
    const int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    ++accepted;
    workers.emplace_back(run_connection, fd, options.config);
  }
  ::close(listener);
  for (auto& w : workers) w.join();
}

}  // namespace dualarm
