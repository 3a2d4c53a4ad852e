#include "sdv/cosim.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <cstdint>
#include <cstring>
#include <utility>

#include "json.hpp"

namespace sdv {
namespace {

using nlohmann::json;

json state_to_json(const CartesianState& s) {
  return json{{"x", s.x},           {"y", s.y},           {"x_dot", s.x_dot},
              {"y_dot", s.y_dot},   {"x_ddot", s.x_ddot}, {"y_ddot", s.y_ddot},
              {"theta", s.theta}};
}

CartesianState state_from_json(const json& j) {
  CartesianState s;
  s.x = j.at("x").get<double>();
  s.y = j.at("y").get<double>();
  s.x_dot = j.at("x_dot").get<double>();
  s.y_dot = j.at("y_dot").get<double>();
  s.x_ddot = j.at("x_ddot").get<double>();
  s.y_ddot = j.at("y_ddot").get<double>();
  s.theta = j.at("theta").get<double>();
  return s;
}

std::string sys_error(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

}  // namespace

std::string CoSimMessage::to_json() const {
  json j{{"kind", kind}, {"seq", seq}};
  if (kind == "init") {
    j["tick_dt"] = tick_dt;
    json list = json::array();
    for (const auto& [id, name] : agents) list.push_back(json{{"id", id}, {"name", name}});
    j["agents"] = std::move(list);
  } else if (kind == "step_request") {
    j["sim_time"] = sim_time;
  } else if (kind == "ego_state") {
    j["state"] = state_to_json(state);
  } else if (kind == "actor_states") {
    j["sim_time"] = sim_time;
    json list = json::array();
    for (const auto& [id, st] : actors) list.push_back(json{{"id", id}, {"state", state_to_json(st)}});
    j["actors"] = std::move(list);
  } else if (kind == "shutdown") {
    j["reason"] = reason;
  }
  return j.dump();
}

CoSimMessage CoSimMessage::from_json(const std::string& text) {
  CoSimMessage m;
  try {
    const json j = json::parse(text);
    m.kind = j.at("kind").get<std::string>();
    m.seq = j.at("seq").get<long>();
    if (m.kind == "init") {
      m.tick_dt = j.at("tick_dt").get<double>();
      for (const auto& a : j.at("agents"))
        m.agents.emplace_back(a.at("id").get<int>(), a.at("name").get<std::string>());
    } else if (m.kind == "step_request") {
      m.sim_time = j.at("sim_time").get<double>();
    } else if (m.kind == "ego_state") {
      m.state = state_from_json(j.at("state"));
    } else if (m.kind == "actor_states") {
      m.sim_time = j.at("sim_time").get<double>();
      for (const auto& a : j.at("actors"))
        m.actors.emplace_back(a.at("id").get<int>(), state_from_json(a.at("state")));
    } else if (m.kind == "shutdown") {
      m.reason = j.at("reason").get<std::string>();
    } else if (m.kind != "step_ack") {
      throw ProtocolError("unknown message kind '" + m.kind + "'");
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed message: ") + e.what());
  }
  return m;
}

CoSimChannel::CoSimChannel(int fd) : fd_(fd) {}

CoSimChannel::~CoSimChannel() { close(); }

void CoSimChannel::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void CoSimChannel::send(CoSimMessage msg) {
  msg.seq = ++seq_out_;
  const std::string payload = msg.to_json();
  std::string frame = std::to_string(payload.size());
  frame += '\n';
  frame += payload;
  std::size_t off = 0;
  while (off < frame.size()) {
    const ssize_t n = ::send(fd_, frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(sys_error("send failed"));
    }
    off += static_cast<std::size_t>(n);
  }
}

void CoSimChannel::wait_readable(const std::string& waiting_for) {
  for (;;) {
    pollfd p{fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(poll_timeout * 1000.0));
    if (rc > 0) return;
    if (rc == 0) {
      if (on_stall) on_stall(waiting_for);
      continue;
    }
    if (errno == EINTR) continue;
    throw ProtocolError(sys_error("poll failed"));
  }
}

// Appends at least one byte to buf_ or throws.
std::string CoSimChannel::read_exact(std::size_t n) {
  while (buf_.size() < n) {
    wait_readable("message body");
    char chunk[4096];
    const ssize_t got = ::recv(fd_, chunk, sizeof chunk, 0);
    if (got == 0) throw ProtocolError("peer closed the connection");
    if (got < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw ProtocolError(sys_error("recv failed"));
    }
    buf_.append(chunk, static_cast<std::size_t>(got));
  }
  std::string out = buf_.substr(0, n);
  buf_.erase(0, n);
  return out;
}

std::string CoSimChannel::read_line() {
  for (;;) {
    const auto pos = buf_.find('\n');
    if (pos != std::string::npos) {
      std::string out = buf_.substr(0, pos);
      buf_.erase(0, pos + 1);
      return out;
    }
    if (buf_.size() > 16) throw ProtocolError("oversized frame header");
    wait_readable("frame header");
    char chunk[4096];
    const ssize_t got = ::recv(fd_, chunk, sizeof chunk, 0);
    if (got == 0) throw ProtocolError("peer closed the connection");
    if (got < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw ProtocolError(sys_error("recv failed"));
    }
    buf_.append(chunk, static_cast<std::size_t>(got));
  }
}

CoSimMessage CoSimChannel::recv() {
  const std::string header = read_line();
  if (header.empty() || header.size() > 8)
    throw ProtocolError("bad frame header '" + header + "'");
  std::size_t len = 0;
  for (const char c : header) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw ProtocolError("bad frame header '" + header + "'");
    len = len * 10 + static_cast<std::size_t>(c - '0');
  }
  const std::string payload = read_exact(len);
  CoSimMessage m = CoSimMessage::from_json(payload);
  if (m.seq != seq_in_ + 1)
    throw ProtocolError("sequence violation: expected " + std::to_string(seq_in_ + 1) +
                        ", got " + std::to_string(m.seq));
  seq_in_ = m.seq;
  return m;
}

CoSimMessage CoSimChannel::expect(const std::string& kind) {
  CoSimMessage m = recv();
  if (m.kind != kind)
    throw ProtocolError("expected message '" + kind + "', got '" + m.kind + "'");
  return m;
}

CoSimServer::CoSimServer(int port) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw ProtocolError(sys_error("socket failed"));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0)
    throw ProtocolError(sys_error("bind failed"));
  if (::listen(listen_fd_, 1) != 0) throw ProtocolError(sys_error("listen failed"));
  socklen_t len = sizeof addr;
  if (::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
    throw ProtocolError(sys_error("getsockname failed"));
  port_ = ntohs(addr.sin_port);
}

CoSimServer::~CoSimServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

SimulationResult CoSimServer::serve(ScenarioRun& run) {
  const AgentSpec* external = nullptr;
  for (const auto& a : run.scenario().agents)
    if (a.external) external = &a;
  if (!external)
    throw ProtocolError("scenario '" + run.scenario().name + "' has no external agent");
  const int ego_id = run.agent_id(external->name);

  const int fd = ::accept(listen_fd_, nullptr, nullptr);
  if (fd < 0) throw ProtocolError(sys_error("accept failed"));
  CoSimChannel ch(fd);

  Simulation& sim = run.sim();
  ch.on_stall = [&sim](const std::string& what) {
    sim.log_event("cosim", "pause waiting_for=" + what);
  };

  CoSimMessage init;
  init.kind = "init";
  init.tick_dt = sim.clock().tick_dt;
  for (const auto& v : sim.vehicles()) init.agents.emplace_back(v.id, v.name);
  ch.send(std::move(init));

  sim.record_initial_state();
  const EndConditions end = run.effective_end();
  std::string reason;
  while (reason.empty()) {
    CoSimMessage req;
    req.kind = "step_request";
    req.sim_time = sim.sim_time() + sim.clock().tick_dt;
    ch.send(std::move(req));

    const CoSimMessage ego = ch.expect("ego_state");
    sim.set_external_state(ego_id, ego.state);
    sim.step();

    CoSimMessage actors;
    actors.kind = "actor_states";
    actors.sim_time = sim.sim_time();
    for (const auto& v : sim.vehicles())
      if (v.active) actors.actors.emplace_back(v.id, v.state);
    ch.send(std::move(actors));
    ch.expect("step_ack");

    if (auto r = sim.check_end(end)) reason = *r;
  }
  sim.finish(reason);

  CoSimMessage bye;
  bye.kind = "shutdown";
  bye.reason = reason;
  ch.send(std::move(bye));
  ch.close();
  return sim.result();
}

CoSimClient::CoSimClient(const std::string& host, int port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw ProtocolError(sys_error("socket failed"));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw ProtocolError("bad host address '" + host + "'");
  }
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    throw ProtocolError(sys_error("connect failed"));
  }
  channel_ = std::make_unique<CoSimChannel>(fd);
}

CoSimClient::ReplayStats CoSimClient::replay(
    const std::vector<std::pair<double, CartesianState>>& states) {
  if (states.empty()) throw ProtocolError("nothing to replay");
  ReplayStats stats;
  CoSimChannel& ch = *channel_;
  ch.expect("init");
  for (;;) {
    const CoSimMessage m = ch.recv();
    if (m.kind == "shutdown") {
      stats.end_reason = m.reason;
      break;
    }
    if (m.kind != "step_request")
      throw ProtocolError("unexpected message '" + m.kind + "'");

    // Nearest recorded sample; requests land on the recording's tick grid.
    std::size_t best = 0;
    double best_err = std::abs(states[0].first - m.sim_time);
    for (std::size_t i = 1; i < states.size(); ++i) {
      const double err = std::abs(states[i].first - m.sim_time);
      if (err < best_err) {
        best = i;
        best_err = err;
      }
    }
    CoSimMessage reply;
    reply.kind = "ego_state";
    reply.state = states[best].second;
    ch.send(std::move(reply));

    const CoSimMessage actors = ch.expect("actor_states");
    stats.actor_times.push_back(actors.sim_time);
    CoSimMessage ack;
    ack.kind = "step_ack";
    ch.send(std::move(ack));
    ++stats.steps;
  }
  return stats;
}

}  // namespace sdv
