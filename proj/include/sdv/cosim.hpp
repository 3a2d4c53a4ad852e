#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdv/scenario.hpp"
#include "sdv/types.hpp"

namespace sdv {

// Lockstep co-simulation over a local TCP socket.
//
// Wire format: each message is an ASCII decimal byte count, a newline, then
// that many bytes of single-line JSON. Every message carries a "seq" field;
// sequence numbers count per direction, start at 1, and must increase by
// exactly one. Any gap, repeat, or unexpected kind aborts the session.
//
// Session flow, server side (one exchange per engine tick):
//   -> init          {tick_dt, agents:[{id,name}...]}
//   -> step_request  {sim_time}   sim_time = the instant the requested state is for
//   <- ego_state     {state}      peer's vehicle state at that instant
//         server injects the state and advances one tick
//   -> actor_states  {sim_time, actors:[{id,state}...]}  all active vehicles, post tick
//   <- step_ack      {}
//   ... repeated until an end condition holds ...
//   -> shutdown      {reason}

struct CoSimMessage {
  std::string kind;  // init | step_request | ego_state | actor_states | step_ack | shutdown
  long seq = 0;
  double tick_dt = 0.0;
  double sim_time = 0.0;
  std::string reason;
  CartesianState state;                                 // ego_state
  std::vector<std::pair<int, std::string>> agents;      // init
  std::vector<std::pair<int, CartesianState>> actors;   // actor_states

  std::string to_json() const;
  static CoSimMessage from_json(const std::string& text);
};

// Blocking framed I/O on a connected socket. recv waits in poll_timeout
// slices; each expired slice invokes on_stall (diagnostics) and waiting
// resumes, so a slow peer pauses the session instead of ending it. A closed
// or garbled stream throws ProtocolError.
class CoSimChannel {
 public:
  explicit CoSimChannel(int fd);
  ~CoSimChannel();
  CoSimChannel(const CoSimChannel&) = delete;
  CoSimChannel& operator=(const CoSimChannel&) = delete;

  void send(CoSimMessage msg);  // stamps the outgoing seq
  CoSimMessage recv();          // validates the incoming seq
  CoSimMessage expect(const std::string& kind);
  void close();

  double poll_timeout = 5.0;
  std::function<void(const std::string&)> on_stall;

 private:
  std::string read_line();
  std::string read_exact(std::size_t n);
  void wait_readable(const std::string& waiting_for);

  int fd_ = -1;
  std::string buf_;
  long seq_out_ = 0;
  long seq_in_ = 0;
};

// Listens on 127.0.0.1:port (0 picks a free port, see port()), accepts a
// single peer, and drives the scenario in lockstep with it. The peer owns the
// vehicle marked external in the scenario.
class CoSimServer {
 public:
  explicit CoSimServer(int port = 0);
  ~CoSimServer();
  CoSimServer(const CoSimServer&) = delete;
  CoSimServer& operator=(const CoSimServer&) = delete;

  int port() const { return port_; }
  SimulationResult serve(ScenarioRun& run);

 private:
  int listen_fd_ = -1;
  int port_ = 0;
};

// Minimal peer: answers each step_request with a state looked up in a
// recorded (time, state) sequence, acknowledges actor updates, and returns
// when shutdown arrives. Used by tooling and tests to replay logged drives.
class CoSimClient {
 public:
  CoSimClient(const std::string& host, int port);

  struct ReplayStats {
    long steps = 0;
    std::string end_reason;
    std::vector<double> actor_times;  // sim_time of every actor_states message
  };
  ReplayStats replay(const std::vector<std::pair<double, CartesianState>>& states);

  CoSimChannel& channel() { return *channel_; }

 private:
  std::unique_ptr<CoSimChannel> channel_;
};

}  // namespace sdv
