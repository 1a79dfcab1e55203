#pragma once

#include <atomic>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "coopmon/config.hpp"
#include "coopmon/env.hpp"

namespace coopmon {

/// Batched policy-bridge session: newline-delimited JSON requests in, one
/// JSON response per request out.
///
///   {"type":"reset","envs":[{"seed":s,"config_ref":"default"}, ...]}
///     -> {"type":"obs","envs":[{"env_id":i,"seed":s,"obs":[...]}, ...]}
///   {"type":"step","envs":[{"env_id":i,"actions":[[v_idx,delta_idx], ...]}, ...]}
///     -> {"type":"result","envs":[{"env_id":i,"obs":[...],"reward":r,"done":b,"info":{...}}, ...]}
///   {"type":"close"} -> {"type":"bye"}
///
/// Malformed requests yield {"type":"error","message":...,"env_id":i|null}
/// and leave every environment untouched.
class BridgeSession {
 public:
  explicit BridgeSession(RunConfig config, unsigned workers = 0, bool training_info = true);

  std::string handle(const std::string& line);
  bool closed() const { return closed_; }
  std::size_t env_count() const { return envs_.size(); }
  const SimState& env(std::size_t id) const { return *envs_.at(id); }

 private:
  friend struct BridgeHandlers;
  const ScenarioSpec& scenario_for(const std::string& ref);
  std::shared_ptr<const GridWorld> world_for(const std::string& ref);

  RunConfig config_;
  unsigned workers_;
  bool training_info_;
  bool closed_ = false;
  std::map<std::string, RunConfig> configs_;
  std::map<std::string, std::shared_ptr<const GridWorld>> worlds_;
  std::vector<std::unique_ptr<SimState>> envs_;
};

/// Serves one session over a pair of streams until EOF or a close request.
void serve_stream(BridgeSession& session, std::istream& in, std::ostream& out);

struct TcpOptions {
  std::string host = "127.0.0.1";
  int port = 0;                // 0 picks a free port
  int max_connections = -1;    // stop after this many clients; -1 = forever
  std::function<void(int port)> on_listen;
  const std::atomic<bool>* stop = nullptr;
};

/// Listens on host:port; each connection gets its own session and thread.
/// Throws IoError when the socket cannot be bound.
void serve_tcp(const RunConfig& config, const TcpOptions& options, unsigned workers = 0,
               bool training_info = true);

}  // namespace coopmon
