#include "coopmon/bridge.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <istream>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "coopmon/errors.hpp"

namespace coopmon {

namespace {

using nlohmann::json;

json obs_json(const LocalObservation& o) {
  json ego = {{"p", {o.ego.p.x, o.ego.p.y}}, {"theta", o.ego.theta}, {"v", o.ego.v}};
  ego["lidar"] = o.ego.lidar ? json(o.ego.lidar->distances) : json::array();
  json peers = json::array();
  for (const PeerState& q : o.peers) peers.push_back({q.p.x, q.p.y, q.theta, q.v});
  json humans = json::array();
  for (const ObservedHuman& h : o.humans) {
    humans.push_back({h.slot, h.m.p.x, h.m.p.y, h.m.theta, h.m.v});
  }
  return {{"ego", ego}, {"peers", peers}, {"humans", humans}};
}

json obs_batch(const std::vector<LocalObservation>& obs) {
  json out = json::array();
  for (const LocalObservation& o : obs) out.push_back(obs_json(o));
  return out;
}

json info_json(const StepInfo& info, int t) {
  json humans = json::array();
  for (const Pose& h : info.humans) humans.push_back({h.p.x, h.p.y, h.theta, h.v});
  return {{"t", t},
          {"humans", humans},
          {"robot_visibility", info.robot_visibility},
          {"camera_visibility", info.camera_visibility},
          {"union_visible", info.union_visible},
          {"task_rewards", info.task_rewards}};
}

std::string error_json(const std::string& message, int env_id) {
  json j = {{"type", "error"}, {"message", message}};
  j["env_id"] = env_id >= 0 ? json(env_id) : json(nullptr);
  return j.dump();
}

int env_id_of(const json& entry, int fallback) {
  if (!entry.is_object() || !entry.contains("env_id")) return fallback;
  const json& id = entry["env_id"];
  if (!id.is_number_integer() || id.get<long>() < 0) {
    throw ProtocolError("env_id must be a nonnegative integer", fallback);
  }
  return id.get<int>();
}

}  // namespace

struct BridgeHandlers {
  static std::string reset(BridgeSession& s, const json& request);
  static std::string step(BridgeSession& s, const json& request);
};

BridgeSession::BridgeSession(RunConfig config, unsigned workers, bool training_info)
    : config_(std::move(config)), workers_(workers), training_info_(training_info) {
  config_.scenario.planner.kind = PlannerKind::External;
  configs_.emplace("default", config_);
}

const ScenarioSpec& BridgeSession::scenario_for(const std::string& ref) {
  auto it = configs_.find(ref);
  if (it == configs_.end()) {
    RunConfig c = load_config(ref);
    c.scenario.planner.kind = PlannerKind::External;
    it = configs_.emplace(ref, std::move(c)).first;
  }
  return it->second.scenario;
}

std::shared_ptr<const GridWorld> BridgeSession::world_for(const std::string& ref) {
  auto& w = worlds_[ref];
  if (!w) w = scenario_world(scenario_for(ref));
  return w;
}

std::string BridgeSession::handle(const std::string& line) {
  json request;
  try {
    request = json::parse(line);
  } catch (const json::parse_error& e) {
    return error_json(std::string("malformed JSON: ") + e.what(), -1);
  }
  try {
    if (!request.is_object() || !request.contains("type") || !request["type"].is_string()) {
      throw ProtocolError("request needs a string 'type'");
    }
    const std::string type = request["type"].get<std::string>();
    if (type == "reset") return BridgeHandlers::reset(*this, request);
    if (type == "step") return BridgeHandlers::step(*this, request);
    if (type == "close") {
      closed_ = true;
      return json{{"type", "bye"}}.dump();
    }
    throw ProtocolError("unknown request type '" + type + "'");
  } catch (const ProtocolError& e) {
    return error_json(e.what(), e.env_id());
  } catch (const Error& e) {
    return error_json(e.what(), -1);
  }
}

std::string BridgeHandlers::reset(BridgeSession& s, const json& request) {
  if (!request.contains("envs") || !request["envs"].is_array() || request["envs"].empty()) {
    throw ProtocolError("reset needs a nonempty 'envs' array");
  }
  const json& entries = request["envs"];
  // Entries with env_id reset that slot (or append at the end); without ids
  // the whole batch is replaced.
  const bool by_id = entries[0].is_object() && entries[0].contains("env_id");
  struct Job {
    int env_id;
    std::uint64_t seed;
    std::string ref;
  };
  std::vector<Job> jobs;
  std::size_t new_count = by_id ? s.envs_.size() : entries.size();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const json& e = entries[k];
    const int fallback = static_cast<int>(k);
    if (!e.is_object()) throw ProtocolError("reset entry must be an object", fallback);
    if (e.contains("env_id") != by_id) {
      throw ProtocolError("either every reset entry names env_id or none does", fallback);
    }
    const int id = by_id ? env_id_of(e, fallback) : fallback;
    if (by_id && static_cast<std::size_t>(id) > new_count) {
      throw ProtocolError("env_id " + std::to_string(id) + " leaves a gap", id);
    }
    if (by_id && static_cast<std::size_t>(id) == new_count) ++new_count;
    if (!e.contains("seed") || !e["seed"].is_number_unsigned()) {
      throw ProtocolError("reset entry needs a nonnegative integer 'seed'", id);
    }
    std::string ref = "default";
    if (e.contains("config_ref")) {
      if (!e["config_ref"].is_string()) throw ProtocolError("config_ref must be a string", id);
      ref = e["config_ref"].get<std::string>();
    }
    for (const Job& j : jobs) {
      if (j.env_id == id) throw ProtocolError("env_id " + std::to_string(id) + " listed twice", id);
    }
    try {
      s.world_for(ref);
    } catch (const Error& err) {
      throw ProtocolError(std::string("config_ref '") + ref + "': " + err.what(), id);
    }
    jobs.push_back({id, e["seed"].get<std::uint64_t>(), ref});
  }

  std::vector<std::unique_ptr<SimState>> fresh(jobs.size());
  std::vector<std::vector<LocalObservation>> obs(jobs.size());
  std::vector<std::pair<const ScenarioSpec*, std::shared_ptr<const GridWorld>>> inputs;
  for (const Job& j : jobs) inputs.emplace_back(&s.scenario_for(j.ref), s.world_for(j.ref));
  parallel_for(jobs.size(), s.workers_, [&](std::size_t k) {
    try {
      const PreparedEpisode ep = prepare_seeded(*inputs[k].first, jobs[k].seed, inputs[k].second);
      auto [sim, o] = SimState::reset(ep.world, ep.crowd, ep.env, ep.seed);
      fresh[k] = std::make_unique<SimState>(std::move(sim));
      obs[k] = std::move(o);
    } catch (const Error& err) {
      throw ProtocolError(err.what(), jobs[k].env_id);
    }
  });

  if (!by_id) s.envs_.clear();
  s.envs_.resize(std::max(s.envs_.size(), new_count));
  json out = {{"type", "obs"}, {"envs", json::array()}};
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    s.envs_[jobs[k].env_id] = std::move(fresh[k]);
    json e = {{"env_id", jobs[k].env_id}, {"seed", jobs[k].seed}, {"obs", obs_batch(obs[k])}};
    if (s.training_info_) e["info"] = info_json(s.envs_[jobs[k].env_id]->last_info(), 0);
    out["envs"].push_back(std::move(e));
  }
  return out.dump();
}

std::string BridgeHandlers::step(BridgeSession& s, const json& request) {
  if (!request.contains("envs") || !request["envs"].is_array() || request["envs"].empty()) {
    throw ProtocolError("step needs a nonempty 'envs' array");
  }
  const json& entries = request["envs"];
  std::vector<int> ids;
  std::vector<std::vector<ActionCommand>> actions;
  // Validate the whole batch before touching any environment.
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const json& e = entries[k];
    if (!e.is_object() || !e.contains("env_id")) {
      throw ProtocolError("step entry " + std::to_string(k) + " needs env_id");
    }
    const int id = env_id_of(e, -1);
    if (static_cast<std::size_t>(id) >= s.envs_.size() || !s.envs_[id]) {
      throw ProtocolError("env " + std::to_string(id) + " does not exist", id);
    }
    for (int other : ids) {
      if (other == id) throw ProtocolError("env " + std::to_string(id) + " listed twice", id);
    }
    const SimState& sim = *s.envs_[id];
    if (sim.done()) throw ProtocolError("env " + std::to_string(id) + " is done; reset it", id);
    if (!e.contains("actions") || !e["actions"].is_array()) {
      throw ProtocolError("env " + std::to_string(id) + " needs an 'actions' array", id);
    }
    const json& a = e["actions"];
    if (a.size() != sim.robots().size()) {
      throw ProtocolError("env " + std::to_string(id) + " expects " +
                              std::to_string(sim.robots().size()) + " actions, got " +
                              std::to_string(a.size()),
                          id);
    }
    std::vector<ActionCommand> cmds;
    for (const json& pair : a) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
          !pair[1].is_number_integer()) {
        throw ProtocolError("env " + std::to_string(id) + ": each action is [v_idx, delta_idx]", id);
      }
      const int v = pair[0].get<int>(), d = pair[1].get<int>();
      if (v < 0 || v > 2 || d < 0 || d > 2) {
        throw ProtocolError("env " + std::to_string(id) + ": action index outside {0, 1, 2}", id);
      }
      cmds.push_back({v, d});
    }
    ids.push_back(id);
    actions.push_back(std::move(cmds));
  }

  std::vector<StepResult> results(ids.size());
  parallel_for(ids.size(), s.workers_, [&](std::size_t k) {
    results[k] = s.envs_[ids[k]]->step(actions[k]);
  });

  json out = {{"type", "result"}, {"envs", json::array()}};
  for (std::size_t k = 0; k < ids.size(); ++k) {
    json e = {{"env_id", ids[k]},
              {"obs", obs_batch(results[k].observations)},
              {"reward", results[k].reward},
              {"done", results[k].done}};
    if (s.training_info_) e["info"] = info_json(results[k].info, s.envs_[ids[k]]->t());
    out["envs"].push_back(std::move(e));
  }
  return out.dump();
}

void serve_stream(BridgeSession& session, std::istream& in, std::ostream& out) {
  std::string line;
  while (!session.closed() && std::getline(in, line)) {
    if (line.empty()) continue;
    out << session.handle(line) << '\n';
    out.flush();
  }
}

namespace {

bool write_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

void serve_client(int fd, RunConfig config, unsigned workers, bool training_info) {
  BridgeSession session(std::move(config), workers, training_info);
  std::string buffer;
  char chunk[65536];
  while (!session.closed()) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    while (!session.closed() && (nl = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (line.empty()) continue;
      if (!write_all(fd, session.handle(line) + "\n")) {
        ::close(fd);
        return;
      }
    }
  }
  ::close(fd);
}

}  // namespace

void serve_tcp(const RunConfig& config, const TcpOptions& options, unsigned workers,
               bool training_info) {
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(options.port));
  if (::inet_pton(AF_INET, options.host.c_str(), &addr.sin_addr) != 1) {
    ::close(listener);
    throw IoError("invalid listen address '" + options.host + "'");
  }
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(listener, 16) < 0) {
    const std::string msg = std::strerror(errno);
    ::close(listener);
    throw IoError("cannot listen on " + options.host + ":" + std::to_string(options.port) + ": " + msg);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
  if (options.on_listen) options.on_listen(ntohs(addr.sin_port));

  std::vector<std::thread> clients;
  int accepted = 0;
  while (options.max_connections < 0 || accepted < options.max_connections) {
    if (options.stop && options.stop->load()) break;
    pollfd pfd{listener, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, 100);
    if (ready <= 0) continue;
    const int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) continue;
    ++accepted;
    clients.emplace_back(serve_client, fd, config, workers, training_info);
  }
  ::close(listener);
  for (std::thread& t : clients) t.join();
}

}  // namespace coopmon
