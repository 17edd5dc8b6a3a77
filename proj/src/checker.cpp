#include "rap/checker.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>

#include <json.hpp>

using nlohmann::json;

namespace rap {
namespace {

json formula_to_json(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::atom: return {{"k", "a"}, {"n", f.name()}};
    case Formula::Kind::truth: return {{"k", "t"}};
    case Formula::Kind::conj: return {{"k", "&"}, {"l", formula_to_json(*f.lhs())}, {"r", formula_to_json(*f.rhs())}};
    case Formula::Kind::disj: return {{"k", "|"}, {"l", formula_to_json(*f.lhs())}, {"r", formula_to_json(*f.rhs())}};
    case Formula::Kind::impl: return {{"k", ">"}, {"l", formula_to_json(*f.lhs())}, {"r", formula_to_json(*f.rhs())}};
  }
  return {};
}

FormulaPtr formula_from_json(const json& j) {
  std::string k = j.at("k").get<std::string>();
  if (k == "a") return Formula::atom(j.at("n").get<std::string>());
  if (k == "t") return Formula::truth();
  FormulaPtr l = formula_from_json(j.at("l"));
  FormulaPtr r = formula_from_json(j.at("r"));
  if (k == "&") return Formula::conj(std::move(l), std::move(r));
  if (k == "|") return Formula::disj(std::move(l), std::move(r));
  if (k == ">") return Formula::impl(std::move(l), std::move(r));
  throw CheckerError("bad formula tag '" + k + "' in state token");
}

CheckerVerdict from_result(const CheckResult& result) {
  CheckerVerdict v;
  switch (result.status) {
    case CheckResult::Status::complete:
      v.status = CheckerVerdict::Status::complete;
      v.state_text = render_state_text(KernelState{});
      break;
    case CheckResult::Status::invalid:
      v.status = CheckerVerdict::Status::invalid;
      v.message = result.message;
      break;
    case CheckResult::Status::incomplete:
      v.status = CheckerVerdict::Status::incomplete;
      v.state_token = encode_state_token(result.next);
      v.state_text = render_state_text(result.next);
      break;
  }
  return v;
}

}  // namespace

std::string encode_state_token(const KernelState& state) {
  json goals = json::array();
  for (const auto& g : state.goals) {
    json hyps = json::array();
    for (const auto& h : g.hypotheses) hyps.push_back({{"n", h.name}, {"f", formula_to_json(*h.formula)}});
    goals.push_back({{"h", std::move(hyps)}, {"t", formula_to_json(*g.target)}});
  }
  return json{{"goals", std::move(goals)}}.dump();
}

KernelState decode_state_token(const std::string& token) {
  json j;
  try {
    j = json::parse(token);
  } catch (const json::exception& e) {
    throw CheckerError(std::string("undecodable state token: ") + e.what());
  }
  KernelState state;
  try {
    for (const auto& gj : j.at("goals")) {
      Goal g;
      for (const auto& hj : gj.at("h"))
        g.hypotheses.push_back({hj.at("n").get<std::string>(), formula_from_json(hj.at("f"))});
      g.target = formula_from_json(gj.at("t"));
      state.goals.push_back(std::move(g));
    }
  } catch (const json::exception& e) {
    throw CheckerError(std::string("undecodable state token: ") + e.what());
  }
  return state;
}

CheckerVerdict KernelChecker::begin(const std::string& goal_text) {
  Goal goal;
  try {
    goal = parse_goal(goal_text);
  } catch (const ParseError& e) {
    CheckerVerdict v;
    v.status = CheckerVerdict::Status::invalid;
    v.message = e.what();
    return v;
  }
  KernelState state;
  state.goals = {std::move(goal)};
  CheckerVerdict v;
  v.status = CheckerVerdict::Status::incomplete;
  v.state_token = encode_state_token(state);
  v.state_text = render_state_text(state);
  return v;
}

CheckerVerdict KernelChecker::apply(const std::string& state_token, const std::string& tactic) {
  KernelState state = decode_state_token(state_token);
  return from_result(apply_tactic(state, tactic));
}

// ---------------------------------------------------------------------------
// ExternalChecker: one child process, line-oriented JSON over two pipes.

struct ExternalChecker::Process {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  std::string buffer;

  ~Process() {
    if (to_child >= 0) close(to_child);
    if (from_child >= 0) close(from_child);
    if (pid > 0) {
      kill(pid, SIGTERM);
      waitpid(pid, nullptr, 0);
    }
  }

  void write_line(const std::string& line) {
    std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
      ssize_t n = write(to_child, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw CheckerError(std::string("checker pipe write failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    while (true) {
      std::size_t nl = buffer.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        return line;
      }
      char chunk[4096];
      ssize_t n = read(from_child, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw CheckerError(std::string("checker pipe read failed: ") + std::strerror(errno));
      }
      if (n == 0) throw CheckerError("checker process closed its output");
      buffer.append(chunk, static_cast<std::size_t>(n));
    }
  }
};

ExternalChecker::ExternalChecker(const std::string& command) : process_(new Process) {
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
    throw CheckerError(std::string("pipe failed: ") + std::strerror(errno));
  pid_t pid = fork();
  if (pid < 0) throw CheckerError(std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  process_->pid = pid;
  process_->to_child = in_pipe[1];
  process_->from_child = out_pipe[0];
}

ExternalChecker::~ExternalChecker() = default;

CheckerVerdict ExternalChecker::roundtrip(const std::string& request_line, long expected_id) {
  process_->write_line(request_line);
  std::string reply_line = process_->read_line();
  json reply;
  try {
    reply = json::parse(reply_line);
  } catch (const json::exception& e) {
    throw CheckerError(std::string("checker sent malformed JSON: ") + e.what());
  }
  if (!reply.contains("id") || reply.at("id").get<long>() != expected_id)
    throw CheckerError("checker reply id mismatch");
  if (!reply.contains("result")) throw CheckerError("checker reply lacks 'result'");
  std::string result = reply.at("result").get<std::string>();
  CheckerVerdict v;
  if (result == "complete") {
    v.status = CheckerVerdict::Status::complete;
  } else if (result == "invalid") {
    v.status = CheckerVerdict::Status::invalid;
  } else if (result == "incomplete") {
    v.status = CheckerVerdict::Status::incomplete;
  } else if (result == "error") {
    std::string message = reply.contains("message") ? reply.at("message").get<std::string>() : "";
    throw CheckerError("checker reported an error: " + message);
  } else {
    throw CheckerError("checker reported unknown result '" + result + "'");
  }
  if (reply.contains("message")) v.message = reply.at("message").get<std::string>();
  if (reply.contains("state_token")) v.state_token = reply.at("state_token").get<std::string>();
  if (reply.contains("state_text")) v.state_text = reply.at("state_text").get<std::string>();
  return v;
}

CheckerVerdict ExternalChecker::begin(const std::string& goal_text) {
  long id = next_id_++;
  json req = {{"id", id}, {"op", "start"}, {"goal", goal_text}};
  return roundtrip(req.dump(), id);
}

CheckerVerdict ExternalChecker::apply(const std::string& state_token, const std::string& tactic) {
  long id = next_id_++;
  json req = {{"id", id}, {"op", "apply"}, {"state_token", state_token}, {"tactic", tactic}};
  return roundtrip(req.dump(), id);
}

}  // namespace rap
