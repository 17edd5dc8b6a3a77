// Subprocess proof checker speaking newline-delimited JSON on stdin/stdout.
// Each request carries an id echoed in the reply:
//   {"id": 1, "op": "start", "goal": "A |- B"}
//   {"id": 2, "op": "apply", "state_token": "...", "tactic": "intro H."}
// Replies:
//   {"id": 1, "result": "incomplete", "state_token": "...", "state_text": "..."}
//   {"id": 2, "result": "invalid", "message": "..."}
// Malformed requests get {"id": null-or-echoed, "result": "error", "message": ...}
// and the server keeps reading; EOF ends the process.

#include <iostream>
#include <string>

#include <json.hpp>

#include "rap/checker.hpp"

using json = nlohmann::json;

namespace {

json verdict_to_reply(const rap::CheckerVerdict& verdict) {
  json reply;
  switch (verdict.status) {
    case rap::CheckerVerdict::Status::complete:
      reply["result"] = "complete";
      reply["state_text"] = verdict.state_text;
      break;
    case rap::CheckerVerdict::Status::invalid:
      reply["result"] = "invalid";
      reply["message"] = verdict.message;
      break;
    case rap::CheckerVerdict::Status::incomplete:
      reply["result"] = "incomplete";
      reply["state_token"] = verdict.state_token;
      reply["state_text"] = verdict.state_text;
      break;
  }
  return reply;
}

}  // namespace

int main() {
  rap::KernelChecker checker;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    json reply;
    reply["id"] = nullptr;
    try {
      const json request = json::parse(line);
      if (request.contains("id")) reply["id"] = request["id"];
      const std::string op = request.at("op").get<std::string>();
      if (op == "start") {
        const rap::CheckerVerdict v = checker.begin(request.at("goal").get<std::string>());
        json body = verdict_to_reply(v);
        body["id"] = reply["id"];
        reply = std::move(body);
      } else if (op == "apply") {
        const rap::CheckerVerdict v = checker.apply(request.at("state_token").get<std::string>(),
                                                    request.at("tactic").get<std::string>());
        json body = verdict_to_reply(v);
        body["id"] = reply["id"];
        reply = std::move(body);
      } else {
        reply["result"] = "error";
        reply["message"] = "unknown op: " + op;
      }
    } catch (const std::exception& e) {
      reply["result"] = "error";
      reply["message"] = e.what();
    }
    std::cout << reply.dump() << "\n" << std::flush;
  }
  return 0;
}
