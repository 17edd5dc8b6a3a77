#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "rap/kernel.hpp"

namespace rap {

struct CheckerError : std::runtime_error {
  explicit CheckerError(const std::string& what) : std::runtime_error(what) {}
};

// What a checker says about one tactic application. state_token is opaque to
// the engine; state_text is the rendered state used for retrieval queries.
struct CheckerVerdict {
  enum class Status { complete, invalid, incomplete };

  Status status = Status::invalid;
  std::string message;      // invalid only
  std::string state_token;  // incomplete (and the begin verdict)
  std::string state_text;
};

class ProofChecker {
 public:
  virtual ~ProofChecker() = default;
  // Opens a session on a goal ("H : A |- B" or a bare formula). A statement
  // that does not parse comes back invalid.
  virtual CheckerVerdict begin(const std::string& goal_text) = 0;
  virtual CheckerVerdict apply(const std::string& state_token, const std::string& tactic) = 0;
};

// In-process checker backed by the propositional kernel. Tokens serialize the
// goal stack, so the checker itself is stateless.
class KernelChecker : public ProofChecker {
 public:
  CheckerVerdict begin(const std::string& goal_text) override;
  CheckerVerdict apply(const std::string& state_token, const std::string& tactic) override;
};

// Serialization used for kernel state tokens (shared with the subprocess
// server).
std::string encode_state_token(const KernelState& state);
KernelState decode_state_token(const std::string& token);

// Out-of-process checker speaking newline-delimited JSON over stdin/stdout:
//   {"id": 1, "op": "start", "goal": "..."}
//   {"id": 2, "op": "apply", "state_token": "...", "tactic": "..."}
// replies
//   {"id": 1, "result": "complete"|"invalid"|"incomplete",
//    "message"?: "...", "state_token"?: "...", "state_text"?: "..."}
// Transport failures (dead process, id mismatch, malformed reply) throw
// CheckerError.
class ExternalChecker : public ProofChecker {
 public:
  explicit ExternalChecker(const std::string& command);
  ~ExternalChecker() override;

  ExternalChecker(const ExternalChecker&) = delete;
  ExternalChecker& operator=(const ExternalChecker&) = delete;

  CheckerVerdict begin(const std::string& goal_text) override;
  CheckerVerdict apply(const std::string& state_token, const std::string& tactic) override;

 private:
  CheckerVerdict roundtrip(const std::string& request_line, long expected_id);

  struct Process;
  std::unique_ptr<Process> process_;
  long next_id_ = 1;
};

}  // namespace rap
