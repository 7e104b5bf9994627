#pragma once

#include <stdexcept>
#include <string>

namespace evo {

// Base for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A document did not match the expected schema. `field` is a dotted path
// such as "subgoals[0].checks[1].item".
class SchemaError : public Error {
 public:
  SchemaError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation's precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class PlannerError : public Error {
 public:
  PlannerError(const std::string& what, std::string last_reply = {})
      : Error(what), last_reply_(std::move(last_reply)) {}
  const std::string& last_reply() const noexcept { return last_reply_; }

 private:
  std::string last_reply_;
};

class ResetError : public Error {
 public:
  ResetError(std::string command, const std::string& what)
      : Error("init command '" + command + "': " + what), command_(std::move(command)) {}
  const std::string& command() const noexcept { return command_; }

 private:
  std::string command_;
};

}  // namespace evo
