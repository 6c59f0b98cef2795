#pragma once

#include <stdexcept>
#include <string>

namespace policytwin {

/// Process exit codes used by the command-line front end.
enum class ExitCode : int {
  kSuccess = 0,
  kUsage = 1,   // bad flags or run-config
  kData = 2,    // malformed or inconsistent input data
  kEngine = 3,  // cognitive engine, transport or cache failure
};

/// Base of every error raised by the library. The category decides the exit
/// code when an error escapes to the CLI.
class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::kUsage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::kData, what) {}
};

class EngineError : public Error {
 public:
  explicit EngineError(const std::string& what) : Error(ExitCode::kEngine, what) {}
};

/// Engine output that could not be turned into a behavior vector.
class ResponseParseError : public EngineError {
 public:
  explicit ResponseParseError(const std::string& what) : EngineError(what) {}
};

/// Replay mode was asked for a prompt that is not in the cache.
class CacheMissError : public EngineError {
 public:
  explicit CacheMissError(const std::string& what) : EngineError(what) {}
};

}  // namespace policytwin
