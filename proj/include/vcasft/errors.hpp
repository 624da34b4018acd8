#pragma once

#include <stdexcept>
#include <string>

namespace vcasft {

/// Base error for all toolkit failures.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

/// A caller violated a documented precondition.
class PreconditionError : public Error {
  public:
    explicit PreconditionError(const std::string &msg) : Error(msg) {}
};

/// Input data failed schema validation. Carries the offending field.
class SchemaError : public Error {
  public:
    SchemaError(std::string field, const std::string &reason)
        : Error("schema violation in field '" + field + "': " + reason), field_(std::move(field)) {}

    const std::string &field() const { return field_; }

  private:
    std::string field_;
};

/// External service interaction failed (transport, credentials, bad payload).
class GatewayError : public Error {
  public:
    explicit GatewayError(const std::string &msg) : Error(msg) {}
};

/// Replay profile saw a request with no recorded fixture. Signals a
/// nondeterministic pipeline, so it is distinct from GatewayError.
class ReplayMissError : public GatewayError {
  public:
    explicit ReplayMissError(std::string key)
        : GatewayError("replay miss: no fixture for request key " + key), key_(std::move(key)) {}

    const std::string &key() const { return key_; }

  private:
    std::string key_;
};

} // namespace vcasft
