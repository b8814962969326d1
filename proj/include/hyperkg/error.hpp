#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hkg {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

// Malformed model output or on-disk file. `raw()` keeps the offending text for logs.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::string raw = {})
        : Error(what), raw_(std::move(raw)) {}
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

class GatewayError : public Error {
public:
    GatewayError(const std::string& what, bool retryable = false)
        : Error(what), retryable_(retryable) {}
    bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

// Scripted provider has no response registered for the requested key.
class FixtureMissError : public GatewayError {
public:
    explicit FixtureMissError(std::string key)
        : GatewayError("scripted fixture missing for key '" + key + "'"), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class ExtractionError : public Error {
public:
    using Error::Error;
};

class OpApplicationError : public Error {
public:
    using Error::Error;
};

class RolloutError : public Error {
public:
    RolloutError(const std::string& what, int sample_index)
        : Error(what), sample_index_(sample_index) {}
    int sample_index() const noexcept { return sample_index_; }

private:
    int sample_index_;
};

class ReflectionError : public Error {
public:
    using Error::Error;
};

class VerificationError : public Error {
public:
    using Error::Error;
};

}  // namespace hkg
