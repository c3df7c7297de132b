#pragma once

#include <stdexcept>
#include <string>

namespace latentcloak {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ScheduleError : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    using Error::Error;
};

class InversionError : public Error {
public:
    using Error::Error;
};

class AttentionError : public Error {
public:
    using Error::Error;
};

class SurrogateError : public Error {
public:
    using Error::Error;
};

class ProtectError : public Error {
public:
    using Error::Error;
};

class MetricError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Remote verification failures are split so callers can distinguish
// retryable transport problems from permanent protocol/auth ones.
class VerifyError : public Error {
public:
    using Error::Error;
};

class VerifyAuthError : public VerifyError {
public:
    using VerifyError::VerifyError;
};

class VerifyTimeoutError : public VerifyError {
public:
    using VerifyError::VerifyError;
};

class VerifyProtocolError : public VerifyError {
public:
    using VerifyError::VerifyError;
};

} // namespace latentcloak
