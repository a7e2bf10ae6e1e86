#pragma once

#include <stdexcept>
#include <string>

namespace epochsim {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid engine or benchmark configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A model scheduled an event closer than the lookahead, or into an epoch
/// that is already open.
class LookaheadViolation : public Error {
public:
    using Error::Error;
};

/// An object observed a timestamp lower than one it already processed.
class CausalityViolation : public Error {
public:
    using Error::Error;
};

/// An event addressed to an object identifier outside [0, O).
class InvalidObject : public Error {
public:
    using Error::Error;
};

/// Reservation failure or an invalid handle passed to the object allocator.
class AllocError : public Error {
public:
    using Error::Error;
};

/// A model callback raised; carries the object and time it was processing.
class ModelError : public Error {
public:
    using Error::Error;
};

} // namespace epochsim
