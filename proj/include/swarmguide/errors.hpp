#pragma once

#include <stdexcept>

namespace swarmguide {

// Invalid physical or configuration parameter (mass <= 0, T <= 0, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// NaN/Inf encountered in a state or input.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed runtime input, e.g. non-monotone timestamps.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class StreamError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace swarmguide
