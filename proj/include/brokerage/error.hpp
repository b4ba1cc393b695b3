#pragma once

#include <stdexcept>
#include <string>

namespace brokerage {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Operation invoked on an object in the wrong state (e.g. bisecting an internal cell).
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A hard representational limit was hit (e.g. maximum dyadic level).
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Learner and feedback model disagree.
class ProtocolError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Randomized constructor could not satisfy its postcondition within its retry budget.
class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UndefinedRatioError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace brokerage
