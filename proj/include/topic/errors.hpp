#pragma once

#include <stdexcept>
#include <string>

namespace topic {

// Caller passed arguments that violate an operation's preconditions.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Object is in a state the operation cannot work with (empty graph, missing
// class node, ...).
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A loss or parameter went non-finite.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace topic
