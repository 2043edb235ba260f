#pragma once

#include <stdexcept>
#include <string>

namespace amerlsm {

/// Bad input: a violated precondition, invalid parameters or malformed data.
class validation_error : public std::invalid_argument {
public:
    explicit validation_error(const std::string& what) : std::invalid_argument(what) {}
};

/// File could not be opened, read or written.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw validation_error(message);
    }
}

}  // namespace amerlsm
