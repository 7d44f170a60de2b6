#pragma once

#include <stdexcept>
#include <string>

namespace vwsd {

/// Raised for malformed or inconsistent input: bad files, schema violations,
/// missing embeddings. The CLI maps it to exit code 2.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace vwsd
