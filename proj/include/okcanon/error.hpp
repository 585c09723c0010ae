#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace okcanon {

// Library-wide error type. `module` identifies the subsystem that failed so
// the CLI can emit a machine-parsable error line.
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& message)
        : std::runtime_error(message), module_(std::move(module)) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

} // namespace okcanon
