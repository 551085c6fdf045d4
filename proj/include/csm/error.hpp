#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace csm {

enum class ErrorKind {
    parse,
    validation,
    conflict,
    invalid_argument,
    alignment,
    insufficient_data,
    singular_design,
    degenerate_selection,
    coverage,
    model_mismatch,
    not_found,
    config,
    io,
};

std::string_view to_string(ErrorKind kind);

/// Exception carrying a machine-readable category alongside the message.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace csm
