#pragma once

#include <stdexcept>
#include <string>

namespace siv {

// Error categories map one-to-one onto the C API status codes and the CLI
// exit codes (input = 2, numeric = 3, scope = 4).
enum class ErrorKind { Input, Numeric, Scope };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail_input(const std::string& what) { throw Error(ErrorKind::Input, what); }
[[noreturn]] inline void fail_numeric(const std::string& what) { throw Error(ErrorKind::Numeric, what); }
[[noreturn]] inline void fail_scope(const std::string& what) { throw Error(ErrorKind::Scope, what); }

}  // namespace siv
