#pragma once

#include <stdexcept>
#include <string>

namespace monas {

// All recoverable failures carry a stable machine-readable code next to the
// human-readable message. The CLI prints the code in its error line.
class Error : public std::runtime_error {
public:
    Error(std::string code, std::string message)
        : std::runtime_error(code + ": " + message),
          code_(std::move(code)),
          message_(std::move(message)) {}

    const std::string& code() const { return code_; }
    const std::string& message() const { return message_; }

private:
    std::string code_;
    std::string message_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, const std::string& code, const std::string& message) {
    if (!condition) {
        fail(code, message);
    }
}

} // namespace monas
