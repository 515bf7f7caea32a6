#pragma once

#include <stdexcept>
#include <string>

namespace gaussdrift {

// All failures carry a short machine-parsable category ("config", "data",
// "numerics", "usage") plus a human-readable message. The CLI prints
// "error: <category>: <message>" and exits nonzero.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(message), category_(std::move(category)) {}

    const std::string& category() const { return category_; }

private:
    std::string category_;
};

inline Error config_error(const std::string& msg) { return Error("config", msg); }
inline Error data_error(const std::string& msg) { return Error("data", msg); }
inline Error numerics_error(const std::string& msg) { return Error("numerics", msg); }
inline Error usage_error(const std::string& msg) { return Error("usage", msg); }

}  // namespace gaussdrift
