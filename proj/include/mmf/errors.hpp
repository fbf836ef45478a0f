#pragma once

#include <stdexcept>
#include <string>

namespace mmf {

/// Input violates a documented precondition (bad model, bad payoff, bad flag).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A brute-force enumeration would exceed its configured size cap.
class CapExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultPathCap = 10'000'000;

} // namespace mmf
