#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace latblock {

/// A logarithm or fractional power was requested outside the principal
/// (trace >= 2) branch.
class unsupported_branch : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Text input could not be parsed; `position` is a 0-based character offset.
class parse_error : public std::invalid_argument {
public:
    parse_error(const std::string& what, std::size_t position)
        : std::invalid_argument(what + " (at position " + std::to_string(position) + ")"),
          message_(what),
          position_(position) {}
    std::size_t position() const noexcept { return position_; }
    /// The message without the position suffix.
    const std::string& message() const noexcept { return message_; }

private:
    std::string message_;
    std::size_t position_;
};

/// Thrown when an exact identity that must hold by construction fails.
class consistency_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// The refuter ran out of family members before finding an evading curve.
/// This is never evidence that blocking succeeds.
class budget_exceeded : public std::runtime_error {
public:
    budget_exceeded(const std::string& what, double best_clearance, std::size_t members_tried)
        : std::runtime_error(what), best_clearance_(best_clearance), members_tried_(members_tried) {}
    double best_clearance() const noexcept { return best_clearance_; }
    std::size_t members_tried() const noexcept { return members_tried_; }

private:
    double best_clearance_;
    std::size_t members_tried_;
};

}  // namespace latblock
