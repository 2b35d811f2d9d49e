#pragma once

#include <stdexcept>
#include <string>

namespace nmzi {

/// A graph or scenario violates a structural/semantic constraint.
class validation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Text input (scenario file, CSV) could not be parsed.
/// Carries a 1-based line number when one is known.
class parse_error : public std::runtime_error {
public:
    explicit parse_error(const std::string &msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_(line)
    {
    }

    int line() const noexcept { return line_; }

private:
    int line_ = 0;
};

/// Filesystem / stream failure while reading or writing artifacts.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Phase scan found no usable power at any phase.
class degenerate_visibility_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Requested visibility cannot be reached by the calibration knob.
class unreachable_target_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Band integral is zero; spectrum cannot be normalized.
class degenerate_normalization_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Weak values are undefined because the detector amplitude vanishes.
class ill_conditioned_weak_value_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

} // namespace nmzi
