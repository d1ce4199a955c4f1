#pragma once

#include <stdexcept>
#include <string>

namespace vecurve {

// Base class for all library errors.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid input: bad schema, out-of-range values, malformed files.
// CLI maps these to exit code 2.
class validation_error : public error {
 public:
  explicit validation_error(const std::string& msg) : error(msg) {}
};

// Structurally inconsistent counting-process input (gaps, overlaps,
// reversed intervals).
class structural_error : public validation_error {
 public:
  explicit structural_error(const std::string& msg) : validation_error(msg) {}
};

// Numerical failure: degenerate data, non-convergence, unsupported
// parameter regions. CLI maps these to exit code 3.
class numeric_error : public error {
 public:
  explicit numeric_error(const std::string& msg) : error(msg) {}
};

class degenerate_data_error : public numeric_error {
 public:
  explicit degenerate_data_error(const std::string& msg) : numeric_error(msg) {}
};

class domain_error : public numeric_error {
 public:
  explicit domain_error(const std::string& msg) : numeric_error(msg) {}
};

}  // namespace vecurve
