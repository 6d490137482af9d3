#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace qtraj {

using Complex = std::complex<double>;

inline constexpr Complex kI{0.0, 1.0};

/// Physical type of a single degree of freedom.
enum class PhysicalType { Field, Spin, Atom };

const char* to_string(PhysicalType type);

/// Error categories. The C API maps these one-to-one onto status codes.
enum class ErrorCode {
  InvalidArgument = 1,
  StructureMismatch,
  TypeMismatch,
  Parse,
  Numeric,
  Io,
  Validation,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qtraj
