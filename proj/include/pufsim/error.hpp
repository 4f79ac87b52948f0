#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pufsim {

enum class ErrorKind {
  InvalidArgument,
  InvalidSpec,
  ExtrapolationRefused,
  EmptySignature,
  InsufficientLength,
  Io,
  Config,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so callers (and the CLI)
/// can react without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::InvalidSpec: return "invalid-spec";
    case ErrorKind::ExtrapolationRefused: return "extrapolation-refused";
    case ErrorKind::EmptySignature: return "empty-signature";
    case ErrorKind::InsufficientLength: return "insufficient-length";
    case ErrorKind::Io: return "io";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

}  // namespace pufsim
