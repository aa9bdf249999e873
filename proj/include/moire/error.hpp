#pragma once

#include <stdexcept>
#include <string>

namespace moire {

enum class ErrorKind {
  InvalidLattice,
  Range,
  SeedNotOnLevel,
  TooShortLine,
  ZeroAnnihilator,
  NoOpenLines,
  InvalidArgument,
  Parse,
  Io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidLattice: return "invalid-lattice";
    case ErrorKind::Range: return "range";
    case ErrorKind::SeedNotOnLevel: return "seed-not-on-level";
    case ErrorKind::TooShortLine: return "too-short-line";
    case ErrorKind::ZeroAnnihilator: return "zero-annihilator";
    case ErrorKind::NoOpenLines: return "no-open-lines";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace moire
