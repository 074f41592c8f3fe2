#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pagescope {

enum class Errc {
  UnsupportedEvent,
  PermissionDenied,
  MismatchedRegion,
  NoOpenRegion,
  CounterWentBackward,
  ZeroCycles,
  NegativeInterval,
  InvalidCpuSpec,
  MissingField,
  MalformedLine,
  MalformedThpState,
  SystemWriteForbidden,
  IndexOutOfBounds,
  EmptyLayout,
  AllocationFailure,
  InvalidTlbConfig,
  WorkloadFailed,
  CounterUnavailable,
  InvalidConfig,
  Io,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::UnsupportedEvent: return "UnsupportedEvent";
    case Errc::PermissionDenied: return "PermissionDenied";
    case Errc::MismatchedRegion: return "MismatchedRegion";
    case Errc::NoOpenRegion: return "NoOpenRegion";
    case Errc::CounterWentBackward: return "CounterWentBackward";
    case Errc::ZeroCycles: return "ZeroCycles";
    case Errc::NegativeInterval: return "NegativeInterval";
    case Errc::InvalidCpuSpec: return "InvalidCpuSpec";
    case Errc::MissingField: return "MissingField";
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::MalformedThpState: return "MalformedThpState";
    case Errc::SystemWriteForbidden: return "SystemWriteForbidden";
    case Errc::IndexOutOfBounds: return "IndexOutOfBounds";
    case Errc::EmptyLayout: return "EmptyLayout";
    case Errc::AllocationFailure: return "AllocationFailure";
    case Errc::InvalidTlbConfig: return "InvalidTlbConfig";
    case Errc::WorkloadFailed: return "WorkloadFailed";
    case Errc::CounterUnavailable: return "CounterUnavailable";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace pagescope
