#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smr {

enum class Errc {
  InvalidKey,
  StorageFull,
  NotFound,
  IoError,
  DuplicateName,
  InvalidSpec,
  UnknownFunction,
  UnderflowFree,
  MemoryExceeded,
  Cancelled,
  EmptyManifest,
  MissingPartition,
  ParseError,
  MapPhaseFailed,
  ReducePhaseFailed,
  DegenerateJob,
  JobFailed,
  InvalidArgument,
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidKey: return "InvalidKey";
    case Errc::StorageFull: return "StorageFull";
    case Errc::NotFound: return "NotFound";
    case Errc::IoError: return "IoError";
    case Errc::DuplicateName: return "DuplicateName";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::UnknownFunction: return "UnknownFunction";
    case Errc::UnderflowFree: return "UnderflowFree";
    case Errc::MemoryExceeded: return "MemoryExceeded";
    case Errc::Cancelled: return "Cancelled";
    case Errc::EmptyManifest: return "EmptyManifest";
    case Errc::MissingPartition: return "MissingPartition";
    case Errc::ParseError: return "ParseError";
    case Errc::MapPhaseFailed: return "MapPhaseFailed";
    case Errc::ReducePhaseFailed: return "ReducePhaseFailed";
    case Errc::DegenerateJob: return "DegenerateJob";
    case Errc::JobFailed: return "JobFailed";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the engine carries one of the codes above; the
/// message is for humans only.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace smr
