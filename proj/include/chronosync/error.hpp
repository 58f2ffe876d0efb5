#pragma once

#include <stdexcept>
#include <string>

namespace chronosync {

enum class ErrorKind {
  InvalidArgument,
  InvalidEdge,
  DisconnectedGraph,
  DimensionMismatch,
  MissingNeighborSample,
  DisturbanceOutOfBound,
  NotExpired,
  NotInJumpSet,
  TauOutOfRange,
  NotFeasible,
  CertificateMismatch,
  InsufficientTransient,
  ZenoGuard,
  NumericalBlowup,
  InvalidConfig,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidEdge: return "InvalidEdge";
    case ErrorKind::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::MissingNeighborSample: return "MissingNeighborSample";
    case ErrorKind::DisturbanceOutOfBound: return "DisturbanceOutOfBound";
    case ErrorKind::NotExpired: return "NotExpired";
    case ErrorKind::NotInJumpSet: return "NotInJumpSet";
    case ErrorKind::TauOutOfRange: return "TauOutOfRange";
    case ErrorKind::NotFeasible: return "NotFeasible";
    case ErrorKind::CertificateMismatch: return "CertificateMismatch";
    case ErrorKind::InsufficientTransient: return "InsufficientTransient";
    case ErrorKind::ZenoGuard: return "ZenoGuard";
    case ErrorKind::NumericalBlowup: return "NumericalBlowup";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind so the
/// CLI can map it onto a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace chronosync
