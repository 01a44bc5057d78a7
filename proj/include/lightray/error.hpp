#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lightray {

enum class ErrorCode {
  InvalidArgument,
  NotSpaceLike,
  DegenerateXi,
  EmptyAdmissibleSet,
  SingularPerturbation,
  WrongDimension,
  NoEnvelope,
  QuadratureBudgetExceeded,
  OutOfBand,
  RankDeficient,
  InconsistentRows,
  ApertureTooSmall,
  NotOnSurface,
  DegenerateGradient,
  GridBadMagic,
  GridTruncated,
  GridMalformed,
  ConfigInvalid,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotSpaceLike: return "NotSpaceLike";
    case ErrorCode::DegenerateXi: return "DegenerateXi";
    case ErrorCode::EmptyAdmissibleSet: return "EmptyAdmissibleSet";
    case ErrorCode::SingularPerturbation: return "SingularPerturbation";
    case ErrorCode::WrongDimension: return "WrongDimension";
    case ErrorCode::NoEnvelope: return "NoEnvelope";
    case ErrorCode::QuadratureBudgetExceeded: return "QuadratureBudgetExceeded";
    case ErrorCode::OutOfBand: return "OutOfBand";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::InconsistentRows: return "InconsistentRows";
    case ErrorCode::ApertureTooSmall: return "ApertureTooSmall";
    case ErrorCode::NotOnSurface: return "NotOnSurface";
    case ErrorCode::DegenerateGradient: return "DegenerateGradient";
    case ErrorCode::GridBadMagic: return "GridBadMagic";
    case ErrorCode::GridTruncated: return "GridTruncated";
    case ErrorCode::GridMalformed: return "GridMalformed";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so that
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lightray
