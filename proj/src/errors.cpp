#include "mismed/errors.hpp"

namespace mismed {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::RankDeficiency: return "rank-deficiency";
    case ErrorKind::Evaluation: return "evaluation";
    case ErrorKind::DegenerateSubject: return "degenerate-subject";
    case ErrorKind::Unidentifiable: return "unidentifiable";
    case ErrorKind::CorrectionInfeasible: return "correction-infeasible";
    case ErrorKind::UnsupportedFamily: return "unsupported-family";
    case ErrorKind::MissingColumn: return "missing-column";
    case ErrorKind::MediatorCode: return "mediator-code";
    case ErrorKind::MalformedInput: return "malformed-input";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace mismed
