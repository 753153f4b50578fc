#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mismed {

enum class ErrorKind {
  Configuration,
  RankDeficiency,
  Evaluation,
  DegenerateSubject,
  Unidentifiable,
  CorrectionInfeasible,
  UnsupportedFamily,
  MissingColumn,
  MediatorCode,
  MalformedInput,
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Thrown when the weighted information matrix is singular; `columns` lists
// the design columns found to be linear combinations of earlier ones.
class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(std::vector<std::string> columns, const std::string& what)
      : Error(ErrorKind::RankDeficiency, what), columns_(std::move(columns)) {}
  const std::vector<std::string>& columns() const noexcept { return columns_; }

 private:
  std::vector<std::string> columns_;
};

class DegenerateSubjectError : public Error {
 public:
  DegenerateSubjectError(long row, const std::string& what)
      : Error(ErrorKind::DegenerateSubject, what), row_(row) {}
  long row() const noexcept { return row_; }

 private:
  long row_;
};

class CorrectionInfeasibleError : public Error {
 public:
  CorrectionInfeasibleError(double eigenvalue, const std::string& what)
      : Error(ErrorKind::CorrectionInfeasible, what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const noexcept { return eigenvalue_; }

 private:
  double eigenvalue_;
};

}  // namespace mismed
