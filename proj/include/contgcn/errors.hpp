#pragma once

#include <stdexcept>
#include <string>

namespace contgcn {

// Process exit codes used by the CLI. Library code throws Error with the
// matching kind; the CLI maps kind -> exit code.
enum class ErrorKind { Usage = 1, Data = 2, Numerical = 3 };

enum class ErrorCode {
  Io,
  DuplicateToken,
  MissingSpecialToken,
  EmptyVocabulary,
  TokenOutOfRange,
  EmptyMemory,
  ZeroLengthDocument,
  ChecksumMismatch,
  BadFormat,
  VersionMismatch,
  MissingDocumentKey,
  DimMismatch,
  MalformedRow,
  DuplicateId,
  BadRatio,
  InvalidLabel,
  NonFinite,
  BadConfig,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), kind_(kind), code_(code) {}

  ErrorKind kind() const noexcept { return kind_; }
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  ErrorCode code_;
};

inline Error usage_error(ErrorCode code, const std::string& msg) {
  return Error(ErrorKind::Usage, code, msg);
}
inline Error data_error(ErrorCode code, const std::string& msg) {
  return Error(ErrorKind::Data, code, msg);
}
inline Error numerical_error(ErrorCode code, const std::string& msg) {
  return Error(ErrorKind::Numerical, code, msg);
}

}  // namespace contgcn
