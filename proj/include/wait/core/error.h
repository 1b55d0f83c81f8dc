#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace waitsec {

// Error taxonomy shared by every module. Wire names are the ERR_* strings.
enum class ErrorCode {
  kEncoding,
  kBadKey,
  kHeaderSyntax,
  kUrl,
  kRange,
  kStorage,
  kBadSignature,
  kStaleTimestamp,
  kActivePromise,
  kUnknownLeaf,
  kParse,
  kExternalDynamic,
  kIo,
  kNetwork,
  kLogRejected,
  kSriSyntax,
  kLogEquivocation,
  kConfig,
  kSetup,
  kUnexpectedVerdict,
};

std::string_view error_code_name(ErrorCode code);
std::optional<ErrorCode> error_code_from_name(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  std::string_view code_name() const { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace waitsec
