#include "wait/core/error.h"

#include <array>
#include <utility>

namespace waitsec {
namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 20> kNames = {{
    {ErrorCode::kEncoding, "ERR_ENCODING"},
    {ErrorCode::kBadKey, "ERR_BAD_KEY"},
    {ErrorCode::kHeaderSyntax, "ERR_HEADER_SYNTAX"},
    {ErrorCode::kUrl, "ERR_URL"},
    {ErrorCode::kRange, "ERR_RANGE"},
    {ErrorCode::kStorage, "ERR_STORAGE"},
    {ErrorCode::kBadSignature, "ERR_BAD_SIGNATURE"},
    {ErrorCode::kStaleTimestamp, "ERR_STALE_TIMESTAMP"},
    {ErrorCode::kActivePromise, "ERR_ACTIVE_PROMISE"},
    {ErrorCode::kUnknownLeaf, "ERR_UNKNOWN_LEAF"},
    {ErrorCode::kParse, "ERR_PARSE"},
    {ErrorCode::kExternalDynamic, "ERR_EXTERNAL_DYNAMIC"},
    {ErrorCode::kIo, "ERR_IO"},
    {ErrorCode::kNetwork, "ERR_NETWORK"},
    {ErrorCode::kLogRejected, "ERR_LOG_REJECTED"},
    {ErrorCode::kSriSyntax, "ERR_SRI_SYNTAX"},
    {ErrorCode::kLogEquivocation, "ERR_LOG_EQUIVOCATION"},
    {ErrorCode::kConfig, "ERR_CONFIG"},
    {ErrorCode::kSetup, "ERR_SETUP"},
    {ErrorCode::kUnexpectedVerdict, "ERR_UNEXPECTED_VERDICT"},
}};

}  // namespace

std::string_view error_code_name(ErrorCode code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "ERR_UNKNOWN";
}

std::optional<ErrorCode> error_code_from_name(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  return std::nullopt;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

}  // namespace waitsec
