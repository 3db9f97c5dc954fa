#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tracksieve {

enum class Errc {
  kUnparseableMessage,
  kMalformedUrl,
  kInvalidTemplate,
  kSingleClassData,
  kMtryTooLarge,
  kInvalidHyperparameter,
  kMissingExcludedFeatures,
  kSchemaMismatch,
  kUnsupportedKind,
  kEmptySplit,
  kTooFewCompanies,
  kDegenerateInput,
  kNonEmptyOutput,
  kIo,
  kConfig,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kUnparseableMessage: return "UnparseableMessage";
    case Errc::kMalformedUrl: return "MalformedUrl";
    case Errc::kInvalidTemplate: return "InvalidTemplate";
    case Errc::kSingleClassData: return "SingleClassData";
    case Errc::kMtryTooLarge: return "MtryTooLarge";
    case Errc::kInvalidHyperparameter: return "InvalidHyperparameter";
    case Errc::kMissingExcludedFeatures: return "MissingExcludedFeatures";
    case Errc::kSchemaMismatch: return "SchemaMismatch";
    case Errc::kUnsupportedKind: return "UnsupportedKind";
    case Errc::kEmptySplit: return "EmptySplit";
    case Errc::kTooFewCompanies: return "TooFewCompanies";
    case Errc::kDegenerateInput: return "DegenerateInput";
    case Errc::kNonEmptyOutput: return "NonEmptyOutput";
    case Errc::kIo: return "IoError";
    case Errc::kConfig: return "ConfigError";
  }
  return "Unknown";
}

// Every failure the library reports is an Error carrying one of the codes
// above; callers that need to branch on the failure kind inspect code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace tracksieve
