#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cloze {

enum class Errc {
  // corpus
  MissingPlaceholder,
  WrongCandidateCount,
  BadLabel,
  BadScore,
  MalformedRow,
  DuplicateId,
  // preprocess
  NoPlaceholder,
  MultiplePlaceholders,
  TooManyWords,
  // scores
  UnknownCandidate,
  AllTokensOOV,
  ZeroVector,
  DimensionMismatch,
  InsufficientTopK,
  MissingScore,
  EmptyCorpus,
  // models
  MissingClass,
  WidthMismatch,
  NegativeFeature,
  NonFinite,
  RankDeficient,
  InvalidHyperparameter,
  // eval
  LengthMismatch,
  Empty,
  ConstantVector,
  // cli / io
  ConfigInvalid,
  IncompatibleHeadSource,
  Io,
  Parse,
};

constexpr std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::MissingPlaceholder: return "MissingPlaceholder";
    case Errc::WrongCandidateCount: return "WrongCandidateCount";
    case Errc::BadLabel: return "BadLabel";
    case Errc::BadScore: return "BadScore";
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::NoPlaceholder: return "NoPlaceholder";
    case Errc::MultiplePlaceholders: return "MultiplePlaceholders";
    case Errc::TooManyWords: return "TooManyWords";
    case Errc::UnknownCandidate: return "UnknownCandidate";
    case Errc::AllTokensOOV: return "AllTokensOOV";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InsufficientTopK: return "InsufficientTopK";
    case Errc::MissingScore: return "MissingScore";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::MissingClass: return "MissingClass";
    case Errc::WidthMismatch: return "WidthMismatch";
    case Errc::NegativeFeature: return "NegativeFeature";
    case Errc::NonFinite: return "NonFinite";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::InvalidHyperparameter: return "InvalidHyperparameter";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::Empty: return "Empty";
    case Errc::ConstantVector: return "ConstantVector";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::IncompatibleHeadSource: return "IncompatibleHeadSource";
    case Errc::Io: return "Io";
    case Errc::Parse: return "Parse";
  }
  return "Unknown";
}

/// Every failure in the library surfaces as this exception; `code()` names the
/// failure class and `what()` carries "<Code>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace cloze
