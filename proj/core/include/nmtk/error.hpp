#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nmtk {

enum class ErrorCode {
  InvalidArgument,
  Io,
  Format,
  EmptyCorpus,
  VocabTooSmall,
  UnknownId,
  SingleClassCorpus,
  EmptyText,
  EmptyCorpusList,
  EmptyClass,
  ShapeMismatch,
  NameSetMismatch,
  EmptyList,
  VocabMismatch,
  EmptyEnsemble,
  NoCompletedHypothesis,
  SearchSpaceTooLarge,
  EmptyCandidateList,
  LengthMismatch,
  EmptyReference,
  MalformedLine,
  UnknownSubcommand,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. `code()` is stable and printed by the CLI as the
/// machine-readable part of an error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace nmtk
