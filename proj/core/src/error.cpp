#include "nmtk/error.hpp"

namespace nmtk {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Format: return "Format";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::VocabTooSmall: return "VocabTooSmall";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::SingleClassCorpus: return "SingleClassCorpus";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::EmptyCorpusList: return "EmptyCorpusList";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NameSetMismatch: return "NameSetMismatch";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::VocabMismatch: return "VocabMismatch";
    case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::NoCompletedHypothesis: return "NoCompletedHypothesis";
    case ErrorCode::SearchSpaceTooLarge: return "SearchSpaceTooLarge";
    case ErrorCode::EmptyCandidateList: return "EmptyCandidateList";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::UnknownSubcommand: return "UnknownSubcommand";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace nmtk
