#include "setexp/error.hpp"

namespace setexp {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "IoError";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::InvalidTree: return "InvalidTree";
    case ErrorKind::UnknownTerm: return "UnknownTerm";
    case ErrorKind::EmptyNormalization: return "EmptyNormalization";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::Divergence: return "DivergenceError";
    case ErrorKind::MissingTerm: return "MissingTerm";
    case ErrorKind::Format: return "FormatError";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::Shape: return "ShapeError";
    case ErrorKind::NoSignal: return "NoSignal";
    case ErrorKind::UndefinedMetric: return "UndefinedMetric";
    case ErrorKind::Conflict: return "Conflict";
    case ErrorKind::NotFound: return "NotFound";
  }
  return "Error";
}

}  // namespace setexp
