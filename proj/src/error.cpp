#include "sinointerp/error.hpp"

namespace sinointerp {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadGeometry: return "BadGeometry";
    case ErrorCode::ConstantSinogram: return "ConstantSinogram";
    case ErrorCode::IndivisibleAngles: return "IndivisibleAngles";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::BadRatio: return "BadRatio";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TopologyMismatch: return "TopologyMismatch";
    case ErrorCode::BadWidths: return "BadWidths";
    case ErrorCode::LengthNotDivisible: return "LengthNotDivisible";
    case ErrorCode::BadOffset: return "BadOffset";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::RatioMismatch: return "RatioMismatch";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::Io: return "IoError";
  }
  return "Unknown";
}

}  // namespace sinointerp
