#include "spikelab/errors.hpp"

namespace spikelab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonPositiveEigenvalue: return "NonPositiveEigenvalue";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::PoleViolation: return "PoleViolation";
    case ErrorCode::NoRootFound: return "NoRootFound";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::BranchAmbiguity: return "BranchAmbiguity";
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingleGroup: return "SingleGroup";
    case ErrorCode::NonPositiveBhat: return "NonPositiveBhat";
    case ErrorCode::SingularQ: return "SingularQ";
    case ErrorCode::ClusterMismatch: return "ClusterMismatch";
    case ErrorCode::BelowEdge: return "BelowEdge";
    case ErrorCode::WrongClusterCount: return "WrongClusterCount";
    case ErrorCode::EmptyCluster: return "EmptyCluster";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::MissingOracle: return "MissingOracle";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::StudyAborted: return "StudyAborted";
  }
  return "Unknown";
}

}  // namespace spikelab
