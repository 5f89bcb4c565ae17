#pragma once

#include <stdexcept>
#include <string>

namespace docode {

// Base type for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Configuration / input parsing
struct ParseError : Error { using Error::Error; };
struct OverlapError : Error { using Error::Error; };
struct EmptyCategoryError : Error { using Error::Error; };
struct EmptyTokenError : Error { using Error::Error; };

// Prediction-log ingestion
struct AlignmentError : Error { using Error::Error; };
struct ProbabilityRangeError : Error { using Error::Error; };
struct ArmError : Error { using Error::Error; };
struct UnpairedError : Error { using Error::Error; };
struct KindError : Error { using Error::Error; };
struct MissingSourceError : Error { using Error::Error; };

// Lexing
struct UnterminatedLiteralError : Error { using Error::Error; };
struct UnterminatedCommentError : Error { using Error::Error; };

// Outcomes
struct EmptySequenceError : Error { using Error::Error; };
struct EmptyMapError : Error { using Error::Error; };
struct ZeroMaxError : Error { using Error::Error; };

// Statistics
struct LengthMismatchError : Error { using Error::Error; };
struct ZeroVarianceError : Error { using Error::Error; };
struct EmptyInputError : Error { using Error::Error; };
struct ZeroResamplesError : Error { using Error::Error; };
struct EdgeMismatchError : Error { using Error::Error; };

// Causal graph / estimation
struct CycleError : Error { using Error::Error; };
struct MissingNodeError : Error { using Error::Error; };
struct SingleArmError : Error { using Error::Error; };
struct NonFiniteError : Error { using Error::Error; };
struct RankDeficiencyError : Error { using Error::Error; };
struct EmptyCellError : Error { using Error::Error; };

// Refutation
struct SubsetTooSmallError : Error { using Error::Error; };

// Reporting
struct IoError : Error { using Error::Error; };

} // namespace docode
