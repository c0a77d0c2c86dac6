#include "qvsolve/errors.hpp"

namespace qvsolve {

ErrorCategory category_of(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DimensionMismatch:
        case ErrorKind::NotSubgenerator:
        case ErrorKind::NotGenerator:
        case ErrorKind::Unstable:
        case ErrorKind::Reducible:
        case ErrorKind::BadConfig:
        case ErrorKind::ImproperArrivalLaw:
            return ErrorCategory::Validation;
        case ErrorKind::IoFailure:
        case ErrorKind::ParseFailure:
            return ErrorCategory::Io;
        default:
            return ErrorCategory::Numerical;
    }
}

const char* name_of(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::NotSubgenerator: return "NotSubgenerator";
        case ErrorKind::NotGenerator: return "NotGenerator";
        case ErrorKind::Unstable: return "Unstable";
        case ErrorKind::Reducible: return "Reducible";
        case ErrorKind::BadConfig: return "BadConfig";
        case ErrorKind::ImproperArrivalLaw: return "ImproperArrivalLaw";
        case ErrorKind::SingularMatrix: return "SingularMatrix";
        case ErrorKind::SingularResolvent: return "SingularResolvent";
        case ErrorKind::TailBoundExceeded: return "TailBoundExceeded";
        case ErrorKind::TruncationTooSmall: return "TruncationTooSmall";
        case ErrorKind::NegativeEntry: return "NegativeEntry";
        case ErrorKind::RootCountMismatch: return "RootCountMismatch";
        case ErrorKind::PolishDivergence: return "PolishDivergence";
        case ErrorKind::MultipleRootsUnsupported: return "MultipleRootsUnsupported";
        case ErrorKind::NoRealSolutionInBracket: return "NoRealSolutionInBracket";
        case ErrorKind::OrderExceedsRoots: return "OrderExceedsRoots";
        case ErrorKind::IllConditioned: return "IllConditioned";
        case ErrorKind::ConjugateAsymmetry: return "ConjugateAsymmetry";
        case ErrorKind::NegativeProbability: return "NegativeProbability";
        case ErrorKind::MassDefect: return "MassDefect";
        case ErrorKind::NormalizationFailure: return "NormalizationFailure";
        case ErrorKind::SeriesDivergence: return "SeriesDivergence";
        case ErrorKind::DegenerateVariance: return "DegenerateVariance";
        case ErrorKind::ComplexDenominatorRoots: return "ComplexDenominatorRoots";
        case ErrorKind::SingularPadeSystem: return "SingularPadeSystem";
        case ErrorKind::Overflow: return "Overflow";
        case ErrorKind::IoFailure: return "IoFailure";
        case ErrorKind::ParseFailure: return "ParseFailure";
    }
    return "UnknownError";
}

}  // namespace qvsolve
