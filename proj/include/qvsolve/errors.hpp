#pragma once

#include <stdexcept>
#include <string>

namespace qvsolve {

// Error taxonomy. The CLI maps categories to exit codes:
// validation -> 2, numerical -> 3, io -> 4.
enum class ErrorKind {
    // validation
    DimensionMismatch,
    NotSubgenerator,
    NotGenerator,
    Unstable,
    Reducible,
    BadConfig,
    ImproperArrivalLaw,
    // numerical
    SingularMatrix,
    SingularResolvent,
    TailBoundExceeded,
    TruncationTooSmall,
    NegativeEntry,
    RootCountMismatch,
    PolishDivergence,
    MultipleRootsUnsupported,
    NoRealSolutionInBracket,
    OrderExceedsRoots,
    IllConditioned,
    ConjugateAsymmetry,
    NegativeProbability,
    MassDefect,
    NormalizationFailure,
    SeriesDivergence,
    DegenerateVariance,
    ComplexDenominatorRoots,
    SingularPadeSystem,
    Overflow,
    // io
    IoFailure,
    ParseFailure,
};

enum class ErrorCategory { Validation, Numerical, Io };

ErrorCategory category_of(ErrorKind kind);
const char* name_of(ErrorKind kind);

class SolverError : public std::runtime_error {
public:
    SolverError(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(name_of(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }
    ErrorCategory category() const { return category_of(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw SolverError(kind, what);
}

}  // namespace qvsolve
