#pragma once

#include <stdexcept>
#include <string>

namespace perslit {

enum class ErrorCode {
    CutoffDegenerate,
    NonConvergent,
    DomainMismatch,
    ModalSingularity,
    SlitResonance,
    QuadratureFailure,
    SingularOperator,
    IllConditioned,
    BranchPole,
    OutOfRange,
    DegenerateSlope,
    CutoffProximity,
    AboveLightLine,
    GrazingIncidence,
    SingularSystem,
    NoRoot,
    CrossoverSigma,
    OutsideInterior,
    ModeDegenerate,
    RegionAmbiguous,
    InvalidArgument,
    ParseError,
    ValidationError,
    IoError,
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::CutoffDegenerate: return "CutoffDegenerate";
        case ErrorCode::NonConvergent: return "NonConvergent";
        case ErrorCode::DomainMismatch: return "DomainMismatch";
        case ErrorCode::ModalSingularity: return "ModalSingularity";
        case ErrorCode::SlitResonance: return "SlitResonance";
        case ErrorCode::QuadratureFailure: return "QuadratureFailure";
        case ErrorCode::SingularOperator: return "SingularOperator";
        case ErrorCode::IllConditioned: return "IllConditioned";
        case ErrorCode::BranchPole: return "BranchPole";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::DegenerateSlope: return "DegenerateSlope";
        case ErrorCode::CutoffProximity: return "CutoffProximity";
        case ErrorCode::AboveLightLine: return "AboveLightLine";
        case ErrorCode::GrazingIncidence: return "GrazingIncidence";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::NoRoot: return "NoRoot";
        case ErrorCode::CrossoverSigma: return "CrossoverSigma";
        case ErrorCode::OutsideInterior: return "OutsideInterior";
        case ErrorCode::ModeDegenerate: return "ModeDegenerate";
        case ErrorCode::RegionAmbiguous: return "RegionAmbiguous";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

class ParseFailure : public Error {
public:
    ParseFailure(int line, int column, const std::string& what)
        : Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
          line_(line), column_(column) {}
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_, column_;
};

}  // namespace perslit
