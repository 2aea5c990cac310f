#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace higs {

enum class Errc {
    DuplicateNid,
    InvalidGeometry,
    UnknownNid,
    StrongParentConflict,
    StrongCycle,
    DuplicateEdge,
    NotUpright,
    EmptySet,
    TooFewVectors,
    RelationMismatch,
    EmptyScene,
    DegenerateAnchor,
    UnknownAnchor,
    NidOverflow,
    MissingFloor,
    AllEmpty,
    InvalidArgument,
    AdapterFailure,
    ReplayDivergence,
    SchemaVersionMismatch,
    CorruptFile,
};

constexpr std::string_view to_string(Errc c) {
    switch (c) {
        case Errc::DuplicateNid: return "DuplicateNid";
        case Errc::InvalidGeometry: return "InvalidGeometry";
        case Errc::UnknownNid: return "UnknownNid";
        case Errc::StrongParentConflict: return "StrongParentConflict";
        case Errc::StrongCycle: return "StrongCycle";
        case Errc::DuplicateEdge: return "DuplicateEdge";
        case Errc::NotUpright: return "NotUpright";
        case Errc::EmptySet: return "EmptySet";
        case Errc::TooFewVectors: return "TooFewVectors";
        case Errc::RelationMismatch: return "RelationMismatch";
        case Errc::EmptyScene: return "EmptyScene";
        case Errc::DegenerateAnchor: return "DegenerateAnchor";
        case Errc::UnknownAnchor: return "UnknownAnchor";
        case Errc::NidOverflow: return "NidOverflow";
        case Errc::MissingFloor: return "MissingFloor";
        case Errc::AllEmpty: return "AllEmpty";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::AdapterFailure: return "AdapterFailure";
        case Errc::ReplayDivergence: return "ReplayDivergence";
        case Errc::SchemaVersionMismatch: return "SchemaVersionMismatch";
        case Errc::CorruptFile: return "CorruptFile";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

enum class AdapterCause { Timeout, BadSchema, Remote };

constexpr std::string_view to_string(AdapterCause c) {
    switch (c) {
        case AdapterCause::Timeout: return "Timeout";
        case AdapterCause::BadSchema: return "BadSchema";
        case AdapterCause::Remote: return "Remote";
    }
    return "Unknown";
}

/// Raised when a perception/generation adapter fails; `stage` names the adapter.
class AdapterError : public Error {
public:
    AdapterError(std::string stage, AdapterCause cause, const std::string& detail)
        : Error(Errc::AdapterFailure,
                stage + " (" + std::string(to_string(cause)) + "): " + detail),
          stage_(std::move(stage)),
          cause_(cause) {}

    const std::string& stage() const noexcept { return stage_; }
    AdapterCause cause() const noexcept { return cause_; }

private:
    std::string stage_;
    AdapterCause cause_;
};

}  // namespace higs
