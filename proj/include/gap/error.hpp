#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gap {

enum class Errc {
    // core
    SeedBlobMissing,
    InvalidSeed,
    UnconfirmedRecording,
    GenerationFull,
    IndexMismatch,
    DuplicateVote,
    InvalidChoice,
    QuorumClosed,
    QuorumIncomplete,
    NotTallied,
    ChainIncomplete,
    InvalidState,
    InvalidConfig,
    // allocation
    NoWorkAvailable,
    RoleMismatch,
    NotEligible,
    ConfirmationRequired,
    TrialExpired,
    AlreadySubmitted,
    InsufficientStimuli,
    UnknownEntity,
    InvalidAnnotation,
    // screening
    IncompleteAnswers,
    UndefinedCorrelation,
    IncompleteScreening,
    // simagents
    TooFewCandidates,
    // analysis
    InvalidGeneration,
    InsufficientData,
    DegenerateBandwidth,
    EmptyToken,
    InsufficientLabels,
    UndefinedSkewness,
    EmptyInput,
    // service
    InvalidEvent,
    StorageError,
    CorruptLog,
    ImportError,
    InvalidArgument,
};

std::string_view errc_name(Errc code) noexcept;

/// Domain failure carrying a stable code. `subject` names the entity the
/// failure refers to (for AlreadySubmitted: the id of the original result).
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message, std::string subject = {})
        : std::runtime_error(std::string(errc_name(code)) + ": " + message),
          code_(code),
          subject_(std::move(subject)) {}

    Errc code() const noexcept { return code_; }
    const std::string& subject() const noexcept { return subject_; }

private:
    Errc code_;
    std::string subject_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message, std::string subject = {}) {
    throw Error(code, message, std::move(subject));
}

}  // namespace gap
