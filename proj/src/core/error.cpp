#include "gap/error.hpp"

namespace gap {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::SeedBlobMissing: return "SeedBlobMissing";
        case Errc::InvalidSeed: return "InvalidSeed";
        case Errc::UnconfirmedRecording: return "UnconfirmedRecording";
        case Errc::GenerationFull: return "GenerationFull";
        case Errc::IndexMismatch: return "IndexMismatch";
        case Errc::DuplicateVote: return "DuplicateVote";
        case Errc::InvalidChoice: return "InvalidChoice";
        case Errc::QuorumClosed: return "QuorumClosed";
        case Errc::QuorumIncomplete: return "QuorumIncomplete";
        case Errc::NotTallied: return "NotTallied";
        case Errc::ChainIncomplete: return "ChainIncomplete";
        case Errc::InvalidState: return "InvalidState";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::NoWorkAvailable: return "NoWorkAvailable";
        case Errc::RoleMismatch: return "RoleMismatch";
        case Errc::NotEligible: return "NotEligible";
        case Errc::ConfirmationRequired: return "ConfirmationRequired";
        case Errc::TrialExpired: return "TrialExpired";
        case Errc::AlreadySubmitted: return "AlreadySubmitted";
        case Errc::InsufficientStimuli: return "InsufficientStimuli";
        case Errc::UnknownEntity: return "UnknownEntity";
        case Errc::InvalidAnnotation: return "InvalidAnnotation";
        case Errc::IncompleteAnswers: return "IncompleteAnswers";
        case Errc::UndefinedCorrelation: return "UndefinedCorrelation";
        case Errc::IncompleteScreening: return "IncompleteScreening";
        case Errc::TooFewCandidates: return "TooFewCandidates";
        case Errc::InvalidGeneration: return "InvalidGeneration";
        case Errc::InsufficientData: return "InsufficientData";
        case Errc::DegenerateBandwidth: return "DegenerateBandwidth";
        case Errc::EmptyToken: return "EmptyToken";
        case Errc::InsufficientLabels: return "InsufficientLabels";
        case Errc::UndefinedSkewness: return "UndefinedSkewness";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::InvalidEvent: return "InvalidEvent";
        case Errc::StorageError: return "StorageError";
        case Errc::CorruptLog: return "CorruptLog";
        case Errc::ImportError: return "ImportError";
        case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace gap
