#include "tutorlens/error.hpp"

#include <array>
#include <utility>

namespace tutorlens {

namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 25> kNames{{
    {ErrorCode::EmptyTranscript, "EmptyTranscript"},
    {ErrorCode::BadHeader, "BadHeader"},
    {ErrorCode::UnknownSpeaker, "UnknownSpeaker"},
    {ErrorCode::NonContiguousTurns, "NonContiguousTurns"},
    {ErrorCode::MalformedRow, "MalformedRow"},
    {ErrorCode::UnknownStrategy, "UnknownStrategy"},
    {ErrorCode::InvalidLabel, "InvalidLabel"},
    {ErrorCode::DuplicateAnnotation, "DuplicateAnnotation"},
    {ErrorCode::TargetNotTutor, "TargetNotTutor"},
    {ErrorCode::IndexOutOfRange, "IndexOutOfRange"},
    {ErrorCode::UnparseableLabel, "UnparseableLabel"},
    {ErrorCode::InvalidStrategyContent, "InvalidStrategyContent"},
    {ErrorCode::ProviderUnavailable, "ProviderUnavailable"},
    {ErrorCode::MissingFixtureEntry, "MissingFixtureEntry"},
    {ErrorCode::AuthMissing, "AuthMissing"},
    {ErrorCode::FixtureWriteFailed, "FixtureWriteFailed"},
    {ErrorCode::InvalidConfig, "InvalidConfig"},
    {ErrorCode::NotFound, "NotFound"},
    {ErrorCode::IdConflict, "IdConflict"},
    {ErrorCode::InvalidId, "InvalidId"},
    {ErrorCode::StoreCorrupt, "StoreCorrupt"},
    {ErrorCode::StorageFailed, "StorageFailed"},
    {ErrorCode::TranscriptMismatch, "TranscriptMismatch"},
    {ErrorCode::BadRequest, "BadRequest"},
    {ErrorCode::RunInProgress, "RunInProgress"},
}};

std::string format_message(ErrorCode code, const std::string& message, std::optional<std::size_t> row) {
    std::string out(to_string(code));
    if (row) out += " (row " + std::to_string(*row) + ")";
    if (!message.empty()) out += ": " + message;
    return out;
}

}  // namespace

std::string_view to_string(ErrorCode code) {
    for (const auto& [c, name] : kNames) {
        if (c == code) return name;
    }
    return "Unknown";
}

std::optional<ErrorCode> error_code_from_string(std::string_view name) {
    for (const auto& [c, n] : kNames) {
        if (n == name) return c;
    }
    return std::nullopt;
}

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> row)
    : std::runtime_error(format_message(code, message, row)), code_(code), detail_(message), row_(row) {}

}  // namespace tutorlens
