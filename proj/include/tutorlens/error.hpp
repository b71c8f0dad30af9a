#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tutorlens {

// Machine-readable failure codes. The string form (to_string) is what the
// HTTP API and CLI print, so names are part of the external contract.
enum class ErrorCode {
    // transcript / gold ingestion
    EmptyTranscript,
    BadHeader,
    UnknownSpeaker,
    NonContiguousTurns,
    MalformedRow,
    UnknownStrategy,
    InvalidLabel,
    DuplicateAnnotation,
    // prompting
    TargetNotTutor,
    IndexOutOfRange,
    UnparseableLabel,
    InvalidStrategyContent,
    // providers
    ProviderUnavailable,
    MissingFixtureEntry,
    AuthMissing,
    FixtureWriteFailed,
    InvalidConfig,
    // storage
    NotFound,
    IdConflict,
    InvalidId,
    StoreCorrupt,
    StorageFailed,
    // evaluation / service
    TranscriptMismatch,
    BadRequest,
    RunInProgress,
};

std::string_view to_string(ErrorCode code);
std::optional<ErrorCode> error_code_from_string(std::string_view name);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::optional<std::size_t> row = std::nullopt);

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    // 1-based data row (header excluded) for CSV parse errors.
    [[nodiscard]] std::optional<std::size_t> row() const noexcept { return row_; }
    // Message without the code prefix.
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
    std::optional<std::size_t> row_;
};

}  // namespace tutorlens
