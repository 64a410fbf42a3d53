#pragma once

#include <stdexcept>
#include <string>

namespace spdcwg {

enum class Errc {
    UnknownMaterial,
    WavelengthOutOfRange,
    NoGuidedMode,
    RootRefinementFailure,
    EIMBreakdown,
    BranchAmbiguity,
    NoAnticrossing,
    GridMismatch,
    MissingChi2,
    FrequencyOutOfRange,
    EmptySupport,
    NotTwoDimensional,
    NotOneDimensional,
    AllPointsFailed,
    BadConfig,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message),
          code_(code) {}

    Error(Errc code, const std::string& message, std::string stage)
        : std::runtime_error("[" + stage + "] " + errc_name(code) + ": " + message),
          code_(code),
          stage_(std::move(stage)) {}

    Errc code() const { return code_; }

    // Pipeline stage for CLI error attribution; empty when thrown below the
    // orchestration layer.
    const std::string& stage() const { return stage_; }

  private:
    Errc code_;
    std::string stage_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace spdcwg
