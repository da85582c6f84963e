#pragma once

#include "mpcguard/sim.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mpcguard {

/// Parse or validation failure in a scenario document. `line` is 1-based and
/// absent when the offending value came from an override or has no position.
class ScenarioError : public std::runtime_error {
public:
    ScenarioError(const std::string& message, std::optional<int> line = std::nullopt);

    std::optional<int> line() const { return line_; }

private:
    std::optional<int> line_;
};

/// "a.b.c=value"; numeric path components index into lists. The value is
/// parsed as YAML, so "[0.5, 0.5]" or "true" work as expected.
struct Override {
    std::string path;
    std::string value;
};

Override parse_override(std::string_view text);

/// Parses a scenario document. Missing keys take the ScenarioConfig defaults,
/// unknown keys are rejected, overrides are applied before conversion and the
/// result is validated. Errors are reported as ScenarioError, prefixed with
/// `source` and the line number when one is known.
ScenarioConfig parse_scenario(const std::string& text, std::span<const Override> overrides = {},
                              const std::string& source = "<scenario>");

ScenarioConfig load_scenario(const std::filesystem::path& path, std::span<const Override> overrides = {});

}  // namespace mpcguard
