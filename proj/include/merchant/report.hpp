#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

namespace merchant::report {

inline constexpr const char* kVersion = "1.0.0";

// CLI-level overrides applied on top of the config file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::int64_t> trials;
};

// Shortest decimal string that round-trips to the same double. Every real
// written to CSV goes through this, so replaying a config byte-compares.
std::string format_double(double v);

// Parses and validates the config, runs the experiment of the given kind,
// writes one CSV table plus summary.json under the output directory, and
// returns the summary. Throws InvalidConfig for bad configs and the
// operation's own error for numerical failures.
nlohmann::json run(const std::string& kind, const std::string& config_path,
                   const Overrides& overrides = {});

}  // namespace merchant::report
