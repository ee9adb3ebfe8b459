#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "flowsentinel/error.hpp"
#include "flowsentinel/labels.hpp"
#include "flowsentinel/model.hpp"

namespace flowsentinel::cli {

// Process exit codes. Stable; scripts depend on them.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitMissingInput = 2;
inline constexpr int kExitSchema = 3;
inline constexpr int kExitNumeric = 4;
inline constexpr int kExitModeMismatch = 5;

int exit_code_for(ErrorKind kind);

/// Everything one pipeline run needs. Loaded from --config JSON (a plain
/// config or a run manifest), then overridden by command-line flags.
struct RunConfig {
    std::vector<std::string> data;  // CSV files or directories
    std::string cache;              // dataset cache; defaults to <out>/dataset.fsds
    std::optional<ClassificationMode> mode;
    std::string features = "canonical";  // "canonical" or a feature-list file
    bool recompute_importance = false;
    std::size_t top_k = 20;
    std::size_t forest_trees = 100;
    std::size_t forest_max_samples = 0;
    double subsample = 1.0;
    double split_fraction = 0.8;
    std::uint64_t split_seed = 42;
    Architecture arch = Architecture::CnnIds;
    std::size_t epochs = 20;
    std::size_t batch_size = 256;
    std::optional<double> learning_rate;  // architecture default when unset
    double validation_fraction = 0.1;
    std::size_t gradient_shards = 8;
    std::uint64_t seed = 2023;
    std::string out = "out";

    /// Throws InvalidConfig.
    void validate() const;
    std::string to_json(int indent = 2) const;
    /// Reads a config file, or the "config" object of a manifest. Unknown
    /// keys are rejected. Throws FileNotFound, InvalidConfig.
    static RunConfig load(const std::filesystem::path& path);

    std::filesystem::path cache_path() const;
    double resolved_learning_rate() const;
};

/// FNV-1a 64 of the file contents, as "fnv1a64:<16 hex digits>".
std::string content_hash(const std::filesystem::path& path);

/// Entry point behind the `flowsentinel` binary.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace flowsentinel::cli
