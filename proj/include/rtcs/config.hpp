#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace rtcs {

/// Every tunable of the pipeline in one flat record. Parsed from key=value
/// text with CLI overrides; serializes back to a canonical form whose SHA-256
/// is the checkpoint compatibility hash.
struct RunConfig {
    // dataset
    std::string data_dir = "data";
    std::uint64_t seed = 7;
    int endmembers = 4;
    std::int64_t bands = 32;
    std::int64_t height = 64;
    std::int64_t width = 64;
    std::int64_t n_train = 40;
    std::int64_t n_val = 5;
    std::int64_t n_test = 5;
    std::int64_t stripe_w = 4;

    // encoder
    double sampling_rate = 0.01;

    // decoder
    int n_f = 2;
    int n_base = 16;
    int c_s = 8;
    int frdb_width = 24;
    int frdb_growth = 4;
    int c_g = 4;

    // loss
    double alpha = 0.1;
    bool aug_enabled = true;
    bool aug_literal = false;

    // degradation statistics
    double mask_p = 0.2;
    double mask_band_frac = 0.2;
    bool noise_train = false;
    double noise_snr_db = 30.0;

    // encoder quantization-aware training (fake-quantize forward, straight-through backward)
    bool qat = false;

    // optimizer / schedule
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.0;
    std::int64_t lr_decay_epochs = 1000;
    std::int64_t epochs = 1000;
    std::int64_t batch_size = 10;

    // training plumbing
    std::int64_t val_every = 100;
    std::int64_t checkpoint_every = 0;  // 0 = final checkpoint only
    std::string resume;
    bool allow_hash_mismatch = false;

    /// Canonical text form: fixed key order, one key=value per line.
    std::string serialize() const;

    /// Cross-checks every field against the module invariants it feeds.
    void validate() const;
};

/// Named default bundles. "desk" is the struct default; "full" mirrors the
/// large-corpus geometry and schedule.
RunConfig profile_config(const std::string& name);

/// Parses `path` (empty path = pure defaults) on top of `base`, then applies
/// key=value CLI overrides (highest precedence). Unknown keys are rejected.
RunConfig parse_config(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides = {},
                       const RunConfig& base = RunConfig{});

/// Applies one key=value assignment; throws ConfigError for unknown keys or
/// unparsable values.
void apply_key(RunConfig& cfg, const std::string& key, const std::string& value);

/// SHA-256 of the canonical serialization, excluding the resume-plumbing keys
/// (resume, allow_hash_mismatch) so a resumed run hashes like the original.
std::array<std::uint8_t, 32> config_hash(const RunConfig& cfg);

}  // namespace rtcs
