#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rtcs/encoder.hpp"
#include "rtcs/tensor.hpp"

namespace rtcs {

/// Element-type codes used in checkpoints and bitstreams.
enum class Dtype : std::uint8_t { F32 = 0, I8 = 1, F64 = 2, I64 = 3, U8 = 4 };

std::size_t dtype_size(Dtype d);

/// One named blob: dtype, dimensions, little-endian payload.
struct CheckpointEntry {
    std::string name;
    Dtype dtype = Dtype::F32;
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> payload;

    std::uint64_t count() const;
};

/// "RTCK" container: format version, 32-byte config hash, named entries.
/// Round-trips bit-exactly.
struct Checkpoint {
    std::array<std::uint8_t, 32> config_hash{};
    std::vector<CheckpointEntry> entries;

    void add_f32(const std::string& name, const TensorF& t);
    void add_i64(const std::string& name, std::int64_t v);
    void add_f64(const std::string& name, double v);
    void add_bytes(const std::string& name, const std::vector<std::uint8_t>& bytes);
    void add_i8(const std::string& name, const std::vector<std::int8_t>& codes,
                const std::vector<std::uint32_t>& dims);

    bool has(const std::string& name) const;
    const CheckpointEntry& find(const std::string& name) const;
    TensorF get_f32(const std::string& name) const;  // dims must have rank <= 4
    std::int64_t get_i64(const std::string& name) const;
    double get_f64(const std::string& name) const;
    std::vector<std::uint8_t> get_bytes(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// "RTCZ" container: a sequence of compressed stripes, each self-describing
/// {index, shape, dtype, scale (i8 only), payload}. The int8 path stores
/// per-stripe symmetric codes; loading returns dequantized values tagged
/// int8_tagged.
struct Bitstream {
    std::vector<std::uint32_t> index;
    std::vector<CompressedStripe> stripes;
};

void save_bitstream(const Bitstream& bs, const std::filesystem::path& path);
Bitstream load_bitstream(const std::filesystem::path& path);

}  // namespace rtcs
