#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rtcs/tensor.hpp"

namespace rtcs {

/// A B x H x W reflectance cube in [0,1], band-sequential, with the
/// pre-normalization peak recorded for native-scale error reporting.
struct HsiCube {
    std::int64_t B = 0, H = 0, W = 0;
    std::vector<float> data;  // BSQ: band-major
    double native_scale = 1.0;

    std::int64_t numel() const { return B * H * W; }
    float& at(std::int64_t b, std::int64_t y, std::int64_t x) {
        return data[static_cast<std::size_t>((b * H + y) * W + x)];
    }
    float at(std::int64_t b, std::int64_t y, std::int64_t x) const {
        return data[static_cast<std::size_t>((b * H + y) * W + x)];
    }
    /// View as a (1, B, H, W) tensor.
    TensorF as_tensor() const { return TensorF(Shape4{1, B, H, W}, data); }
};

/// Library of K smooth non-negative endmember spectra, each max-normalized,
/// pairwise spectral angles >= 5 degrees.
struct EndmemberLib {
    std::int64_t B = 0;
    std::vector<std::vector<float>> spectra;
};

EndmemberLib synth_endmembers(int K, std::int64_t B, std::uint64_t seed);

/// Linear-mixing synthetic scene: softmax-of-smoothed-Gaussian-field
/// abundances times the endmember library, plus a small smooth nonlinearity,
/// clipped to [0,1]. Deterministic given the seed.
HsiCube synth_scene(int K, std::int64_t B, std::int64_t H, std::int64_t W, std::uint64_t seed);

/// Same scene model with a caller-provided endmember library. Datasets share
/// one library across cubes (materials recur across scenes of a corpus) while
/// abundance fields vary per cube seed.
HsiCube synth_scene(const EndmemberLib& lib, std::int64_t H, std::int64_t W, std::uint64_t seed);

/// Width-axis partition of a cube into (B, H, stripe_w) stripes. `index[i]`
/// is the position of stripes[i] in the source cube; reassembly orders by
/// index, so arrival order does not matter.
struct StripeSet {
    std::int64_t B = 0, H = 0, stripe_w = 0;
    std::vector<TensorF> stripes;  // each (1, B, H, stripe_w)
    std::vector<std::int64_t> index;
};

StripeSet pushbroom_stripes(const HsiCube& cube, std::int64_t stripe_w);
HsiCube reassemble(const StripeSet& stripes, double native_scale = 1.0);

/// "HSIC" container: magic | version u32 | B,H,W u32 | native_scale f64 |
/// f32 little-endian BSQ payload. Round-trips bit-exactly.
void save_cube(const HsiCube& cube, const std::filesystem::path& path);
HsiCube load_cube(const std::filesystem::path& path);

/// Per-channel min-max normalized 8-bit RGB from three band indices
/// (zero-range channels map to 0). Row-major H x W x 3.
std::vector<std::uint8_t> false_color(const HsiCube& cube,
                                      std::array<std::int64_t, 3> bands = {13, 25, 61});

/// Dataset manifest: cube file names, split assignment, generation seed.
struct DatasetManifest {
    std::uint64_t seed = 0;
    int K = 4;
    std::int64_t B = 32, H = 64, W = 64;
    std::vector<std::string> train, val, test;

    void save(const std::filesystem::path& path) const;
    static DatasetManifest load(const std::filesystem::path& path);
};

}  // namespace rtcs
