#include "rtcs/hsi_data.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace rtcs {

namespace {

double spectral_angle(const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    const double t = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb) + 1e-12), -1.0, 1.0);
    return std::acos(t) * 180.0 / M_PI;
}

std::vector<float> random_spectrum(std::int64_t B, std::mt19937_64& rng) {
    // sum of a few Gaussian bumps over the band axis, max-normalized
    std::uniform_real_distribution<double> upos(0.1, 1.0);
    std::uniform_real_distribution<double> ucen(0.0, static_cast<double>(B - 1));
    std::uniform_real_distribution<double> uwid(static_cast<double>(B) / 12.0, static_cast<double>(B) / 3.0);
    std::vector<float> s(static_cast<std::size_t>(B), 0.02f);
    const int bumps = 3;
    for (int k = 0; k < bumps; ++k) {
        const double a = upos(rng), c = ucen(rng), w = uwid(rng);
        for (std::int64_t b = 0; b < B; ++b) {
            const double d = (static_cast<double>(b) - c) / w;
            s[static_cast<std::size_t>(b)] += static_cast<float>(a * std::exp(-0.5 * d * d));
        }
    }
    float mx = 0;
    for (float v : s) mx = std::max(mx, v);
    for (float& v : s) v /= mx;
    return s;
}

/// Separable box blur, several passes (approximates a Gaussian).
void smooth_field(std::vector<double>& f, std::int64_t H, std::int64_t W, int radius, int passes) {
    std::vector<double> tmp(f.size());
    for (int pass = 0; pass < passes; ++pass) {
        for (std::int64_t y = 0; y < H; ++y) {
            for (std::int64_t x = 0; x < W; ++x) {
                double acc = 0;
                int cnt = 0;
                for (int d = -radius; d <= radius; ++d) {
                    const std::int64_t xx = x + d;
                    if (xx < 0 || xx >= W) continue;
                    acc += f[static_cast<std::size_t>(y * W + xx)];
                    ++cnt;
                }
                tmp[static_cast<std::size_t>(y * W + x)] = acc / cnt;
            }
        }
        for (std::int64_t x = 0; x < W; ++x) {
            for (std::int64_t y = 0; y < H; ++y) {
                double acc = 0;
                int cnt = 0;
                for (int d = -radius; d <= radius; ++d) {
                    const std::int64_t yy = y + d;
                    if (yy < 0 || yy >= H) continue;
                    acc += tmp[static_cast<std::size_t>(yy * W + x)];
                    ++cnt;
                }
                f[static_cast<std::size_t>(y * W + x)] = acc / cnt;
            }
        }
    }
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error(std::string("load_cube: truncated while reading ") + what);
    return v;
}

}  // namespace

EndmemberLib synth_endmembers(int K, std::int64_t B, std::uint64_t seed) {
    if (K < 1) throw std::invalid_argument("synth_endmembers: K must be >= 1");
    EndmemberLib lib;
    lib.B = B;
    std::mt19937_64 rng(seed);
    int guard = 0;
    while (static_cast<int>(lib.spectra.size()) < K) {
        auto cand = random_spectrum(B, rng);
        bool distinct = true;
        for (const auto& s : lib.spectra) {
            if (spectral_angle(cand, s) < 5.0) { distinct = false; break; }
        }
        if (distinct) lib.spectra.push_back(std::move(cand));
        if (++guard > 10000) throw std::runtime_error("synth_endmembers: could not draw distinct spectra");
    }
    return lib;
}

HsiCube synth_scene(int K, std::int64_t B, std::int64_t H, std::int64_t W, std::uint64_t seed) {
    if (K < 1) throw std::invalid_argument("synth_scene: K must be >= 1");
    return synth_scene(synth_endmembers(K, B, seed * 1000003ULL + 17ULL), H, W, seed);
}

HsiCube synth_scene(const EndmemberLib& lib, std::int64_t H, std::int64_t W, std::uint64_t seed) {
    const int K = static_cast<int>(lib.spectra.size());
    const std::int64_t B = lib.B;
    if (K < 1) throw std::invalid_argument("synth_scene: endmember library is empty");
    if (B < 3) throw std::invalid_argument("synth_scene: B must be >= 3 (false-color needs three bands)");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // softmax of smoothed Gaussian fields -> abundances on the simplex
    std::vector<std::vector<double>> fields(static_cast<std::size_t>(K));
    for (auto& f : fields) {
        f.resize(static_cast<std::size_t>(H * W));
        for (auto& v : f) v = gauss(rng);
        smooth_field(f, H, W, std::max<int>(2, static_cast<int>(std::min(H, W) / 10)), 3);
        for (auto& v : f) v *= 40.0;  // restore contrast lost to smoothing
    }

    HsiCube cube;
    cube.B = B;
    cube.H = H;
    cube.W = W;
    cube.native_scale = 4096.0;
    cube.data.assign(static_cast<std::size_t>(B * H * W), 0.0f);
    std::vector<double> a(static_cast<std::size_t>(K));
    for (std::int64_t p = 0; p < H * W; ++p) {
        double mx = -1e300;
        for (int k = 0; k < K; ++k) mx = std::max(mx, fields[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)]);
        double sum = 0;
        for (int k = 0; k < K; ++k) {
            a[static_cast<std::size_t>(k)] = std::exp(fields[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)] - mx);
            sum += a[static_cast<std::size_t>(k)];
        }
        for (int k = 0; k < K; ++k) a[static_cast<std::size_t>(k)] /= sum;
        for (std::int64_t b = 0; b < B; ++b) {
            double v = 0;
            for (int k = 0; k < K; ++k) {
                v += a[static_cast<std::size_t>(k)] * lib.spectra[static_cast<std::size_t>(k)][static_cast<std::size_t>(b)];
            }
            v += 0.05 * v * v;  // small smooth nonlinearity
            cube.data[static_cast<std::size_t>(b * H * W + p)] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return cube;
}

StripeSet pushbroom_stripes(const HsiCube& cube, std::int64_t stripe_w) {
    if (stripe_w < 1 || cube.W % stripe_w != 0) {
        throw std::invalid_argument("pushbroom_stripes: width " + std::to_string(cube.W) +
                                    " not divisible by stripe width " + std::to_string(stripe_w));
    }
    StripeSet set;
    set.B = cube.B;
    set.H = cube.H;
    set.stripe_w = stripe_w;
    const std::int64_t count = cube.W / stripe_w;
    set.stripes.reserve(static_cast<std::size_t>(count));
    for (std::int64_t j = 0; j < count; ++j) {
        TensorF s(Shape4{1, cube.B, cube.H, stripe_w});
        for (std::int64_t b = 0; b < cube.B; ++b) {
            for (std::int64_t y = 0; y < cube.H; ++y) {
                for (std::int64_t x = 0; x < stripe_w; ++x) {
                    s.at(0, b, y, x) = cube.at(b, y, j * stripe_w + x);
                }
            }
        }
        set.stripes.push_back(std::move(s));
        set.index.push_back(j);
    }
    return set;
}

HsiCube reassemble(const StripeSet& set, double native_scale) {
    if (set.stripes.empty()) throw std::invalid_argument("reassemble: empty stripe set");
    if (set.index.size() != set.stripes.size()) {
        throw std::invalid_argument("reassemble: index/stripe count mismatch");
    }
    const std::int64_t count = static_cast<std::int64_t>(set.stripes.size());
    std::vector<std::int64_t> where(static_cast<std::size_t>(count), -1);  // index -> position
    for (std::int64_t i = 0; i < count; ++i) {
        const std::int64_t idx = set.index[static_cast<std::size_t>(i)];
        if (idx < 0 || idx >= count || where[static_cast<std::size_t>(idx)] != -1) {
            throw std::invalid_argument("reassemble: stripe indices must be a permutation of 0.." +
                                        std::to_string(count - 1) + " (bad or duplicate index " +
                                        std::to_string(idx) + ")");
        }
        where[static_cast<std::size_t>(idx)] = i;
        const TensorF& s = set.stripes[static_cast<std::size_t>(i)];
        if (s.shape.c != set.B || s.shape.h != set.H || s.shape.w != set.stripe_w) {
            throw std::invalid_argument("reassemble: inconsistent stripe shape " + s.shape.str());
        }
    }
    HsiCube cube;
    cube.B = set.B;
    cube.H = set.H;
    cube.W = set.stripe_w * count;
    cube.native_scale = native_scale;
    cube.data.assign(static_cast<std::size_t>(cube.numel()), 0.0f);
    for (std::int64_t j = 0; j < count; ++j) {
        const TensorF& s = set.stripes[static_cast<std::size_t>(where[static_cast<std::size_t>(j)])];
        for (std::int64_t b = 0; b < cube.B; ++b) {
            for (std::int64_t y = 0; y < cube.H; ++y) {
                for (std::int64_t x = 0; x < set.stripe_w; ++x) {
                    cube.at(b, y, j * set.stripe_w + x) = s.at(0, b, y, x);
                }
            }
        }
    }
    return cube;
}

void save_cube(const HsiCube& cube, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_cube: cannot open " + path.string());
    os.write("HSIC", 4);
    write_pod<std::uint32_t>(os, 1u);  // version
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(cube.B));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(cube.H));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(cube.W));
    write_pod<double>(os, cube.native_scale);
    os.write(reinterpret_cast<const char*>(cube.data.data()),
             static_cast<std::streamsize>(cube.data.size() * sizeof(float)));
    if (!os) throw std::runtime_error("save_cube: write failed for " + path.string());
}

HsiCube load_cube(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_cube: cannot open " + path.string());
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "HSIC", 4) != 0) {
        throw std::runtime_error("load_cube: bad magic in " + path.string() + " (expected HSIC)");
    }
    const auto version = read_pod<std::uint32_t>(is, "version");
    if (version != 1u) throw std::runtime_error("load_cube: unsupported version " + std::to_string(version));
    HsiCube cube;
    cube.B = read_pod<std::uint32_t>(is, "B");
    cube.H = read_pod<std::uint32_t>(is, "H");
    cube.W = read_pod<std::uint32_t>(is, "W");
    cube.native_scale = read_pod<double>(is, "native_scale");
    const std::size_t expected = static_cast<std::size_t>(cube.numel());
    cube.data.resize(expected);
    is.read(reinterpret_cast<char*>(cube.data.data()),
            static_cast<std::streamsize>(expected * sizeof(float)));
    const std::size_t got = static_cast<std::size_t>(is.gcount());
    if (got != expected * sizeof(float)) {
        throw std::runtime_error("load_cube: truncated payload in " + path.string() + ": expected " +
                                 std::to_string(expected * sizeof(float)) + " bytes, got " +
                                 std::to_string(got));
    }
    return cube;
}

std::vector<std::uint8_t> false_color(const HsiCube& cube, std::array<std::int64_t, 3> bands) {
    for (std::int64_t b : bands) {
        if (b < 0 || b >= cube.B) {
            throw std::invalid_argument("false_color: band index " + std::to_string(b) +
                                        " out of range for B=" + std::to_string(cube.B));
        }
    }
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(cube.H * cube.W * 3));
    for (int ch = 0; ch < 3; ++ch) {
        const std::int64_t b = bands[static_cast<std::size_t>(ch)];
        float lo = cube.at(b, 0, 0), hi = lo;
        for (std::int64_t p = 0; p < cube.H * cube.W; ++p) {
            const float v = cube.data[static_cast<std::size_t>(b * cube.H * cube.W + p)];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const float range = hi - lo;
        for (std::int64_t p = 0; p < cube.H * cube.W; ++p) {
            const float v = cube.data[static_cast<std::size_t>(b * cube.H * cube.W + p)];
            const float norm = range > 0 ? (v - lo) / range : 0.0f;  // zero range maps to 0
            rgb[static_cast<std::size_t>(p * 3 + ch)] = static_cast<std::uint8_t>(std::lround(norm * 255.0f));
        }
    }
    return rgb;
}

void DatasetManifest::save(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("manifest: cannot open " + path.string());
    os << "seed=" << seed << "\nK=" << K << "\nB=" << B << "\nH=" << H << "\nW=" << W << "\n";
    auto dump = [&](const char* split, const std::vector<std::string>& v) {
        for (const auto& f : v) os << split << "=" << f << "\n";
    };
    dump("train", train);
    dump("val", val);
    dump("test", test);
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("manifest: cannot open " + path.string());
    DatasetManifest m;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("manifest: malformed line '" + line + "'");
        const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "seed") m.seed = std::stoull(val);
        else if (key == "K") m.K = std::stoi(val);
        else if (key == "B") m.B = std::stoll(val);
        else if (key == "H") m.H = std::stoll(val);
        else if (key == "W") m.W = std::stoll(val);
        else if (key == "train") m.train.push_back(val);
        else if (key == "val") m.val.push_back(val);
        else if (key == "test") m.test.push_back(val);
        else throw std::runtime_error("manifest: unknown key '" + key + "'");
    }
    return m;
}

}  // namespace rtcs
