#include "rtcs/serialization.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "rtcs/errors.hpp"

namespace rtcs {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::uint32_t kBitstreamVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const std::string& what) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw DataError("truncated while reading " + what);
    return v;
}

template <typename T>
std::vector<std::uint8_t> to_bytes(const T* data, std::size_t count) {
    std::vector<std::uint8_t> out(count * sizeof(T));
    std::memcpy(out.data(), data, out.size());
    return out;
}

}  // namespace

std::size_t dtype_size(Dtype d) {
    switch (d) {
        case Dtype::F32: return 4;
        case Dtype::I8: return 1;
        case Dtype::F64: return 8;
        case Dtype::I64: return 8;
        case Dtype::U8: return 1;
    }
    throw DataError("unknown dtype code " + std::to_string(static_cast<int>(d)));
}

std::uint64_t CheckpointEntry::count() const {
    std::uint64_t n = 1;
    for (std::uint32_t d : dims) n *= d;
    return n;
}

void Checkpoint::add_f32(const std::string& name, const TensorF& t) {
    CheckpointEntry e;
    e.name = name;
    e.dtype = Dtype::F32;
    e.dims = {static_cast<std::uint32_t>(t.shape.n), static_cast<std::uint32_t>(t.shape.c),
              static_cast<std::uint32_t>(t.shape.h), static_cast<std::uint32_t>(t.shape.w)};
    e.payload = to_bytes(t.data.data(), t.data.size());
    entries.push_back(std::move(e));
}

void Checkpoint::add_i64(const std::string& name, std::int64_t v) {
    CheckpointEntry e;
    e.name = name;
    e.dtype = Dtype::I64;
    e.dims = {1};
    e.payload = to_bytes(&v, 1);
    entries.push_back(std::move(e));
}

void Checkpoint::add_f64(const std::string& name, double v) {
    CheckpointEntry e;
    e.name = name;
    e.dtype = Dtype::F64;
    e.dims = {1};
    e.payload = to_bytes(&v, 1);
    entries.push_back(std::move(e));
}

void Checkpoint::add_bytes(const std::string& name, const std::vector<std::uint8_t>& bytes) {
    CheckpointEntry e;
    e.name = name;
    e.dtype = Dtype::U8;
    e.dims = {static_cast<std::uint32_t>(bytes.size())};
    e.payload = bytes;
    entries.push_back(std::move(e));
}

void Checkpoint::add_i8(const std::string& name, const std::vector<std::int8_t>& codes,
                        const std::vector<std::uint32_t>& dims) {
    CheckpointEntry e;
    e.name = name;
    e.dtype = Dtype::I8;
    e.dims = dims;
    e.payload = to_bytes(codes.data(), codes.size());
    entries.push_back(std::move(e));
}

bool Checkpoint::has(const std::string& name) const {
    for (const auto& e : entries) {
        if (e.name == name) return true;
    }
    return false;
}

const CheckpointEntry& Checkpoint::find(const std::string& name) const {
    for (const auto& e : entries) {
        if (e.name == name) return e;
    }
    throw DataError("checkpoint: missing entry '" + name + "'");
}

TensorF Checkpoint::get_f32(const std::string& name) const {
    const CheckpointEntry& e = find(name);
    if (e.dtype != Dtype::F32) throw DataError("checkpoint: entry '" + name + "' is not f32");
    if (e.dims.size() > 4) throw DataError("checkpoint: entry '" + name + "' has rank > 4");
    std::array<std::int64_t, 4> d{1, 1, 1, 1};
    const std::size_t off = 4 - e.dims.size();
    for (std::size_t i = 0; i < e.dims.size(); ++i) d[off + i] = e.dims[i];
    TensorF t(Shape4{d[0], d[1], d[2], d[3]});
    if (e.payload.size() != t.data.size() * sizeof(float)) {
        throw DataError("checkpoint: entry '" + name + "' payload/dims mismatch");
    }
    std::memcpy(t.data.data(), e.payload.data(), e.payload.size());
    return t;
}

std::int64_t Checkpoint::get_i64(const std::string& name) const {
    const CheckpointEntry& e = find(name);
    if (e.dtype != Dtype::I64 || e.payload.size() != 8) {
        throw DataError("checkpoint: entry '" + name + "' is not a scalar i64");
    }
    std::int64_t v;
    std::memcpy(&v, e.payload.data(), 8);
    return v;
}

double Checkpoint::get_f64(const std::string& name) const {
    const CheckpointEntry& e = find(name);
    if (e.dtype != Dtype::F64 || e.payload.size() != 8) {
        throw DataError("checkpoint: entry '" + name + "' is not a scalar f64");
    }
    double v;
    std::memcpy(&v, e.payload.data(), 8);
    return v;
}

std::vector<std::uint8_t> Checkpoint::get_bytes(const std::string& name) const {
    const CheckpointEntry& e = find(name);
    if (e.dtype != Dtype::U8) throw DataError("checkpoint: entry '" + name + "' is not a byte blob");
    return e.payload;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("save_checkpoint: cannot open " + path.string());
    os.write("RTCK", 4);
    write_pod(os, kCheckpointVersion);
    os.write(reinterpret_cast<const char*>(ckpt.config_hash.data()), 32);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.entries.size()));
    for (const auto& e : ckpt.entries) {
        if (e.name.size() > 0xFFFF) throw DataError("save_checkpoint: entry name too long");
        write_pod<std::uint16_t>(os, static_cast<std::uint16_t>(e.name.size()));
        os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(e.dtype));
        write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(e.dims.size()));
        for (std::uint32_t d : e.dims) write_pod(os, d);
        if (e.payload.size() != e.count() * dtype_size(e.dtype)) {
            throw DataError("save_checkpoint: entry '" + e.name + "' payload/dims mismatch");
        }
        os.write(reinterpret_cast<const char*>(e.payload.data()),
                 static_cast<std::streamsize>(e.payload.size()));
    }
    if (!os) throw DataError("save_checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("load_checkpoint: cannot open " + path.string());
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "RTCK", 4) != 0) {
        throw DataError("load_checkpoint: bad magic in " + path.string() + " (expected RTCK)");
    }
    const auto version = read_pod<std::uint32_t>(is, "checkpoint version");
    if (version != kCheckpointVersion) {
        throw DataError("load_checkpoint: unsupported version " + std::to_string(version));
    }
    Checkpoint ckpt;
    is.read(reinterpret_cast<char*>(ckpt.config_hash.data()), 32);
    if (!is) throw DataError("load_checkpoint: truncated config hash");
    const auto count = read_pod<std::uint32_t>(is, "entry count");
    for (std::uint32_t i = 0; i < count; ++i) {
        CheckpointEntry e;
        const auto name_len = read_pod<std::uint16_t>(is, "entry name length");
        e.name.resize(name_len);
        is.read(e.name.data(), name_len);
        if (!is) throw DataError("load_checkpoint: truncated entry name");
        const auto dcode = read_pod<std::uint8_t>(is, "entry dtype");
        if (dcode > 4) throw DataError("load_checkpoint: unknown dtype code " + std::to_string(dcode));
        e.dtype = static_cast<Dtype>(dcode);
        const auto ndim = read_pod<std::uint8_t>(is, "entry rank");
        e.dims.resize(ndim);
        for (auto& d : e.dims) d = read_pod<std::uint32_t>(is, "entry dim");
        const std::uint64_t bytes = e.count() * dtype_size(e.dtype);
        e.payload.resize(bytes);
        is.read(reinterpret_cast<char*>(e.payload.data()), static_cast<std::streamsize>(bytes));
        if (static_cast<std::uint64_t>(is.gcount()) != bytes) {
            throw DataError("load_checkpoint: truncated payload for entry '" + e.name + "': expected " +
                            std::to_string(bytes) + " bytes, got " + std::to_string(is.gcount()));
        }
        ckpt.entries.push_back(std::move(e));
    }
    return ckpt;
}

void save_bitstream(const Bitstream& bs, const std::filesystem::path& path) {
    if (bs.index.size() != bs.stripes.size()) {
        throw DataError("save_bitstream: index/stripe count mismatch");
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("save_bitstream: cannot open " + path.string());
    os.write("RTCZ", 4);
    write_pod(os, kBitstreamVersion);
    for (std::size_t i = 0; i < bs.stripes.size(); ++i) {
        const CompressedStripe& z = bs.stripes[i];
        write_pod<std::uint32_t>(os, bs.index[i]);
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(z.data.shape.c));
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(z.data.shape.h));
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(z.data.shape.w));
        write_pod<std::uint8_t>(os, z.int8_tagged ? 1 : 0);
        if (z.int8_tagged) {
            // per-stripe symmetric re-quantization of the measurement values
            double max_abs = 0;
            for (float v : z.data.data) max_abs = std::max(max_abs, std::abs(static_cast<double>(v)));
            const double scale = max_abs == 0 ? 1.0 : max_abs / 127.0;
            write_pod<double>(os, scale);
            for (float v : z.data.data) {
                const double code = std::round(static_cast<double>(v) / scale);
                const auto c = static_cast<std::int8_t>(std::clamp(code, -127.0, 127.0));
                write_pod(os, c);
            }
        } else {
            os.write(reinterpret_cast<const char*>(z.data.data.data()),
                     static_cast<std::streamsize>(z.data.data.size() * sizeof(float)));
        }
    }
    if (!os) throw DataError("save_bitstream: write failed for " + path.string());
}

Bitstream load_bitstream(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("load_bitstream: cannot open " + path.string());
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "RTCZ", 4) != 0) {
        throw DataError("load_bitstream: bad magic in " + path.string() + " (expected RTCZ)");
    }
    const auto version = read_pod<std::uint32_t>(is, "bitstream version");
    if (version != kBitstreamVersion) {
        throw DataError("load_bitstream: unsupported version " + std::to_string(version));
    }
    Bitstream bs;
    while (true) {
        std::uint32_t idx;
        is.read(reinterpret_cast<char*>(&idx), sizeof(idx));
        if (is.eof()) break;
        if (!is) throw DataError("load_bitstream: truncated stripe header");
        const auto b = read_pod<std::uint32_t>(is, "stripe channels");
        const auto h = read_pod<std::uint32_t>(is, "stripe height");
        const auto w = read_pod<std::uint32_t>(is, "stripe width");
        const auto dtype = read_pod<std::uint8_t>(is, "stripe dtype");
        if (dtype > 1) throw DataError("load_bitstream: unknown stripe dtype " + std::to_string(dtype));
        CompressedStripe z;
        z.data = TensorF(Shape4{1, b, h, w});
        if (dtype == 1) {
            z.int8_tagged = true;
            const double scale = read_pod<double>(is, "stripe scale");
            for (auto& v : z.data.data) {
                v = static_cast<float>(read_pod<std::int8_t>(is, "stripe payload") * scale);
            }
        } else {
            is.read(reinterpret_cast<char*>(z.data.data.data()),
                    static_cast<std::streamsize>(z.data.data.size() * sizeof(float)));
            if (static_cast<std::size_t>(is.gcount()) != z.data.data.size() * sizeof(float)) {
                throw DataError("load_bitstream: truncated stripe payload in " + path.string());
            }
        }
        bs.index.push_back(idx);
        bs.stripes.push_back(std::move(z));
    }
    return bs;
}

}  // namespace rtcs
