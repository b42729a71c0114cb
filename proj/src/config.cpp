#include "rtcs/config.hpp"

#include <openssl/sha.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "rtcs/errors.hpp"

namespace rtcs {

namespace {

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as a number");
    }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
    std::int64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) {
        throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as an integer");
    }
    return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) {
        throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as an unsigned integer");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as a boolean (true/false)");
}

}  // namespace

std::string RunConfig::serialize() const {
    std::ostringstream os;
    os << "data_dir=" << data_dir << "\n"
       << "seed=" << seed << "\n"
       << "endmembers=" << endmembers << "\n"
       << "bands=" << bands << "\n"
       << "height=" << height << "\n"
       << "width=" << width << "\n"
       << "n_train=" << n_train << "\n"
       << "n_val=" << n_val << "\n"
       << "n_test=" << n_test << "\n"
       << "stripe_w=" << stripe_w << "\n"
       << "sampling_rate=" << fmt_double(sampling_rate) << "\n"
       << "n_f=" << n_f << "\n"
       << "n_base=" << n_base << "\n"
       << "c_s=" << c_s << "\n"
       << "frdb_width=" << frdb_width << "\n"
       << "frdb_growth=" << frdb_growth << "\n"
       << "c_g=" << c_g << "\n"
       << "alpha=" << fmt_double(alpha) << "\n"
       << "aug_enabled=" << (aug_enabled ? "true" : "false") << "\n"
       << "aug_literal=" << (aug_literal ? "true" : "false") << "\n"
       << "mask_p=" << fmt_double(mask_p) << "\n"
       << "mask_band_frac=" << fmt_double(mask_band_frac) << "\n"
       << "noise_train=" << (noise_train ? "true" : "false") << "\n"
       << "noise_snr_db=" << fmt_double(noise_snr_db) << "\n"
       << "qat=" << (qat ? "true" : "false") << "\n"
       << "lr=" << fmt_double(lr) << "\n"
       << "beta1=" << fmt_double(beta1) << "\n"
       << "beta2=" << fmt_double(beta2) << "\n"
       << "adam_eps=" << fmt_double(adam_eps) << "\n"
       << "weight_decay=" << fmt_double(weight_decay) << "\n"
       << "lr_decay_epochs=" << lr_decay_epochs << "\n"
       << "epochs=" << epochs << "\n"
       << "batch_size=" << batch_size << "\n"
       << "val_every=" << val_every << "\n"
       << "checkpoint_every=" << checkpoint_every << "\n"
       << "resume=" << resume << "\n"
       << "allow_hash_mismatch=" << (allow_hash_mismatch ? "true" : "false") << "\n";
    return os.str();
}

void RunConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
    if (endmembers < 1) fail("endmembers must be >= 1");
    if (bands < 3) fail("bands must be >= 3 (false-color needs three bands)");
    if (height < 1 || width < 1) fail("height and width must be >= 1");
    if (n_train < 1 || n_val < 0 || n_test < 0) fail("split sizes must be non-negative with n_train >= 1");
    if (stripe_w < 1 || width % stripe_w != 0) fail("width must be divisible by stripe_w");
    if (!(sampling_rate > 0 && sampling_rate <= 0.25)) fail("sampling_rate must be in (0, 0.25]");
    const std::int64_t enc_stride = sampling_rate <= 0.01 ? 4 : 2;
    if (height % enc_stride != 0) {
        fail("height must be divisible by the encoder stride (" + std::to_string(enc_stride) + ")");
    }
    if (n_f < 0) fail("n_f must be >= 0");
    if (n_base < 1 || c_s < 1 || frdb_width < 1 || frdb_growth < 1) fail("decoder widths must be >= 1");
    if (c_g < 1 || frdb_width % c_g != 0) fail("frdb_width must be divisible by c_g");
    if ((frdb_width + 2 * frdb_growth) % c_g != 0) {
        fail("frdb_width + 2*frdb_growth must be divisible by c_g");
    }
    if (alpha < 0) fail("alpha must be >= 0");
    if (!(mask_p >= 0 && mask_p <= 1)) fail("mask_p must be in [0, 1]");
    if (!(mask_band_frac > 0 && mask_band_frac <= 1)) fail("mask_band_frac must be in (0, 1]");
    if (!(noise_snr_db > 0)) fail("noise_snr_db must be positive");
    if (!(lr > 0)) fail("lr must be positive");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) fail("betas must be in [0, 1)");
    if (!(adam_eps > 0)) fail("adam_eps must be positive");
    if (weight_decay < 0) fail("weight_decay must be >= 0");
    if (lr_decay_epochs < 1) fail("lr_decay_epochs must be >= 1");
    if (epochs < 1) fail("epochs must be >= 1");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (val_every < 1) fail("val_every must be >= 1");
    if (checkpoint_every < 0) fail("checkpoint_every must be >= 0");
}

RunConfig profile_config(const std::string& name) {
    if (name == "desk" || name.empty()) return RunConfig{};
    if (name == "full") {
        RunConfig cfg;
        cfg.bands = 172;
        cfg.height = 128;
        cfg.width = 256;
        cfg.n_train = 1000;
        cfg.n_val = 100;
        cfg.n_test = 100;
        cfg.n_f = 8;
        cfg.n_base = 64;
        cfg.c_s = 16;
        cfg.frdb_width = 96;
        cfg.epochs = 5000;
        return cfg;
    }
    throw ConfigError("unknown profile '" + name + "' (expected desk or full)");
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "data_dir") cfg.data_dir = value;
    else if (key == "seed") cfg.seed = parse_uint(key, value);
    else if (key == "endmembers") cfg.endmembers = static_cast<int>(parse_int(key, value));
    else if (key == "bands") cfg.bands = parse_int(key, value);
    else if (key == "height") cfg.height = parse_int(key, value);
    else if (key == "width") cfg.width = parse_int(key, value);
    else if (key == "n_train") cfg.n_train = parse_int(key, value);
    else if (key == "n_val") cfg.n_val = parse_int(key, value);
    else if (key == "n_test") cfg.n_test = parse_int(key, value);
    else if (key == "stripe_w") cfg.stripe_w = parse_int(key, value);
    else if (key == "sampling_rate") cfg.sampling_rate = parse_double(key, value);
    else if (key == "n_f") cfg.n_f = static_cast<int>(parse_int(key, value));
    else if (key == "n_base") cfg.n_base = static_cast<int>(parse_int(key, value));
    else if (key == "c_s") cfg.c_s = static_cast<int>(parse_int(key, value));
    else if (key == "frdb_width") cfg.frdb_width = static_cast<int>(parse_int(key, value));
    else if (key == "frdb_growth") cfg.frdb_growth = static_cast<int>(parse_int(key, value));
    else if (key == "c_g") cfg.c_g = static_cast<int>(parse_int(key, value));
    else if (key == "alpha") cfg.alpha = parse_double(key, value);
    else if (key == "aug_enabled") cfg.aug_enabled = parse_bool(key, value);
    else if (key == "aug_literal") cfg.aug_literal = parse_bool(key, value);
    else if (key == "mask_p") cfg.mask_p = parse_double(key, value);
    else if (key == "mask_band_frac") cfg.mask_band_frac = parse_double(key, value);
    else if (key == "noise_train") cfg.noise_train = parse_bool(key, value);
    else if (key == "noise_snr_db") cfg.noise_snr_db = parse_double(key, value);
    else if (key == "qat") cfg.qat = parse_bool(key, value);
    else if (key == "lr") cfg.lr = parse_double(key, value);
    else if (key == "beta1") cfg.beta1 = parse_double(key, value);
    else if (key == "beta2") cfg.beta2 = parse_double(key, value);
    else if (key == "adam_eps") cfg.adam_eps = parse_double(key, value);
    else if (key == "weight_decay") cfg.weight_decay = parse_double(key, value);
    else if (key == "lr_decay_epochs") cfg.lr_decay_epochs = parse_int(key, value);
    else if (key == "epochs") cfg.epochs = parse_int(key, value);
    else if (key == "batch_size") cfg.batch_size = parse_int(key, value);
    else if (key == "val_every") cfg.val_every = parse_int(key, value);
    else if (key == "checkpoint_every") cfg.checkpoint_every = parse_int(key, value);
    else if (key == "resume") cfg.resume = value;
    else if (key == "allow_hash_mismatch") cfg.allow_hash_mismatch = parse_bool(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig parse_config(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides,
                       const RunConfig& base) {
    RunConfig cfg = base;
    if (!path.empty()) {
        std::ifstream is(path);
        if (!is) throw ConfigError("cannot open config file " + path.string());
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            // trim
            const auto b = line.find_first_not_of(" \t\r");
            if (b == std::string::npos) continue;
            const auto e = line.find_last_not_of(" \t\r");
            line = line.substr(b, e - b + 1);
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                                  ": expected key=value, got '" + line + "'");
            }
            auto strip = [](std::string s) {
                const auto sb = s.find_first_not_of(" \t");
                if (sb == std::string::npos) return std::string{};
                const auto se = s.find_last_not_of(" \t");
                return s.substr(sb, se - sb + 1);
            };
            apply_key(cfg, strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
        }
    }
    for (const auto& [k, v] : overrides) apply_key(cfg, k, v);  // CLI beats file
    cfg.validate();
    return cfg;
}

std::array<std::uint8_t, 32> config_hash(const RunConfig& cfg) {
    // resume plumbing must not change the hash, or no resume could ever match
    std::istringstream lines(cfg.serialize());
    std::string line, text;
    while (std::getline(lines, line)) {
        if (line.rfind("resume=", 0) == 0 || line.rfind("allow_hash_mismatch=", 0) == 0) continue;
        text += line;
        text += '\n';
    }
    std::array<std::uint8_t, 32> out{};
    SHA256(reinterpret_cast<const unsigned char*>(text.data()), text.size(), out.data());
    return out;
}

}  // namespace rtcs
