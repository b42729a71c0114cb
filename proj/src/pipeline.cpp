#include "rtcs/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "rtcs/errors.hpp"
#include "rtcs/losses.hpp"
#include "rtcs/png_io.hpp"

namespace rtcs {

namespace {

namespace fs = std::filesystem;

DecoderConfig decoder_config(const RunConfig& cfg, const EncoderConfig& enc) {
    DecoderConfig dec;
    dec.n_f = cfg.n_f;
    dec.N_base = cfg.n_base;
    dec.c_s = cfg.c_s;
    dec.frdb_width = cfg.frdb_width;
    dec.frdb_growth = cfg.frdb_growth;
    dec.c_g = cfg.c_g;
    dec.upsample_stages = enc.upsample_stages();
    dec.B_out = cfg.bands;
    return dec;
}

std::string rng_to_string(const std::mt19937_64& rng) {
    std::ostringstream os;
    os << rng;
    return os.str();
}

void rng_from_string(std::mt19937_64& rng, const std::string& s) {
    std::istringstream is(s);
    is >> rng;
    if (!is) throw DataError("checkpoint: malformed RNG state");
}

void add_param(Checkpoint& ckpt, const Parameter<float>& p) {
    ckpt.add_f32(p.name, p.value);
    ckpt.add_f32(p.name + ".m", p.m);
    ckpt.add_f32(p.name + ".v", p.v);
    ckpt.add_i64(p.name + ".step", p.step);
}

void load_param(const Checkpoint& ckpt, Parameter<float>& p) {
    auto pull = [&](const std::string& name, TensorF& dst) {
        TensorF t = ckpt.get_f32(name);
        if (t.shape != dst.shape) {
            throw DataError("checkpoint: entry '" + name + "' has shape " + t.shape.str() +
                            ", model expects " + dst.shape.str());
        }
        dst = std::move(t);
    };
    pull(p.name, p.value);
    pull(p.name + ".m", p.m);
    pull(p.name + ".v", p.v);
    p.step = ckpt.get_i64(p.name + ".step");
}

/// Repeats a (1,C,H,W) mask across the batch axis.
TensorF tile_batch(const TensorF& m, std::int64_t n) {
    TensorF out(Shape4{n, m.shape.c, m.shape.h, m.shape.w});
    for (std::int64_t i = 0; i < n; ++i) {
        std::copy(m.data.begin(), m.data.end(), out.data.begin() + i * m.numel());
    }
    return out;
}

std::string sanitize(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        if (c == ':' || c == '/' || c == ' ') c = '_';
    }
    return out;
}

void write_triptych(const fs::path& dir, const std::string& tag, const HsiCube& truth,
                    const HsiCube& degraded, const HsiCube& recon) {
    const auto bands = default_false_color_bands(truth.B);
    fs::create_directories(dir);
    write_png_rgb(dir / (tag + "_truth.png"), false_color(truth, bands), truth.H, truth.W);
    write_png_rgb(dir / (tag + "_degraded.png"), false_color(degraded, bands), degraded.H, degraded.W);
    write_png_rgb(dir / (tag + "_recon.png"), false_color(recon, bands), recon.H, recon.W);
}

}  // namespace

RtcsModel build_model(const RunConfig& cfg) {
    cfg.validate();
    RtcsModel m;
    m.run = cfg;
    try {
        m.enc = shape_for_rate(cfg.bands, cfg.height, cfg.stripe_w, cfg.sampling_rate);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    m.enc_w = Parameter<float>("encoder.w", init_encoder_weights(m.enc, cfg.seed));
    m.net = std::make_unique<CsfNet>(decoder_config(cfg, m.enc), m.enc, cfg.seed + 1);
    return m;
}

Checkpoint model_checkpoint(const RtcsModel& model, std::int64_t epoch, const std::string& rng_state) {
    Checkpoint ckpt;
    ckpt.config_hash = config_hash(model.run);
    ckpt.add_i64("epoch", epoch);
    ckpt.add_bytes("rng", std::vector<std::uint8_t>(rng_state.begin(), rng_state.end()));
    add_param(ckpt, model.enc_w);
    for (const auto& p : model.net->params()) add_param(ckpt, p);
    return ckpt;
}

std::pair<std::int64_t, std::string> restore_model(RtcsModel& model, const Checkpoint& ckpt) {
    if (ckpt.config_hash != config_hash(model.run) && !model.run.allow_hash_mismatch) {
        throw DataError("checkpoint config hash does not match the active config "
                        "(set allow_hash_mismatch=true to override)");
    }
    load_param(ckpt, model.enc_w);
    for (auto& p : model.net->params()) load_param(ckpt, p);
    const auto bytes = ckpt.get_bytes("rng");
    return {ckpt.get_i64("epoch"), std::string(bytes.begin(), bytes.end())};
}

void cmd_synth(const RunConfig& cfg, const fs::path& out_dir, bool overwrite) {
    cfg.validate();
    if (fs::exists(out_dir) && !fs::is_empty(out_dir) && !overwrite) {
        throw DataError("output directory " + out_dir.string() +
                        " is not empty (pass --overwrite to replace it)");
    }
    fs::create_directories(out_dir);
    DatasetManifest man;
    man.seed = cfg.seed;
    man.K = cfg.endmembers;
    man.B = cfg.bands;
    man.H = cfg.height;
    man.W = cfg.width;
    const std::int64_t total = cfg.n_train + cfg.n_val + cfg.n_test;
    // one material library per dataset: scenes of a corpus share endmembers,
    // only the abundance fields vary cube to cube
    const EndmemberLib lib =
        synth_endmembers(cfg.endmembers, cfg.bands, cfg.seed * 1000003ULL + 17ULL);
    for (std::int64_t i = 0; i < total; ++i) {
        const std::uint64_t cube_seed = cfg.seed + 1000003ULL * static_cast<std::uint64_t>(i + 1);
        HsiCube cube = synth_scene(lib, cfg.height, cfg.width, cube_seed);
        std::ostringstream name;
        name << "cube_" << std::setw(4) << std::setfill('0') << i << ".hsic";
        save_cube(cube, out_dir / name.str());
        if (i < cfg.n_train) man.train.push_back(name.str());
        else if (i < cfg.n_train + cfg.n_val) man.val.push_back(name.str());
        else man.test.push_back(name.str());
    }
    man.save(out_dir / "manifest.txt");
}

Dataset load_dataset(const fs::path& dir, const std::vector<std::string>& splits) {
    const fs::path man_path = dir / "manifest.txt";
    if (!fs::exists(man_path)) {
        throw DataError("no dataset manifest at " + man_path.string() + " (run synth first)");
    }
    Dataset ds;
    ds.manifest = DatasetManifest::load(man_path);
    auto load_split = [&](const std::vector<std::string>& names, std::vector<HsiCube>& out) {
        for (const auto& n : names) {
            const fs::path p = dir / n;
            if (!fs::exists(p)) throw DataError("dataset cube missing: " + p.string());
            out.push_back(load_cube(p));
        }
    };
    for (const auto& s : splits) {
        if (s == "train") load_split(ds.manifest.train, ds.train);
        else if (s == "val") load_split(ds.manifest.val, ds.val);
        else if (s == "test") {
            load_split(ds.manifest.test, ds.test);
            ds.test_names = ds.manifest.test;
        } else {
            throw std::logic_error("load_dataset: unknown split '" + s + "'");
        }
    }
    return ds;
}

HsiCube reconstruct_cube(const RtcsModel& model, const HsiCube& cube,
                         const std::optional<MaskSpec>& mask, double snr_db,
                         const QuantizedEncoder* q, std::uint64_t noise_seed,
                         HsiCube* degraded_out) {
    StripeSet stripes = pushbroom_stripes(cube, model.run.stripe_w);
    StripeSet recon = stripes;
    StripeSet degraded = stripes;
    for (std::size_t i = 0; i < stripes.stripes.size(); ++i) {
        TensorF x = stripes.stripes[i];
        if (mask) {
            MaskSpec ms = *mask;
            ms.seed = mask->seed + 31ULL * i;  // fresh random rows per stripe (PM)
            x = apply_mask(x, gen_mask(ms, cube.B, cube.H, model.run.stripe_w));
            degraded.stripes[i] = x;
        }
        CompressedStripe z = q ? encode_int8(x, *q, model.enc)
                               : encode(x, model.enc_w.value, model.enc);
        if (std::isfinite(snr_db)) {
            z.data = add_awgn(z.data, NoiseSpec{snr_db, noise_seed + i});
        }
        recon.stripes[i] = model.net->forward(z.data);
    }
    HsiCube out = reassemble(recon, cube.native_scale);
    if (degraded_out) *degraded_out = reassemble(degraded, cube.native_scale);
    return out;
}

TrainResult cmd_train(const RunConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    fs::create_directories(out_dir);
    Dataset ds = load_dataset(cfg.data_dir, {"train", "val"});
    if (ds.manifest.B != cfg.bands || ds.manifest.H != cfg.height || ds.manifest.W != cfg.width) {
        throw DataError("dataset geometry " + std::to_string(ds.manifest.B) + "x" +
                        std::to_string(ds.manifest.H) + "x" + std::to_string(ds.manifest.W) +
                        " does not match the config");
    }
    std::vector<TensorF> train_stripes;
    for (const auto& cube : ds.train) {
        StripeSet s = pushbroom_stripes(cube, cfg.stripe_w);
        for (auto& t : s.stripes) train_stripes.push_back(std::move(t));
    }
    if (train_stripes.empty()) throw DataError("training split is empty");

    RtcsModel model = build_model(cfg);
    std::mt19937_64 rng(cfg.seed);
    std::int64_t start_epoch = 0;
    const bool resuming = !cfg.resume.empty();
    if (resuming) {
        auto [epoch, state] = restore_model(model, load_checkpoint(cfg.resume));
        start_epoch = epoch;
        rng_from_string(rng, state);
    }

    std::vector<Parameter<float>*> params;
    params.push_back(&model.enc_w);
    for (auto& p : model.net->params()) params.push_back(&p);
    AdamWConfig acfg;
    acfg.lr = cfg.lr;
    acfg.beta1 = cfg.beta1;
    acfg.beta2 = cfg.beta2;
    acfg.eps = cfg.adam_eps;
    acfg.weight_decay = cfg.weight_decay;
    acfg.decay_epochs = cfg.lr_decay_epochs;

    const fs::path log_path = out_dir / "train_log.csv";
    std::ofstream log(log_path, resuming ? std::ios::app : std::ios::out);
    if (!log) throw DataError("cannot open training log " + log_path.string());
    if (!resuming) log << "epoch,lr,loss,l1,sam_rad,val_psnr,val_rmse,val_sam\n";
    log << std::setprecision(15);

    LossConfig lcfg;
    lcfg.alpha = cfg.alpha;

    auto validate_now = [&]() -> MetricsReport {
        MetricsReport avg;
        if (ds.val.empty()) return avg;
        for (const auto& cube : ds.val) {
            HsiCube rec = reconstruct_cube(model, cube, std::nullopt,
                                           std::numeric_limits<double>::infinity(), nullptr, 0);
            MetricsReport r = compute_metrics(cube.as_tensor(), rec.as_tensor(), cube.native_scale);
            avg.psnr += r.psnr;
            avg.rmse += r.rmse;
            avg.sam += r.sam;
        }
        const double n = static_cast<double>(ds.val.size());
        avg.psnr /= n;
        avg.rmse /= n;
        avg.sam /= n;
        return avg;
    };

    TrainResult result;
    result.log_path = log_path;
    std::uniform_int_distribution<std::size_t> pick(0, train_stripes.size() - 1);
    const std::int64_t n = cfg.batch_size;
    const Shape4 batch_shape{n, cfg.bands, cfg.height, cfg.stripe_w};

    // adds seeded measurement noise as a constant offset so gradients still
    // flow through Z
    auto with_noise = [&](TensorF z, Tape<float>& tape) {
        if (!cfg.noise_train) return z;
        TensorF noisy = add_awgn(z, NoiseSpec{cfg.noise_snr_db, rng()});
        TensorF delta(z.shape);
        for (std::size_t i = 0; i < delta.data.size(); ++i) delta.data[i] = noisy.data[i] - z.data[i];
        return add(z, delta, &tape);
    };

    for (std::int64_t epoch = start_epoch + 1; epoch <= cfg.epochs; ++epoch) {
        TensorF batch(batch_shape);
        for (std::int64_t i = 0; i < n; ++i) {
            const TensorF& s = train_stripes[pick(rng)];
            std::copy(s.data.begin(), s.data.end(), batch.data.begin() + i * s.numel());
        }
        std::optional<Mask> mask;
        if (cfg.aug_enabled) {
            mask = draw_training_mask(cfg.bands, cfg.height, cfg.stripe_w, rng, cfg.mask_p,
                                      cfg.mask_band_frac);
        }

        Tape<float> tape;
        TensorF w_enc = tape.watch(model.enc_w.value);
        TapeBinding binding = model.net->bind(tape);
        auto encode_branch = [&](const TensorF& x) {
            TensorF z = cfg.qat ? qat_forward(x, w_enc, model.enc, &tape)
                                : encode_forward(x, w_enc, model.enc, &tape);
            return with_noise(std::move(z), tape);
        };

        TensorF x_clean = model.net->forward(encode_branch(batch), &tape, &binding);
        TensorF loss;
        if (mask) {
            TensorF mask_b = tile_batch(*mask, n);
            TensorF x_masked = model.net->forward(encode_branch(apply_mask(batch, mask_b)),
                                                  &tape, &binding);
            loss = aug_loss(batch, x_clean, x_masked, mask_b, lcfg, &tape, cfg.aug_literal);
        } else {
            loss = total_loss(batch, x_clean, lcfg, &tape);
        }

        const double loss_val = loss.item();
        const double l1_val = l1_loss(batch, x_clean).item();
        const double sam_val = sam_loss(batch, x_clean).item();
        if (!std::isfinite(loss_val)) {
            log << epoch << "," << scheduled_lr(acfg, epoch - 1) << ",nan,nan,nan,,,\n";
            throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) +
                                 " (recorded in " + log_path.string() + ")");
        }

        tape.backward(loss);
        {
            const TensorF& g = tape.grad(w_enc.node);
            for (std::size_t i = 0; i < g.data.size(); ++i) model.enc_w.grad.data[i] += g.data[i];
        }
        model.net->collect_grads(tape, binding);
        adamw_step(std::span<Parameter<float>*>(params), acfg, scheduled_lr(acfg, epoch - 1));
        for (auto* p : params) p->zero_grad();

        const bool do_val = (epoch % cfg.val_every == 0) || epoch == cfg.epochs;
        log << epoch << "," << scheduled_lr(acfg, epoch - 1) << "," << loss_val << "," << l1_val
            << "," << sam_val << ",";
        if (do_val) {
            const MetricsReport v = validate_now();
            log << v.psnr << "," << v.rmse << "," << v.sam << "\n";
            result.final_val = v;
        } else {
            log << ",,\n";
        }
        result.final_loss = loss_val;
        result.epochs_run = epoch;

        if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 && epoch != cfg.epochs) {
            std::ostringstream name;
            name << "ckpt_" << std::setw(6) << std::setfill('0') << epoch << ".rtck";
            save_checkpoint(model_checkpoint(model, epoch, rng_to_string(rng)), out_dir / name.str());
        }
    }

    result.checkpoint_path = out_dir / "model.rtck";
    save_checkpoint(model_checkpoint(model, cfg.epochs, rng_to_string(rng)), result.checkpoint_path);
    return result;
}

std::vector<fs::path> cmd_encode(const RunConfig& cfg, const fs::path& checkpoint_path,
                                 const std::vector<fs::path>& cubes, const fs::path& out_dir,
                                 bool int8) {
    RtcsModel model = build_model(cfg);
    restore_model(model, load_checkpoint(checkpoint_path));
    fs::create_directories(out_dir);
    QuantizedEncoder q;
    if (int8) q = quantize_pq(model.enc_w.value);

    std::vector<fs::path> written;
    for (const auto& cube_path : cubes) {
        if (!fs::exists(cube_path)) throw DataError("cube not found: " + cube_path.string());
        HsiCube cube = load_cube(cube_path);
        if (cube.B != cfg.bands || cube.H != cfg.height) {
            throw DataError("cube " + cube_path.string() + " geometry does not match the config");
        }
        StripeSet stripes = pushbroom_stripes(cube, cfg.stripe_w);
        Bitstream bs;
        for (std::size_t i = 0; i < stripes.stripes.size(); ++i) {
            bs.index.push_back(static_cast<std::uint32_t>(stripes.index[i]));
            bs.stripes.push_back(int8 ? encode_int8(stripes.stripes[i], q, model.enc)
                                      : encode(stripes.stripes[i], model.enc_w.value, model.enc));
        }
        const fs::path out = out_dir / (cube_path.stem().string() + ".rtcz");
        save_bitstream(bs, out);
        written.push_back(out);
    }
    return written;
}

std::vector<fs::path> cmd_decode(const RunConfig& cfg, const fs::path& checkpoint_path,
                                 const std::vector<fs::path>& bitstreams, const fs::path& out_dir) {
    RtcsModel model = build_model(cfg);
    restore_model(model, load_checkpoint(checkpoint_path));
    fs::create_directories(out_dir);

    std::vector<fs::path> written;
    for (const auto& bs_path : bitstreams) {
        if (!fs::exists(bs_path)) throw DataError("bitstream not found: " + bs_path.string());
        Bitstream bs = load_bitstream(bs_path);
        StripeSet recon;
        recon.B = cfg.bands;
        recon.H = cfg.height;
        recon.stripe_w = cfg.stripe_w;
        for (std::size_t i = 0; i < bs.stripes.size(); ++i) {
            const Shape4& s = bs.stripes[i].data.shape;
            if (s.c != model.enc.b || s.h != model.enc.out_h() || s.w != model.enc.out_w()) {
                throw DataError("bitstream " + bs_path.string() + " stripe geometry " + s.str() +
                                " does not match the decoder (expected (1," +
                                std::to_string(model.enc.b) + "," + std::to_string(model.enc.out_h()) +
                                "," + std::to_string(model.enc.out_w()) + "))");
            }
            recon.stripes.push_back(model.net->forward(bs.stripes[i].data));
            recon.index.push_back(bs.index[i]);
        }
        HsiCube cube = reassemble(recon);
        const fs::path out = out_dir / (bs_path.stem().string() + ".hsic");
        save_cube(cube, out);
        written.push_back(out);
    }
    return written;
}

std::string Scenario::str() const {
    switch (kind) {
        case Kind::Clean: return "clean";
        case Kind::Mask:
            return "mask:" + to_string(mask_kind) + ":" + std::to_string(band_lo) + "-" +
                   std::to_string(band_hi);
        case Kind::Noise: {
            std::ostringstream os;
            os << "noise:" << snr_db;
            return os.str();
        }
        case Kind::Int8: return qat ? "int8:qat" : "int8:pq";
    }
    return "?";
}

Scenario parse_scenario(const std::string& text) {
    const std::string usage =
        "valid scenarios: clean | mask:{PM,BM,CM}:lo-hi | noise:SNR_DB | int8:{pq,qat}";
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    Scenario sc;
    if (parts.size() == 1 && parts[0] == "clean") {
        sc.kind = Scenario::Kind::Clean;
        return sc;
    }
    if (parts.size() == 3 && parts[0] == "mask") {
        sc.kind = Scenario::Kind::Mask;
        try {
            sc.mask_kind = mask_kind_from_string(parts[1]);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string(e.what()) + "; " + usage);
        }
        const auto dash = parts[2].find('-');
        if (dash == std::string::npos) throw ConfigError("bad band range '" + parts[2] + "'; " + usage);
        try {
            sc.band_lo = std::stoll(parts[2].substr(0, dash));
            sc.band_hi = std::stoll(parts[2].substr(dash + 1));
        } catch (const std::exception&) {
            throw ConfigError("bad band range '" + parts[2] + "'; " + usage);
        }
        if (sc.band_lo < 0 || sc.band_hi < sc.band_lo) {
            throw ConfigError("bad band range '" + parts[2] + "' (need 0 <= lo <= hi); " + usage);
        }
        return sc;
    }
    if (parts.size() == 2 && parts[0] == "noise") {
        sc.kind = Scenario::Kind::Noise;
        try {
            sc.snr_db = std::stod(parts[1]);
        } catch (const std::exception&) {
            throw ConfigError("bad SNR '" + parts[1] + "'; " + usage);
        }
        if (!(sc.snr_db > 0)) throw ConfigError("SNR must be positive; " + usage);
        return sc;
    }
    if (parts.size() == 2 && parts[0] == "int8") {
        sc.kind = Scenario::Kind::Int8;
        if (parts[1] == "pq") sc.qat = false;
        else if (parts[1] == "qat") sc.qat = true;
        else throw ConfigError("unknown int8 flavor '" + parts[1] + "'; " + usage);
        return sc;
    }
    throw ConfigError("unknown scenario '" + text + "'; " + usage);
}

std::array<std::int64_t, 3> default_false_color_bands(std::int64_t B) {
    if (B > 61) return {13, 25, 61};
    // scale the canonical triple into the available spectral axis
    auto scaled = [&](std::int64_t b) {
        return std::clamp<std::int64_t>(std::llround(static_cast<double>(b) * B / 172.0), 0, B - 1);
    };
    return {scaled(13), scaled(25), scaled(61)};
}

EvalResult cmd_evaluate(const RunConfig& cfg, const fs::path& checkpoint_path,
                        const std::string& scenario_text, const fs::path& out_dir) {
    const Scenario sc = parse_scenario(scenario_text);
    RtcsModel model = build_model(cfg);
    restore_model(model, load_checkpoint(checkpoint_path));
    Dataset ds = load_dataset(cfg.data_dir, {"test"});
    if (ds.test.empty()) throw DataError("test split is empty");
    fs::create_directories(out_dir);

    QuantizedEncoder q;
    const QuantizedEncoder* qp = nullptr;
    if (sc.kind == Scenario::Kind::Int8) {
        q = quantize_pq(model.enc_w.value);
        qp = &q;
    }
    std::optional<MaskSpec> mask;
    if (sc.kind == Scenario::Kind::Mask) {
        if (sc.band_lo < 0 || sc.band_lo > sc.band_hi || sc.band_hi >= cfg.bands) {
            throw ConfigError("mask band range " + std::to_string(sc.band_lo) + "-" +
                              std::to_string(sc.band_hi) + " is invalid for bands=" +
                              std::to_string(cfg.bands));
        }
        MaskSpec ms;
        ms.kind = sc.mask_kind;
        ms.band_lo = sc.band_lo;
        ms.band_hi = sc.band_hi;
        mask = ms;
    }
    const double snr = sc.kind == Scenario::Kind::Noise ? sc.snr_db
                                                        : std::numeric_limits<double>::infinity();

    EvalResult result;
    MetricsReport sum;
    for (std::size_t i = 0; i < ds.test.size(); ++i) {
        std::optional<MaskSpec> ms = mask;
        if (ms) ms->seed = cfg.seed + 104729ULL * (i + 1);
        HsiCube degraded;
        HsiCube rec = reconstruct_cube(model, ds.test[i], ms, snr, qp,
                                       cfg.seed + 77777ULL * (i + 1), &degraded);
        MetricsReport r = compute_metrics(ds.test[i].as_tensor(), rec.as_tensor(),
                                          ds.test[i].native_scale);
        const std::string cube_name = fs::path(ds.test_names[i]).stem().string();
        result.per_cube.push_back(EvalRow{sc.str(), cube_name, r});
        sum.psnr += r.psnr;
        sum.rmse += r.rmse;
        sum.sam += r.sam;
        write_triptych(out_dir / "img", sanitize(sc.str()) + "_" + cube_name, ds.test[i], degraded, rec);
    }
    const double n = static_cast<double>(ds.test.size());
    result.average = EvalRow{sc.str(), "average", MetricsReport{sum.psnr / n, sum.rmse / n, sum.sam / n}};
    return result;
}

void write_metrics_csv(const fs::path& path, const std::vector<EvalResult>& results) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open metrics CSV " + path.string());
    os << std::setprecision(15);
    os << "scenario,cube,psnr,rmse,sam\n";
    for (const auto& res : results) {
        for (const auto& row : res.per_cube) {
            os << row.scenario << "," << row.cube << "," << row.metrics.psnr << ","
               << row.metrics.rmse << "," << row.metrics.sam << "\n";
        }
        os << res.average.scenario << "," << res.average.cube << "," << res.average.metrics.psnr
           << "," << res.average.metrics.rmse << "," << res.average.metrics.sam << "\n";
    }
}

QuantizeReport cmd_quantize(const RunConfig& cfg, const fs::path& checkpoint_path,
                            const fs::path& out_dir) {
    RtcsModel model = build_model(cfg);
    Checkpoint ckpt = load_checkpoint(checkpoint_path);
    restore_model(model, ckpt);
    fs::create_directories(out_dir);

    const QuantizedEncoder q = quantize_pq(model.enc_w.value);
    const TensorF deq = q.dequantized();

    Checkpoint out = ckpt;
    for (auto& e : out.entries) {
        if (e.name == "encoder.w") {
            std::memcpy(e.payload.data(), deq.data.data(), e.payload.size());
        }
    }
    if (!out.has("encoder.w_i8")) {
        out.add_i8("encoder.w_i8", q.weights_i8,
                   {static_cast<std::uint32_t>(q.shape.n), static_cast<std::uint32_t>(q.shape.c),
                    static_cast<std::uint32_t>(q.shape.h), static_cast<std::uint32_t>(q.shape.w)});
        out.add_f64("encoder.w_scale", q.scale);
    }

    QuantizeReport report;
    report.checkpoint_path = out_dir / "model_int8.rtck";
    report.scale = q.scale;
    report.sqnr = sqnr_db(model.enc_w.value, deq);
    save_checkpoint(out, report.checkpoint_path);
    return report;
}

}  // namespace rtcs
