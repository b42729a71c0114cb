#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rtcs/errors.hpp"
#include "rtcs/pipeline.hpp"

using namespace rtcs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("rtcs_pipe_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

/// Tiny end-to-end configuration: a few seconds of work, not minutes.
RunConfig tiny_config(const fs::path& data_dir) {
    RunConfig cfg;
    cfg.data_dir = data_dir.string();
    cfg.bands = 8;
    cfg.height = 16;
    cfg.width = 8;
    cfg.stripe_w = 4;
    cfg.n_train = 3;
    cfg.n_val = 1;
    cfg.n_test = 2;
    cfg.endmembers = 3;
    cfg.sampling_rate = 0.04;  // stride 2, b = floor(8*0.04*4) = 1
    cfg.n_f = 1;
    cfg.n_base = 8;
    cfg.c_s = 4;
    cfg.frdb_width = 8;
    cfg.frdb_growth = 4;
    cfg.c_g = 4;
    cfg.epochs = 6;
    cfg.batch_size = 2;
    cfg.val_every = 3;
    cfg.checkpoint_every = 3;
    cfg.validate();
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    return std::string((std::istreambuf_iterator<char>(is)), {});
}

}  // namespace

TEST_CASE("scenario parsing") {
    CHECK(parse_scenario("clean").kind == Scenario::Kind::Clean);
    Scenario m = parse_scenario("mask:PM:10-20");
    CHECK(m.kind == Scenario::Kind::Mask);
    CHECK(m.mask_kind == MaskKind::PM);
    CHECK(m.band_lo == 10);
    CHECK(m.band_hi == 20);
    Scenario n = parse_scenario("noise:25");
    CHECK(n.kind == Scenario::Kind::Noise);
    CHECK(n.snr_db == doctest::Approx(25.0));
    CHECK(parse_scenario("int8:pq").kind == Scenario::Kind::Int8);
    CHECK(parse_scenario("int8:qat").qat);
    CHECK_THROWS_AS(parse_scenario("mask:XM:1-2"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("mask:PM:20-10"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("noise:-3"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("int8:int4"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("garbled"), ConfigError);
}

TEST_CASE("synth -> train -> encode -> decode -> evaluate, then determinism and resume") {
    TempDir root;
    const fs::path data = root.path / "data";
    RunConfig cfg = tiny_config(data);

    cmd_synth(cfg, data, false);
    CHECK(fs::exists(data / "manifest.txt"));
    Dataset ds = load_dataset(data, {"train", "val", "test"});
    REQUIRE(ds.train.size() == 3);
    REQUIRE(ds.val.size() == 1);
    REQUIRE(ds.test.size() == 2);
    // refuse to clobber without the flag
    CHECK_THROWS_AS(cmd_synth(cfg, data, false), DataError);
    CHECK_NOTHROW(cmd_synth(cfg, data, true));

    // --- two identical trainings are bit-identical ---
    const fs::path run_a = root.path / "run_a";
    const fs::path run_b = root.path / "run_b";
    TrainResult a = cmd_train(cfg, run_a);
    TrainResult b = cmd_train(cfg, run_b);
    CHECK(a.epochs_run == 6);
    CHECK(slurp(a.checkpoint_path) == slurp(b.checkpoint_path));
    CHECK(slurp(a.log_path) == slurp(b.log_path));

    // --- resume from the mid checkpoint reproduces the full run bit-exactly ---
    const fs::path run_c = root.path / "run_c";
    RunConfig rest = cfg;  // same hash: the resume keys are excluded from it
    rest.resume = (run_a / "ckpt_000003.rtck").string();
    TrainResult c = cmd_train(rest, run_c);
    CHECK(c.epochs_run == 6);
    CHECK(slurp(c.checkpoint_path) == slurp(a.checkpoint_path));

    // resuming under a different config is refused unless overridden
    RunConfig other = rest;
    other.lr *= 2;
    CHECK_THROWS_AS(cmd_train(other, root.path / "run_d"), DataError);
    other.allow_hash_mismatch = true;
    CHECK_NOTHROW(cmd_train(other, root.path / "run_d"));

    // --- encode / decode round-trip ---
    std::vector<fs::path> cube_paths;
    for (const auto& name : ds.manifest.test) cube_paths.push_back(data / name);
    const fs::path enc_out = root.path / "enc";
    auto bitstreams = cmd_encode(cfg, a.checkpoint_path, cube_paths, enc_out, false);
    REQUIRE(bitstreams.size() == 2);
    for (const auto& p : bitstreams) {
        CHECK(p.extension() == ".rtcz");
        CHECK(fs::exists(p));
    }
    auto bitstreams2 = cmd_encode(cfg, a.checkpoint_path, cube_paths, root.path / "enc2", false);
    CHECK(slurp(bitstreams[0]) == slurp(bitstreams2[0]));

    // int8 bitstreams are strictly smaller
    auto bs_i8 = cmd_encode(cfg, a.checkpoint_path, cube_paths, root.path / "enc_i8", true);
    CHECK(fs::file_size(bs_i8[0]) < fs::file_size(bitstreams[0]));

    const fs::path dec_out = root.path / "dec";
    auto recon = cmd_decode(cfg, a.checkpoint_path, bitstreams, dec_out);
    REQUIRE(recon.size() == 2);
    HsiCube rc = load_cube(recon[0]);
    CHECK(rc.B == 8);
    CHECK(rc.H == 16);
    CHECK(rc.W == 8);
    for (float v : rc.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }

    // --- evaluate: clean + one degraded scenario, CSV written ---
    const fs::path eval_out = root.path / "eval";
    EvalResult clean = cmd_evaluate(cfg, a.checkpoint_path, "clean", eval_out);
    REQUIRE(clean.per_cube.size() == 2);
    double mean_psnr = 0;
    for (const auto& r : clean.per_cube) mean_psnr += r.metrics.psnr;
    mean_psnr /= 2.0;
    CHECK(clean.average.metrics.psnr == doctest::Approx(mean_psnr).epsilon(1e-9));

    EvalResult masked = cmd_evaluate(cfg, a.checkpoint_path, "mask:CM:2-3", eval_out);
    CHECK(masked.average.metrics.psnr <= clean.average.metrics.psnr + 1.0);

    write_metrics_csv(eval_out / "metrics.csv", {clean, masked});
    const std::string csv = slurp(eval_out / "metrics.csv");
    CHECK(csv.find("scenario,cube,psnr,rmse,sam") == 0);
    CHECK(csv.find("mask:CM:2-3") != std::string::npos);
    CHECK(csv.find("average") != std::string::npos);
    // a triptych per cube
    std::size_t pngs = 0;
    for (const auto& e : fs::directory_iterator(eval_out / "img")) {
        pngs += (e.path().extension() == ".png");
    }
    CHECK(pngs >= 6);  // 2 cubes x 3 panels, per scenario

    // identical evaluations agree bit-exactly
    EvalResult clean2 = cmd_evaluate(cfg, a.checkpoint_path, "clean", root.path / "eval2");
    CHECK(clean2.average.metrics.psnr == clean.average.metrics.psnr);

    // --- quantize: reported SQNR sane, idempotent ---
    const fs::path q_out = root.path / "quant";
    QuantizeReport q = cmd_quantize(cfg, a.checkpoint_path, q_out);
    CHECK(fs::exists(q.checkpoint_path));
    CHECK(q.scale > 0);
    CHECK(q.sqnr > 20.0);  // int8 on a well-scaled tensor
    QuantizeReport q2 = cmd_quantize(cfg, q.checkpoint_path, root.path / "quant2");
    CHECK(q2.scale == doctest::Approx(q.scale).epsilon(1e-12));
    Checkpoint qc = load_checkpoint(q.checkpoint_path);
    CHECK(qc.has("encoder.w_i8"));
    CHECK(qc.has("encoder.w_scale"));

    // int8 scenario evaluates off the quantized checkpoint
    EvalResult int8_eval = cmd_evaluate(cfg, q.checkpoint_path, "int8:pq", root.path / "eval_i8");
    CHECK(int8_eval.per_cube.size() == 2);
}

TEST_CASE("mask scenario bookkeeping: CM 50-80 wipes 31 of 172 bands") {
    Scenario s = parse_scenario("mask:CM:50-80");
    const double frac = static_cast<double>(s.band_hi - s.band_lo + 1) / 172.0;
    CHECK(frac == doctest::Approx(31.0 / 172.0));
    Mask m = gen_mask(MaskSpec{s.mask_kind, s.band_lo, s.band_hi, 0.2, 0.2, 1}, 172, 16, 4);
    double zeros = 0;
    for (float v : m.data) zeros += (v == 0.0f);
    CHECK(zeros / static_cast<double>(m.data.size()) == doctest::Approx(frac).epsilon(1e-12));
}

TEST_CASE("training failure surfaces as NumericalError") {
    TempDir root;
    const fs::path data = root.path / "data";
    RunConfig cfg = tiny_config(data);
    cmd_synth(cfg, data, false);
    cfg.lr = 1e18;  // guaranteed blow-up
    cfg.epochs = 30;
    CHECK_THROWS_AS(cmd_train(cfg, root.path / "run"), NumericalError);
}

TEST_CASE("build_model rejects an inconsistent config") {
    RunConfig cfg = tiny_config("unused");
    cfg.bands = 4;
    cfg.sampling_rate = 0.005;  // b = floor(4*0.005*16) = 0
    CHECK_THROWS(build_model(cfg));
}
