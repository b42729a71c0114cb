#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rtcs/config.hpp"
#include "rtcs/decoder.hpp"
#include "rtcs/degradation.hpp"
#include "rtcs/encoder.hpp"
#include "rtcs/hsi_data.hpp"
#include "rtcs/metrics.hpp"
#include "rtcs/serialization.hpp"

namespace rtcs {

/// Encoder weights + decoder network assembled from a RunConfig.
struct RtcsModel {
    RunConfig run;
    EncoderConfig enc;
    Parameter<float> enc_w;  // "encoder.w"
    std::unique_ptr<CsfNet> net;
};

RtcsModel build_model(const RunConfig& cfg);

/// Snapshot of a model plus optimizer/scheduler/RNG state for bit-identical
/// resume. `rng_state` is the text form of the training mt19937_64.
Checkpoint model_checkpoint(const RtcsModel& model, std::int64_t epoch, const std::string& rng_state);

/// Restores parameters and optimizer moments; returns (epoch, rng_state).
/// Hash mismatch against the model's config is an error unless allowed.
std::pair<std::int64_t, std::string> restore_model(RtcsModel& model, const Checkpoint& ckpt);

/// Loaded dataset split.
struct Dataset {
    DatasetManifest manifest;
    std::vector<HsiCube> train, val, test;
    std::vector<std::string> test_names;
};

/// Generates the synthetic corpus and manifest under `out_dir`.
void cmd_synth(const RunConfig& cfg, const std::filesystem::path& out_dir, bool overwrite);

/// Loads cubes listed in `dir`/manifest.txt. `splits` selects which lists to
/// materialize ("train","val","test").
Dataset load_dataset(const std::filesystem::path& dir, const std::vector<std::string>& splits);

struct TrainResult {
    std::filesystem::path checkpoint_path;
    std::filesystem::path log_path;
    double final_loss = 0;
    MetricsReport final_val;
    std::int64_t epochs_run = 0;
};

/// Full training loop: per epoch one AdamW step on a sampled batch, scheduled
/// lr, optional mask augmentation / measurement noise / QAT, CSV log,
/// checkpoints under `out_dir`. Non-finite loss raises NumericalError with the
/// offending epoch recorded in the log.
TrainResult cmd_train(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// One bitstream per input cube (stripe-sequential). int8 switches the
/// measurement path to encode_int8 with PQ weights.
std::vector<std::filesystem::path> cmd_encode(const RunConfig& cfg,
                                              const std::filesystem::path& checkpoint_path,
                                              const std::vector<std::filesystem::path>& cubes,
                                              const std::filesystem::path& out_dir, bool int8);

/// Reconstructs cubes from bitstreams with the trained decoder.
std::vector<std::filesystem::path> cmd_decode(const RunConfig& cfg,
                                              const std::filesystem::path& checkpoint_path,
                                              const std::vector<std::filesystem::path>& bitstreams,
                                              const std::filesystem::path& out_dir);

/// Degradation scenario applied at evaluation time.
struct Scenario {
    enum class Kind { Clean, Mask, Noise, Int8 } kind = Kind::Clean;
    MaskKind mask_kind = MaskKind::CM;
    std::int64_t band_lo = 0, band_hi = 0;
    double snr_db = 30.0;
    bool qat = false;  // int8 flavor tag (pq vs qat); the arithmetic is identical

    std::string str() const;
};

/// Parses "clean" | "mask:{PM,BM,CM}:lo-hi" | "noise:SNR" | "int8:{pq,qat}".
Scenario parse_scenario(const std::string& text);

struct EvalRow {
    std::string scenario;
    std::string cube;
    MetricsReport metrics;
};

struct EvalResult {
    std::vector<EvalRow> per_cube;
    EvalRow average;
};

/// Runs one scenario over the test split: per-cube and averaged PSNR/RMSE/SAM
/// plus a false-color triptych (truth, degraded, reconstruction) per cube.
EvalResult cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& checkpoint_path,
                        const std::string& scenario_text, const std::filesystem::path& out_dir);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EvalResult>& results);

struct QuantizeReport {
    std::filesystem::path checkpoint_path;
    double scale = 0;
    double sqnr = 0;
};

/// PQ-quantizes the encoder weights of a checkpoint (decoder stays float) and
/// reports the per-tensor scale and SQNR.
QuantizeReport cmd_quantize(const RunConfig& cfg, const std::filesystem::path& checkpoint_path,
                            const std::filesystem::path& out_dir);

/// False-color band triple scaled into range for cubes with fewer than 62
/// bands (the canonical indices assume a long spectral axis).
std::array<std::int64_t, 3> default_false_color_bands(std::int64_t B);

/// Reconstructs a full cube through encode -> decode. Used by evaluation and
/// exposed for tests. `mask` (optional) degrades the input stripes first;
/// `snr_db` finite adds measurement noise; `q` non-null uses the int8 path.
HsiCube reconstruct_cube(const RtcsModel& model, const HsiCube& cube,
                         const std::optional<MaskSpec>& mask, double snr_db,
                         const QuantizedEncoder* q, std::uint64_t noise_seed,
                         HsiCube* degraded_out = nullptr);

}  // namespace rtcs
