#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>

#include "rtcs/errors.hpp"
#include "rtcs/pipeline.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct CommonArgs {
    std::string config_path;
    std::string profile = "desk";
    std::string out_dir;  // empty = per-command default
    std::vector<std::string> sets;  // key=value overrides
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "key=value config file");
    cmd->add_option("--profile", args.profile, "default bundle: desk or full")
        ->check(CLI::IsMember({"desk", "full"}));
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--set", args.sets, "config override key=value (repeatable, beats the file)");
    cmd->add_option("--seed", args.seed, "override the run seed")->each([&](const std::string&) {
        args.seed_given = true;
    });
}

fs::path out_or(const CommonArgs& args, const std::string& fallback) {
    return args.out_dir.empty() ? fs::path(fallback) : fs::path(args.out_dir);
}

rtcs::RunConfig resolve_config(const CommonArgs& args) {
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& kv : args.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw rtcs::ConfigError("--set expects key=value, got '" + kv + "'");
        }
        overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (args.seed_given) overrides.emplace_back("seed", std::to_string(args.seed));
    return rtcs::parse_config(args.config_path.empty() ? fs::path{} : fs::path(args.config_path),
                              overrides, rtcs::profile_config(args.profile));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RTCS hyperspectral compressed-sensing pipeline"};
    app.require_subcommand(1);

    CommonArgs synth_args, train_args, encode_args, decode_args, eval_args, quant_args;
    bool synth_overwrite = false;
    bool encode_int8 = false;
    std::vector<std::string> encode_inputs, decode_inputs;
    std::string eval_scenario = "clean";
    std::string encode_ckpt, decode_ckpt, eval_ckpt, quant_ckpt;

    auto* synth = app.add_subcommand("synth", "generate the synthetic dataset");
    add_common(synth, synth_args);
    synth->add_flag("--overwrite", synth_overwrite, "replace an existing non-empty output directory");

    auto* train = app.add_subcommand("train", "train encoder and decoder");
    add_common(train, train_args);

    auto* encode = app.add_subcommand("encode", "compress cubes into bitstreams");
    add_common(encode, encode_args);
    encode->add_option("--checkpoint", encode_ckpt, "trained checkpoint")->required();
    encode->add_option("cubes", encode_inputs, "input .hsic cubes")->required();
    encode->add_flag("--int8", encode_int8, "use the integer-8 measurement path");

    auto* decode = app.add_subcommand("decode", "reconstruct cubes from bitstreams");
    add_common(decode, decode_args);
    decode->add_option("--checkpoint", decode_ckpt, "trained checkpoint")->required();
    decode->add_option("bitstreams", decode_inputs, "input .rtcz bitstreams")->required();

    auto* evaluate = app.add_subcommand("evaluate", "run a degradation scenario over the test split");
    add_common(evaluate, eval_args);
    evaluate->add_option("--checkpoint", eval_ckpt, "trained checkpoint")->required();
    evaluate->add_option("--scenario", eval_scenario,
                         "clean | mask:{PM,BM,CM}:lo-hi | noise:SNR | int8:{pq,qat}");

    auto* quantize = app.add_subcommand("quantize", "int8-quantize the encoder of a checkpoint");
    add_common(quantize, quant_args);
    quantize->add_option("--checkpoint", quant_ckpt, "trained checkpoint")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (synth->parsed()) {
            rtcs::RunConfig cfg = resolve_config(synth_args);
            const fs::path out = out_or(synth_args, cfg.data_dir);
            rtcs::cmd_synth(cfg, out, synth_overwrite);
            std::cout << "wrote " << (cfg.n_train + cfg.n_val + cfg.n_test) << " cubes ("
                      << cfg.n_train << "/" << cfg.n_val << "/" << cfg.n_test << " split, "
                      << cfg.bands << "x" << cfg.height << "x" << cfg.width << ", seed "
                      << cfg.seed << ") to " << out.string() << "\n";
        } else if (train->parsed()) {
            rtcs::RunConfig cfg = resolve_config(train_args);
            const rtcs::TrainResult res = rtcs::cmd_train(cfg, out_or(train_args, "out"));
            std::cout << std::setprecision(6) << "trained " << res.epochs_run << " epochs, final loss "
                      << res.final_loss << ", val PSNR " << res.final_val.psnr << " dB, checkpoint "
                      << res.checkpoint_path.string() << "\n";
        } else if (encode->parsed()) {
            rtcs::RunConfig cfg = resolve_config(encode_args);
            std::vector<fs::path> cubes(encode_inputs.begin(), encode_inputs.end());
            const auto written = rtcs::cmd_encode(cfg, encode_ckpt, cubes,
                                                  out_or(encode_args, "out"), encode_int8);
            for (const auto& p : written) std::cout << p.string() << "\n";
        } else if (decode->parsed()) {
            rtcs::RunConfig cfg = resolve_config(decode_args);
            std::vector<fs::path> bitstreams(decode_inputs.begin(), decode_inputs.end());
            const auto written = rtcs::cmd_decode(cfg, decode_ckpt, bitstreams,
                                                  out_or(decode_args, "out"));
            for (const auto& p : written) std::cout << p.string() << "\n";
        } else if (evaluate->parsed()) {
            rtcs::RunConfig cfg = resolve_config(eval_args);
            const rtcs::EvalResult res = rtcs::cmd_evaluate(cfg, eval_ckpt, eval_scenario,
                                                            out_or(eval_args, "out"));
            const fs::path csv = out_or(eval_args, "out") / "metrics.csv";
            rtcs::write_metrics_csv(csv, {res});
            std::cout << std::setprecision(6) << res.average.scenario << ": PSNR "
                      << res.average.metrics.psnr << " dB, RMSE " << res.average.metrics.rmse
                      << ", SAM " << res.average.metrics.sam << " deg (" << res.per_cube.size()
                      << " cubes; " << csv.string() << ")\n";
        } else if (quantize->parsed()) {
            rtcs::RunConfig cfg = resolve_config(quant_args);
            const rtcs::QuantizeReport rep = rtcs::cmd_quantize(cfg, quant_ckpt, out_or(quant_args, "out"));
            std::cout << std::setprecision(6) << "encoder scale " << rep.scale << ", SQNR "
                      << rep.sqnr << " dB, wrote " << rep.checkpoint_path.string() << "\n";
        }
    } catch (const rtcs::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const rtcs::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const rtcs::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return 0;
}
