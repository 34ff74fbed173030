// svdprune: command-line front end for token pruning, FLOPs estimation, and
// the attention-bias simulation. Exit codes: 0 success, 2 usage error,
// 3 format or data error, 4 numerical failure.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "svdprune/bias.hpp"
#include "svdprune/errors.hpp"
#include "svdprune/flops.hpp"
#include "svdprune/npy.hpp"
#include "svdprune/prune.hpp"
#include "svdprune/types.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct PruneArgs {
    std::string input;
    std::string batch_dir;
    double epsilon = 0.9;
    long long min_tokens = 4;
    long long budget = 0;
    bool have_budget = false;
    std::string output;
    std::string report;
    bool indices_only = false;
};

struct FlopsArgs {
    int vision_tokens = 0;
    long long text_tokens = 50;
    bool have_text_tokens = false;
    std::string config_path;
    std::string format = "table";
};

struct BiasArgs {
    long long seq_len = 576;
    long long trials = 1000;
    double self_boost = 0.0;
    std::string scheme = "all";
    std::uint64_t seed = 0;
    std::string out;
};

svdprune::PruneConfig make_prune_config(const PruneArgs& a) {
    if (a.min_tokens < 1) throw svdprune::ParamError("--min-tokens must be at least 1");
    svdprune::PruneConfig cfg;
    cfg.epsilon = a.epsilon;
    cfg.min_tokens = static_cast<std::size_t>(a.min_tokens);
    if (a.have_budget) {
        if (a.budget < 1) throw svdprune::ParamError("--budget must be at least 1");
        cfg.budget = static_cast<std::size_t>(a.budget);
        cfg.mode = svdprune::PruneMode::Budget;
    }
    cfg.validate();
    return cfg;
}

ordered_json build_report(const std::string& input_path, const svdprune::FeatureMatrix& m,
                          const svdprune::PruneConfig& cfg, const svdprune::PruneResult& r) {
    ordered_json report;
    report["schema_version"] = "1";
    report["input_path"] = input_path;
    report["T"] = m.rows;
    report["D"] = m.cols;
    report["epsilon"] = cfg.epsilon;
    report["min_tokens"] = cfg.min_tokens;
    report["mode"] = cfg.mode == svdprune::PruneMode::Budget ? "budget" : "adaptive";
    if (cfg.budget)
        report["budget"] = *cfg.budget;
    else
        report["budget"] = nullptr;
    report["truncation_rank"] = r.truncation_rank;
    report["singular_values"] = r.singular_values;
    report["variance_cumulative"] = r.variance.cumulative;
    report["leverage_scores"] = r.leverage_scores;
    report["selected_indices"] = r.selected_indices;
    report["m"] = r.selected_indices.size();
    report["cumulative_leverage_at_m"] = r.cumulative_leverage_at_m;
    return report;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw svdprune::IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out.flush()) throw svdprune::IoError("failed writing " + path.string());
}

// x.npy -> x<suffix>; anything else appends the suffix.
fs::path sibling_path(const fs::path& input, const std::string& suffix) {
    fs::path p = input;
    if (p.extension() == ".npy") p.replace_extension();
    p += suffix;
    return p;
}

void prune_one_file(const std::string& input, const svdprune::PruneConfig& cfg,
                    const std::optional<fs::path>& output,
                    const std::optional<fs::path>& report_path, bool indices_only,
                    bool print_indices) {
    const svdprune::FeatureMatrix m = svdprune::load_matrix(input);
    const svdprune::PruneResult r = svdprune::prune(m, cfg);

    if (!indices_only) {
        const fs::path out_path =
            output ? *output : sibling_path(input, ".pruned.npy");
        svdprune::save_matrix(r.pruned, out_path);
    }
    if (report_path)
        write_text_file(*report_path, build_report(input, m, cfg, r).dump(2) + "\n");

    if (print_indices) {
        for (std::size_t i = 0; i < r.selected_indices.size(); ++i)
            std::cout << (i ? "," : "") << r.selected_indices[i];
        std::cout << "\n";
    }
    std::cerr << "svdprune: " << input << ": kept " << r.selected_indices.size() << "/"
              << m.rows << " tokens, truncation rank " << r.truncation_rank << "\n";
}

int exit_code_for(const svdprune::Error& e) {
    if (dynamic_cast<const svdprune::ParamError*>(&e)) return kExitUsage;
    if (dynamic_cast<const svdprune::DegenerateInputError*>(&e) ||
        dynamic_cast<const svdprune::NumericalError*>(&e))
        return kExitNumerical;
    return kExitData;
}

int run_prune(const PruneArgs& a) {
    const svdprune::PruneConfig cfg = make_prune_config(a);

    if (a.batch_dir.empty()) {
        if (a.input.empty())
            throw svdprune::ParamError("prune needs an input file or --batch <dir>");
        std::optional<fs::path> output;
        if (!a.output.empty()) output = fs::path(a.output);
        std::optional<fs::path> report;
        if (!a.report.empty()) report = fs::path(a.report);
        prune_one_file(a.input, cfg, output, report, a.indices_only,
                       a.indices_only && !report);
        return 0;
    }

    std::error_code ec;
    fs::directory_iterator it(a.batch_dir, ec);
    if (ec)
        throw svdprune::IoError("cannot read directory " + a.batch_dir + ": " + ec.message());

    std::vector<fs::path> inputs;
    for (const auto& entry : it) {
        if (!entry.is_regular_file()) continue;
        const fs::path& p = entry.path();
        if (p.extension() != ".npy") continue;
        // outputs of a previous run are not inputs
        if (p.filename().string().size() > 11 &&
            p.filename().string().rfind(".pruned.npy") ==
                p.filename().string().size() - 11)
            continue;
        inputs.push_back(p);
    }
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty()) {
        std::cerr << "svdprune: no .npy files in " << a.batch_dir << "\n";
        return 0;
    }

    int worst = 0;
    for (const auto& p : inputs) {
        try {
            prune_one_file(p.string(), cfg, sibling_path(p, ".pruned.npy"),
                           sibling_path(p, ".report.json"), a.indices_only, false);
        } catch (const svdprune::Error& e) {
            std::cerr << "svdprune: " << p.string() << ": " << e.what() << "\n";
            worst = std::max(worst, exit_code_for(e));
        }
    }
    return worst;
}

int run_flops(const FlopsArgs& a) {
    svdprune::FlopsConfig cfg;
    if (!a.config_path.empty()) {
        std::ifstream in(a.config_path, std::ios::binary);
        if (!in)
            throw svdprune::IoError("cannot open config file " + a.config_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        cfg = svdprune::flops_config_from_json(buf.str());
    }
    if (a.have_text_tokens) {
        if (a.text_tokens < 0)
            throw svdprune::ParamError("--text-tokens must be non-negative");
        cfg.text_tokens = static_cast<int>(a.text_tokens);
    }

    const svdprune::FlopsReport r = svdprune::estimate_flops(a.vision_tokens, cfg);

    if (a.format == "json") {
        ordered_json out;
        out["vision_gflops"] = r.vision_gflops;
        out["projector_gflops"] = r.projector_gflops;
        out["llm_tflops"] = r.llm_tflops;
        out["total_tflops"] = r.total_tflops;
        out["reduction_percent"] = r.reduction_percent;
        std::cout << out.dump(2) << "\n";
    } else {
        char line[160];
        std::snprintf(line, sizeof(line), "%6s  %10s  %13s  %8s  %9s  %13s\n", "Tokens",
                      "Vision [G]", "Projector [G]", "LLM [T]", "Total [T]",
                      "Reduction [%]");
        std::cout << line;
        std::snprintf(line, sizeof(line), "%6d  %10.3f  %13.3f  %8.3f  %9.3f  %13.1f\n",
                      a.vision_tokens, r.vision_gflops, r.projector_gflops, r.llm_tflops,
                      r.total_tflops, r.reduction_percent);
        std::cout << line;
    }
    return 0;
}

int run_bias(const BiasArgs& a) {
    if (a.seq_len < 2) throw svdprune::ParamError("--seq-len must be at least 2");
    if (a.trials < 1) throw svdprune::ParamError("--trials must be at least 1");
    svdprune::BiasSimConfig cfg;
    cfg.seq_len = static_cast<std::size_t>(a.seq_len);
    cfg.trials = static_cast<std::size_t>(a.trials);
    cfg.self_boost = a.self_boost;
    cfg.scheme = a.scheme == "attenders" ? svdprune::AveragingScheme::AttendingTokens
                                         : svdprune::AveragingScheme::AllTokens;
    cfg.seed = a.seed;
    cfg.validate();

    const svdprune::BiasProfile profile = svdprune::simulate_bias(cfg);

    if (a.out.empty()) {
        svdprune::write_profile_csv(profile, std::cout);
        std::cerr << "argmax_position=" << profile.argmax_position << "\n";
    } else {
        std::ostringstream buf;
        svdprune::write_profile_csv(profile, buf);
        write_text_file(a.out, buf.str());
        std::cout << "argmax_position=" << profile.argmax_position << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    const char* precision = std::getenv("SVDPRUNE_PRECISION");
    if (precision && std::string_view(precision) != "double") {
        std::cerr << "svdprune: SVDPRUNE_PRECISION supports only \"double\", got \""
                  << precision << "\"\n";
        return kExitUsage;
    }

    CLI::App app{"Variance-optimal vision-token pruning toolkit"};
    app.require_subcommand(1);

    PruneArgs pa;
    CLI::App* prune_cmd =
        app.add_subcommand("prune", "Prune tokens from an NPY feature matrix");
    CLI::Option* input_opt =
        prune_cmd->add_option("input", pa.input, "Input .npy feature matrix");
    CLI::Option* batch_opt = prune_cmd->add_option(
        "--batch", pa.batch_dir,
        "Process every .npy in a directory, writing sibling .pruned.npy and .report.json");
    input_opt->excludes(batch_opt);
    batch_opt->excludes(input_opt);
    prune_cmd->add_option("--epsilon", pa.epsilon,
                          "Cumulative leverage threshold in (0, 1]")
        ->capture_default_str();
    prune_cmd->add_option("--min-tokens", pa.min_tokens, "Lower bound on kept tokens")
        ->capture_default_str();
    CLI::Option* budget_opt = prune_cmd->add_option(
        "--budget", pa.budget, "Keep exactly this many tokens (budget mode)");
    CLI::Option* output_opt = prune_cmd->add_option(
        "--output,-o", pa.output, "Pruned matrix path (default: <input>.pruned.npy)");
    CLI::Option* report_opt =
        prune_cmd->add_option("--report", pa.report, "Write a JSON report to this path");
    prune_cmd->add_flag("--indices-only", pa.indices_only,
                        "Skip writing the pruned matrix");
    batch_opt->excludes(output_opt);
    batch_opt->excludes(report_opt);

    FlopsArgs fa;
    CLI::App* flops_cmd =
        app.add_subcommand("flops", "Estimate pipeline FLOPs for a retained token count");
    flops_cmd->add_option("--vision-tokens", fa.vision_tokens,
                          "Retained vision tokens after pruning")
        ->required();
    CLI::Option* text_opt =
        flops_cmd->add_option("--text-tokens", fa.text_tokens, "Text tokens in the LLM prompt")
            ->capture_default_str();
    flops_cmd->add_option("--config", fa.config_path,
                          "JSON file overriding the architecture constants");
    flops_cmd->add_option("--format", fa.format, "Output format")
        ->check(CLI::IsMember({"json", "table"}))
        ->capture_default_str();

    BiasArgs ba;
    CLI::App* bias_cmd = app.add_subcommand(
        "bias", "Simulate positional bias of averaged causal-attention scores");
    bias_cmd->add_option("--seq-len", ba.seq_len, "Sequence length T")
        ->capture_default_str();
    bias_cmd->add_option("--trials", ba.trials, "Monte-Carlo trials")
        ->capture_default_str();
    bias_cmd->add_option("--self-boost", ba.self_boost,
                         "Additive logit bonus on the attention diagonal")
        ->capture_default_str();
    bias_cmd->add_option("--scheme", ba.scheme, "Averaging scheme")
        ->check(CLI::IsMember({"all", "attenders"}))
        ->capture_default_str();
    bias_cmd->add_option("--seed", ba.seed, "RNG seed")->capture_default_str();
    bias_cmd->add_option("--out", ba.out, "CSV output path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    pa.have_budget = budget_opt->count() > 0;
    fa.have_text_tokens = text_opt->count() > 0;

    try {
        if (prune_cmd->parsed()) return run_prune(pa);
        if (flops_cmd->parsed()) return run_flops(fa);
        if (bias_cmd->parsed()) return run_bias(ba);
    } catch (const svdprune::Error& e) {
        std::cerr << "svdprune: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "svdprune: " << e.what() << "\n";
        return kExitData;
    }
    return 0;
}
