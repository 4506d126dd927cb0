// Copyright (C) 2026 The tokensieve Authors
// SPDX-License-Identifier: Apache-2.0

// tokensieve: prune visual tokens by text-query retrieval, analyze prefill
// cost, compare retrieval strategies, and generate planted fixtures.
//
// Exit codes: 0 success, 1 I/O failure, 2 validation or usage error. Errors
// are reported on stderr as {"error": {"code": ..., "message": ...}}.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tokensieve/json_io.hpp"
#include "tokensieve/tokensieve.hpp"

namespace ts = tokensieve;
namespace rf = tokensieve::roofline;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;

std::string format(const char* fmt, double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), fmt, value);
    return buffer;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

struct PolicyFlags {
    std::optional<std::size_t> k;
    std::optional<double> ratio;
    std::optional<double> tau;

    void add_to(CLI::App* cmd, bool with_tau) {
        auto* k_opt = cmd->add_option("--k", k, "Keep the k most relevant visual tokens");
        auto* ratio_opt = cmd->add_option("--ratio", ratio, "Reduction ratio r in [0,1); keeps ceil(N(1-r))");
        k_opt->excludes(ratio_opt);
        if (with_tau) {
            auto* tau_opt = cmd->add_option("--tau", tau, "Keep tokens with relevance >= tau");
            tau_opt->excludes(k_opt)->excludes(ratio_opt);
        }
    }

    ts::SelectionPolicy resolve() const {
        if (k) return ts::TopK{*k};
        if (ratio) return ts::Ratio{*ratio};
        if (tau) return ts::Threshold{*tau};
        ts::fail(ts::ErrorCode::InvalidParams, "exactly one of --k, --ratio, --tau is required");
    }
};

struct MetricFlags {
    std::string metric = "linf";
    double p = 3.0;
    std::string aggregation = "mean";

    void add_to(CLI::App* cmd) {
        cmd->add_option("--metric", metric, "l1 | l2 | lp | ip | linf")->capture_default_str();
        cmd->add_option("--p", p, "Exponent of the lp metric")->capture_default_str();
        cmd->add_option("--agg", aggregation, "Query aggregation: mean | best | sum")->capture_default_str();
    }
};

// ---------------------------------------------------------------- prune

struct PruneArgs {
    std::string visual_path;
    std::string text_path;
    std::string out_path;
    std::string report_path;
    std::string projection_path;
    std::string bias_path;
    std::string placement = "pre";
    std::string merge_text_path;
    std::string layout = "visual-then-text";
    std::size_t workers = 1;
    bool json_output = false;
    bool timing = false;
    PolicyFlags policy;
    MetricFlags metric;
};

int run_prune(const PruneArgs& args) {
    const ts::TokenMatrix visual = ts::load_matrix(args.visual_path);
    const ts::TokenMatrix text = ts::load_matrix(args.text_path);

    ts::SelectionSpec spec{args.policy.resolve(),
                           ts::Metric{ts::parse_metric_kind(args.metric.metric), args.metric.p},
                           ts::parse_aggregation(args.metric.aggregation)};
    ts::PipelineOptions options;
    options.layout = ts::parse_layout(args.layout);
    options.exec.workers = args.workers;

    std::optional<ts::TokenMatrix> merge_text;
    if (!args.merge_text_path.empty()) {
        merge_text = ts::load_matrix(args.merge_text_path);
        options.merge_text = merge_text->view();
    }
    if (!args.projection_path.empty()) {
        ts::ProjectionSpec projection;
        projection.weight = ts::load_matrix(args.projection_path);
        projection.placement = ts::parse_placement(args.placement);
        if (!args.bias_path.empty()) {
            const ts::TokenMatrix bias = ts::load_matrix(args.bias_path);
            if (bias.rows() != 1) {
                ts::fail(ts::ErrorCode::DimensionMismatch, "bias file must hold a single row");
            }
            projection.bias.assign(bias.values().begin(), bias.values().end());
        }
        options.projection = std::move(projection);
    } else if (!args.bias_path.empty()) {
        ts::fail(ts::ErrorCode::InvalidParams, "--bias requires --projection");
    }

    const auto start = std::chrono::steady_clock::now();
    const ts::PipelineResult result = ts::reduce_tokens(visual, text, spec, options);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    ts::save_matrix(result.sequence, args.out_path);

    ts::json report = ts::prune_result_to_json(result.selection);
    if (const auto* ratio = std::get_if<ts::Ratio>(&spec.policy)) {
        report["spec"]["policy"]["k"] = ts::ratio_to_k(visual.rows(), ratio->r);
    }
    report["layout"] = std::string(ts::to_string(options.layout));
    if (options.projection) {
        report["projection"] = {{"path", args.projection_path},
                                {"placement", std::string(ts::to_string(options.projection->placement))},
                                {"input_dim", options.projection->input_dim()},
                                {"output_dim", options.projection->output_dim()}};
    }
    report["inputs"] = {{"visual", args.visual_path}, {"text", args.text_path}};
    if (merge_text) {
        report["inputs"]["merge_text"] = args.merge_text_path;
    }
    report["outputs"] = {{"sequence", args.out_path},
                         {"rows", result.sequence.rows()},
                         {"cols", result.sequence.cols()}};
    if (args.timing) {
        report["wall_time_seconds"] = wall;
    }

    if (!args.report_path.empty()) {
        ts::write_text_file(args.report_path, report.dump(2) + "\n");
        report["outputs"]["report"] = args.report_path;
    }

    if (args.json_output) {
        std::cout << report.dump(2) << "\n";
        return 0;
    }
    const auto& sel = result.selection;
    std::cout << "visual tokens   " << sel.n_original << "\n"
              << "kept            " << sel.kept.size() << "\n"
              << "text tokens     " << (merge_text ? merge_text->rows() : text.rows()) << "\n"
              << "metric          " << ts::to_string(spec.metric.kind);
    if (spec.metric.kind == ts::MetricKind::Lp) {
        std::cout << " (p=" << spec.metric.p << ")";
    }
    std::cout << "\n"
              << "aggregation     " << ts::to_string(spec.aggregation) << "\n"
              << "layout          " << ts::to_string(options.layout) << "\n"
              << "sequence        " << result.sequence.rows() << " x " << result.sequence.cols() << " -> "
              << args.out_path << "\n";
    if (args.timing) {
        std::cout << "wall time       " << format("%.3f ms", wall * 1e3) << "\n";
    }
    std::cout << "kept indices   ";
    for (std::size_t index : sel.kept) {
        std::cout << ' ' << index;
    }
    std::cout << "\n";
    return 0;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
    std::string model = "llava-7b";
    std::string hardware = "a100";
    std::size_t visual_tokens = 576;
    std::size_t text_tokens = 40;
    std::string dtype = "fp16";
    bool compare = false;
    bool json_output = false;
};

struct AnalyzeRow {
    std::string label;
    std::size_t n_visual;
    std::size_t n_text;
    rf::DType dtype;
    rf::EfficiencyReport report;
};

void print_table(const std::vector<AnalyzeRow>& rows) {
    std::printf("%-24s %7s %11s %18s %18s %16s %14s\n", "Method", "Tokens", "FLOPs (TB)", "Total Memory (GB)",
                "Prefill Time (ms)", "Activation (GB)", "KV cache (MB)");
    for (const auto& row : rows) {
        const auto& r = row.report;
        std::printf("%-24s %7llu %11.2f %18.2f %18.2f %16.3f %14s\n", row.label.c_str(),
                    static_cast<unsigned long long>(r.n_tokens), r.flops_total / 1e12,
                    static_cast<double>(r.total_memory_bytes) / 1e9, r.prefill_seconds * 1e3,
                    static_cast<double>(r.activation_bytes) / 1e9,
                    format("%.1f MB", static_cast<double>(r.kv_cache_bytes) / 1e6).c_str());
    }
}

int run_analyze(const AnalyzeArgs& args) {
    const rf::ModelProfile model = rf::resolve_model_profile(args.model);
    const rf::HardwareProfile hw = rf::resolve_hardware_profile(args.hardware);

    std::vector<AnalyzeRow> rows;
    const auto add = [&](std::size_t n_visual, std::size_t n_text, rf::DType dtype) {
        const std::string label = model.name + " " + std::to_string(n_visual) + "+" + std::to_string(n_text) + " " +
                                  std::string(rf::to_string(dtype));
        rows.push_back({label, n_visual, n_text, dtype, rf::efficiency_report(model, hw, n_visual, n_text, dtype)});
    };
    if (args.compare) {
        const std::size_t kept = ts::ratio_to_k(576, 0.8);
        for (rf::DType dtype : {rf::DType::fp16, rf::DType::int8}) {
            add(576, 40, dtype);
            add(kept, 40, dtype);
        }
    } else {
        add(args.visual_tokens, args.text_tokens, rf::parse_dtype(args.dtype));
    }

    if (args.json_output) {
        ts::json doc = {{"model", ts::model_profile_to_json(model)}, {"hardware", ts::hardware_profile_to_json(hw)}};
        ts::json list = ts::json::array();
        for (const auto& row : rows) {
            list.push_back({{"n_visual", row.n_visual},
                            {"n_text", row.n_text},
                            {"dtype", std::string(rf::to_string(row.dtype))},
                            {"report", ts::efficiency_report_to_json(row.report)}});
        }
        doc["rows"] = std::move(list);
        std::cout << doc.dump(2) << "\n";
        return 0;
    }
    std::printf("model %s, hardware %s, batch size 1\n", model.name.c_str(), hw.name.c_str());
    print_table(rows);
    if (args.compare) {
        std::printf("prefill time ratio (%zu vs 576 visual, fp16): %.1f%%\n", rows[1].n_visual,
                    100.0 * rows[1].report.prefill_seconds / rows[0].report.prefill_seconds);
        std::printf("activation ratio   (%zu vs 576 visual, fp16): %.1f%%\n", rows[1].n_visual,
                    100.0 * static_cast<double>(rows[1].report.activation_bytes) /
                        static_cast<double>(rows[0].report.activation_bytes));
    }
    return 0;
}

// ---------------------------------------------------------------- ablate

struct AblateArgs {
    std::string visual_path;
    std::string text_path;
    std::string metrics = "l1,l2,lp,ip,linf";
    std::string truth_path;
    std::size_t workers = 1;
    bool json_output = false;
    PolicyFlags policy;
    MetricFlags metric;
};

int run_ablate(const AblateArgs& args) {
    const ts::TokenMatrix visual = ts::load_matrix(args.visual_path);
    const ts::TokenMatrix text = ts::load_matrix(args.text_path);
    const auto names = split_list(args.metrics);
    if (names.size() < 2) {
        ts::fail(ts::ErrorCode::InvalidParams, "--metrics needs at least two entries");
    }
    const ts::SelectionPolicy policy = args.policy.resolve();
    const ts::QueryAggregation aggregation = ts::parse_aggregation(args.metric.aggregation);

    std::optional<std::vector<std::size_t>> truth;
    if (!args.truth_path.empty()) {
        truth = ts::load_truth_indices(args.truth_path);
    }

    std::vector<ts::Metric> metrics;
    std::vector<ts::PruneResult> results;
    for (const auto& name : names) {
        const ts::Metric metric{ts::parse_metric_kind(name), args.metric.p};
        const auto scores = ts::score_tokens(visual, text, metric, aggregation, ts::ExecutionOptions{args.workers});
        metrics.push_back(metric);
        results.push_back(ts::select(scores, policy));
    }

    const std::size_t count = results.size();
    std::vector<std::vector<double>> overlap(count, std::vector<double>(count));
    for (std::size_t a = 0; a < count; ++a) {
        for (std::size_t b = 0; b < count; ++b) {
            overlap[a][b] = ts::eval::selection_overlap(results[a], results[b]);
        }
    }
    std::vector<double> recall;
    if (truth) {
        for (const auto& result : results) {
            recall.push_back(ts::eval::recall_at_k(result, *truth));
        }
    }

    const auto label = [](const ts::Metric& m) {
        std::string out(ts::to_string(m.kind));
        if (m.kind == ts::MetricKind::Lp) {
            out += "(p=" + format("%g", m.p) + ")";
        }
        return out;
    };

    if (args.json_output) {
        ts::json doc;
        doc["policy"] = ts::policy_to_json(policy);
        doc["aggregation"] = std::string(ts::to_string(aggregation));
        doc["n_original"] = visual.rows();
        ts::json per_metric = ts::json::array();
        for (std::size_t i = 0; i < count; ++i) {
            ts::json entry = {{"metric", ts::metric_to_json(metrics[i])}, {"kept", results[i].kept}};
            if (truth) {
                entry["recall"] = recall[i];
            }
            per_metric.push_back(std::move(entry));
        }
        doc["metrics"] = std::move(per_metric);
        doc["overlap"] = overlap;
        std::cout << doc.dump(2) << "\n";
        return 0;
    }

    std::printf("selection overlap (Jaccard), %zu visual tokens\n%-14s", visual.rows(), "");
    for (const auto& m : metrics) {
        std::printf(" %14s", label(m).c_str());
    }
    std::printf("\n");
    for (std::size_t a = 0; a < count; ++a) {
        std::printf("%-14s", label(metrics[a]).c_str());
        for (std::size_t b = 0; b < count; ++b) {
            std::printf(" %14.4f", overlap[a][b]);
        }
        std::printf("\n");
    }
    for (std::size_t i = 0; i < count; ++i) {
        std::printf("%-14s kept %zu", label(metrics[i]).c_str(), results[i].kept.size());
        if (truth) {
            std::printf("  recall %.4f", recall[i]);
        }
        std::printf("\n");
    }
    return 0;
}

// ---------------------------------------------------------------- fixture

struct FixtureArgs {
    ts::eval::FixtureParams params;
    std::string prefix;
    bool json_output = false;
};

int run_fixture(const FixtureArgs& args) {
    const ts::eval::Fixture fixture = ts::eval::gen_fixture(args.params);
    const std::string visual_path = args.prefix + ".visual.temb";
    const std::string text_path = args.prefix + ".text.temb";
    const std::string truth_path = args.prefix + ".truth.json";
    ts::save_matrix(fixture.visual, visual_path);
    ts::save_matrix(fixture.text, text_path);
    ts::write_text_file(truth_path, ts::fixture_truth_to_json(fixture).dump(2) + "\n");

    if (args.json_output) {
        const ts::json doc = {{"visual", visual_path}, {"text", text_path}, {"truth", truth_path}};
        std::cout << doc.dump(2) << "\n";
    } else {
        std::cout << visual_path << "\n" << text_path << "\n" << truth_path << "\n";
    }
    return 0;
}

void report_error(const ts::Error& error) {
    std::cerr << ts::error_to_json(error).dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tokensieve: text-guided visual token pruning and prefill cost analysis"};
    app.set_version_flag("--version", std::string(ts::kVersion));
    app.require_subcommand(1);

    PruneArgs prune;
    auto* prune_cmd = app.add_subcommand("prune", "Keep the visual tokens most relevant to the text prompt");
    prune_cmd->add_option("--visual", prune.visual_path, "Visual token embeddings (.temb)")->required();
    prune_cmd->add_option("--text", prune.text_path, "Text prompt embeddings used as the query (.temb)")->required();
    prune_cmd->add_option("--out", prune.out_path, "Output sequence (.temb)")->required();
    prune_cmd->add_option("--report", prune.report_path, "Also write the JSON report to this file");
    prune.policy.add_to(prune_cmd, true);
    prune.metric.add_to(prune_cmd);
    prune_cmd->add_option("--layout", prune.layout, "visual-then-text | text-then-visual")->capture_default_str();
    prune_cmd->add_option("--projection", prune.projection_path, "Projection weight d_in x d_out (.temb)");
    prune_cmd->add_option("--bias", prune.bias_path, "Projection bias, 1 x d_out (.temb)");
    prune_cmd->add_option("--placement", prune.placement, "Projection placement: pre | post")->capture_default_str();
    prune_cmd->add_option("--merge-text", prune.merge_text_path, "Text rows to place in the sequence (.temb)");
    prune_cmd->add_option("--workers", prune.workers, "Scoring threads, 0 = all cores")->capture_default_str();
    prune_cmd->add_flag("--json", prune.json_output, "Print the report as JSON");
    prune_cmd->add_flag("--timing", prune.timing, "Include wall time in the report");

    AnalyzeArgs analyze;
    auto* analyze_cmd = app.add_subcommand("analyze", "Roofline prefill cost of a (pruned) sequence");
    analyze_cmd->add_option("--model", analyze.model, "Model preset or profile file")->capture_default_str();
    analyze_cmd->add_option("--hardware", analyze.hardware, "Hardware preset or profile file")->capture_default_str();
    analyze_cmd->add_option("--visual-tokens", analyze.visual_tokens, "Kept visual tokens")->capture_default_str();
    analyze_cmd->add_option("--text-tokens", analyze.text_tokens, "Text tokens")->capture_default_str();
    analyze_cmd->add_option("--dtype", analyze.dtype, "fp16 | int8")->capture_default_str();
    analyze_cmd->add_flag("--compare", analyze.compare, "576 vs 116 visual tokens, fp16 and int8");
    analyze_cmd->add_flag("--json", analyze.json_output, "Print JSON");

    AblateArgs ablate;
    auto* ablate_cmd = app.add_subcommand("ablate", "Compare the kept sets of several retrieval strategies");
    ablate_cmd->add_option("--visual", ablate.visual_path, "Visual token embeddings (.temb)")->required();
    ablate_cmd->add_option("--text", ablate.text_path, "Text prompt embeddings (.temb)")->required();
    ablate.policy.add_to(ablate_cmd, false);
    ablate.metric.add_to(ablate_cmd);
    ablate_cmd->add_option("--metrics", ablate.metrics, "Comma-separated metrics")->capture_default_str();
    ablate_cmd->add_option("--truth", ablate.truth_path, "Fixture truth sidecar; adds recall per metric");
    ablate_cmd->add_option("--workers", ablate.workers, "Scoring threads, 0 = all cores")->capture_default_str();
    ablate_cmd->add_flag("--json", ablate.json_output, "Print JSON");

    FixtureArgs fixture;
    auto* fixture_cmd = app.add_subcommand("fixture", "Generate a planted-cluster fixture");
    fixture_cmd->add_option("--n-visual", fixture.params.n_visual)->capture_default_str();
    fixture_cmd->add_option("--n-text", fixture.params.n_text)->capture_default_str();
    fixture_cmd->add_option("--dim", fixture.params.dim)->capture_default_str();
    fixture_cmd->add_option("--n-relevant", fixture.params.n_relevant)->capture_default_str();
    fixture_cmd->add_option("--separation", fixture.params.separation, "In units of cluster std")
        ->capture_default_str();
    fixture_cmd->add_option("--seed", fixture.params.seed)->capture_default_str();
    fixture_cmd->add_option("--out", fixture.prefix, "Output prefix")->required();
    fixture_cmd->add_flag("--json", fixture.json_output, "Print JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error(ts::Error(ts::ErrorCode::InvalidParams, e.what()));
        return kExitValidation;
    }

    try {
        if (prune_cmd->parsed()) return run_prune(prune);
        if (analyze_cmd->parsed()) return run_analyze(analyze);
        if (ablate_cmd->parsed()) return run_ablate(ablate);
        if (fixture_cmd->parsed()) return run_fixture(fixture);
    } catch (const ts::Error& error) {
        report_error(error);
        return error.code() == ts::ErrorCode::IoFailure ? kExitIo : kExitValidation;
    } catch (const std::exception& error) {
        report_error(ts::Error(ts::ErrorCode::IoFailure, error.what()));
        return kExitIo;
    }
    return kExitValidation;
}
