// Command-line front end: run, sweep, plot, score, generate.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "ideatopics/ideatopics.hpp"
#include "ideatopics/provider_factory.hpp"

namespace it = ideatopics;

namespace {

constexpr int kConfigExit = 2;
constexpr int kIoExit = 3;
constexpr int kStageExit = 4;

struct SettingOptions {
    std::string config_file;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_file, "key = value settings file; flags override it");
        for (const auto& key : it::config_keys()) {
            std::string dashed = key;
            std::replace(dashed.begin(), dashed.end(), '_', '-');
            std::string names = "--" + dashed;
            if (dashed != key) names += ",--" + key;
            options[key] = cmd->add_option(names, values[key]);
        }
    }

    it::PipelineConfig resolve() const {
        it::KeyValues kv;
        if (!config_file.empty()) kv = it::load_config_file(config_file);
        for (const auto& [key, opt] : options)
            if (opt->count() > 0) kv[key] = values.at(key);
        return it::PipelineConfig::from_values(kv);
    }
};

std::string fmt(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

int cmd_run(const SettingOptions& s) {
    const auto cfg = s.resolve();
    cfg.validate();
    const auto provider = it::make_provider(cfg);
    const auto art = it::run_pipeline(cfg, *provider);
    const auto& an = art.analysis;
    std::cout << "ideas: " << art.records.size() << ", clusters: " << an.assignment.n_clusters
              << ", outliers: " << an.assignment.outlier_count() << ", topics: " << an.topics.topics.size() << "\n";
    for (const auto& t : an.topics.topics) {
        std::cout << "  topic " << t.cluster_id << " (" << t.member_count() << "):";
        for (const auto& w : t.words) std::cout << " " << w.word;
        std::cout << "\n";
    }
    std::cout << it::metric_name(art.coherence_report.metric) << " " << fmt(art.coherence_report.overall) << ", "
              << it::metric_name(art.other_coherence_report.metric) << " " << fmt(art.other_coherence_report.overall)
              << "\n";
    for (const auto& w : an.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "artifacts in " << art.dir.string() << (art.embeddings_from_cache ? " (embeddings cached)" : "") << "\n";
    return 0;
}

std::vector<std::size_t> parse_counts(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    for (std::string part; std::getline(ss, part, ',');) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(part, &used);
            if (used != part.size() || v < 1) throw std::invalid_argument(part);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::logic_error&) {
            throw it::ConfigError("counts: bad topic count '" + part + "'");
        }
    }
    return out;
}

int cmd_sweep(const SettingOptions& s, const std::string& counts, std::size_t runs) {
    const auto cfg = s.resolve();
    cfg.validate();
    const auto provider = it::make_provider(cfg);
    const auto rep = it::sweep_topics(cfg, *provider, parse_counts(counts), runs);
    std::cout << "topics  runs  TC(C_V)  TC(C_NPMI)  status\n";
    for (const auto& r : rep.rows) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%6zu  %4zu  ", r.count, r.executed);
        std::cout << buf << fmt(r.c_v) << "   " << fmt(r.c_npmi) << "      " << r.status << "\n";
    }
    std::cout << "mean    " << rep.executed << "    " << fmt(rep.c_v) << "   " << fmt(rep.c_npmi) << "\n";
    std::cout << "report in " << (cfg.out / "sweep.json").string() << "\n";
    return 0;
}

int cmd_plot(const std::string& stage_name, const std::string& coords, const std::string& assignments,
             const std::string& out) {
    const auto stage = it::detail::as_config_error("stage", [&] { return it::parse_scatter_stage(stage_name); });
    const auto xy = it::read_coordinates_csv(coords);
    std::vector<int> labels;
    if (stage != it::ScatterStage::unclustered) {
        if (assignments.empty()) throw it::ConfigError("--assignments is required for stage " + stage_name);
        labels = it::read_assignment_labels(assignments);
        if (labels.size() != xy.rows()) throw it::FormatError("assignments and coordinates differ in length");
    }
    it::emit_scatter_svg(xy, labels, stage, out);
    return 0;
}

int cmd_score(const std::string& words, const std::string& corpus, const std::string& format,
              const std::string& metric, std::size_t top_n, std::size_t window, const std::string& out) {
    it::CoherenceConfig cfg;
    cfg.metric = it::detail::as_config_error("metric", [&] { return it::parse_coherence_metric(metric); });
    cfg.top_n = top_n;
    if (window > 0) cfg.window_size = window;
    it::detail::as_config_error("coherence", [&] {
        cfg.validate();
        return 0;
    });
    const auto fmt_kind = it::detail::as_config_error("format", [&] { return it::parse_input_format(format); });
    const auto lists = it::load_word_lists(words);
    it::TokenizedCorpus reference;
    for (const auto& idea : it::tokenize_ideas(it::ingest(corpus, fmt_kind), it::default_preprocess_config()))
        reference.push_back(idea.tokens);
    const auto report = it::score_word_lists(lists, reference, cfg);
    const auto doc = it::coherence_json(report, cfg).dump(2) + "\n";
    if (out.empty()) std::cout << doc;
    else it::detail::write_file(out, doc);
    return 0;
}

int cmd_generate(std::size_t themes, std::size_t ideas, std::size_t noise, std::uint64_t seed, const std::string& out) {
    const auto pc = it::detail::as_config_error("generate", [&] { return it::generate_planted_corpus(themes, ideas, seed, noise); });
    std::string text;
    for (const auto& r : pc.records) {
        nlohmann::json row{{"text", r.text}};
        if (r.group) row["group"] = *r.group;
        text += row.dump() + "\n";
    }
    if (out.empty()) std::cout << text;
    else it::detail::write_file(out, text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Topic extraction for brainstorming transcripts"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run the full pipeline and write artifacts");
    SettingOptions run_opts;
    run_opts.attach(run);

    auto* sweep = app.add_subcommand("sweep", "coherence over a range of topic counts");
    SettingOptions sweep_opts;
    sweep_opts.attach(sweep);
    std::string counts = "2,4,6,8,10";
    std::size_t runs = 3;
    sweep->add_option("--counts", counts, "comma-separated topic counts")->capture_default_str();
    sweep->add_option("--runs", runs, "runs per count")->capture_default_str();

    auto* plot = app.add_subcommand("plot", "scatter figure from coordinates.csv");
    std::string stage = "clustered", coords, assignments, plot_out;
    plot->add_option("--stage", stage, "unclustered | clustered | no-outliers")->capture_default_str();
    plot->add_option("--coords", coords, "coordinates.csv")->required();
    plot->add_option("--assignments", assignments, "assignments.csv");
    plot->add_option("--out", plot_out, "output SVG")->required();

    auto* score = app.add_subcommand("score", "coherence of word lists against a corpus");
    std::string words, corpus, score_format = "jsonl", metric = "c_v", score_out;
    std::size_t top_n = 10, window = 0;
    score->add_option("--words", words, "topics.json or text file, one topic per line")->required();
    score->add_option("--corpus", corpus, "reference transcript")->required();
    score->add_option("--format", score_format)->capture_default_str();
    score->add_option("--metric", metric, "c_v | c_npmi")->capture_default_str();
    score->add_option("--top-n", top_n)->capture_default_str();
    score->add_option("--window-size", window, "0 = metric default");
    score->add_option("--out", score_out, "write JSON here instead of stdout");

    auto* gen = app.add_subcommand("generate", "write a synthetic planted-theme transcript (JSONL)");
    std::size_t themes = 4, ideas = 200, noise = 0;
    std::uint64_t seed = 42;
    std::string gen_out;
    gen->add_option("--themes", themes)->capture_default_str();
    gen->add_option("--ideas", ideas)->capture_default_str();
    gen->add_option("--noise", noise, "extra gibberish ideas")->capture_default_str();
    gen->add_option("--seed", seed)->capture_default_str();
    gen->add_option("--out", gen_out, "output file (stdout if absent)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigExit;
    }

    try {
        if (*run) return cmd_run(run_opts);
        if (*sweep) return cmd_sweep(sweep_opts, counts, runs);
        if (*plot) return cmd_plot(stage, coords, assignments, plot_out);
        if (*score) return cmd_score(words, corpus, score_format, metric, top_n, window, score_out);
        if (*gen) return cmd_generate(themes, ideas, noise, seed, gen_out);
    } catch (const it::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigExit;
    } catch (const it::IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIoExit;
    } catch (const it::ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kIoExit;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kStageExit;
    }
    return 0;
}
