// speecheff: command-line pipeline driver and HTTP service.
//
//   speecheff synth    --out DIR [--seed N] [--config FILE]
//   speecheff validate --corpus DIR
//   speecheff factors  --corpus DIR [--out DIR] [--config FILE]
//   speecheff analyze  --corpus DIR [--out DIR] [--config FILE]
//   speecheff embed    --corpus DIR [--out DIR] [--config FILE]
//   speecheff layout   --corpus DIR [--out DIR] [--config FILE]
//   speecheff serve    --corpus DIR [--out DIR] [--config FILE] [--port N] [--static DIR]
//
// Exit status: 0 success, 1 validation or pipeline failure, 2 usage error.

#include <speecheff/service.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace fs = std::filesystem;
using namespace speecheff;

namespace {

struct Options {
    std::string corpus;
    std::string out = "speecheff-cache";
    std::string config;
    std::string static_dir;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::uint64_t seed = 7;
};

Config read_config(const Options& o) { return o.config.empty() ? Config{} : load_config(o.config); }

Workspace open_workspace(const Options& o) {
    if (o.corpus.empty()) throw CLI::RequiredError("--corpus");
    return Workspace(o.corpus, o.out, read_config(o));
}

int cmd_synth(const Options& o) {
    const Config config = read_config(o);
    const Corpus corpus = synth_corpus(config.synth, o.seed);
    save_corpus(corpus, o.out);
    std::printf("%zu speeches written to %s (seed %llu)\n", corpus.size(), o.out.c_str(),
                static_cast<unsigned long long>(o.seed));
    return 0;
}

int cmd_validate(const Options& o) {
    if (o.corpus.empty()) throw CLI::RequiredError("--corpus");
    const Corpus corpus = load_corpus(o.corpus);
    std::printf("%zu speeches OK\n", corpus.size());
    return 0;
}

int cmd_factors(const Options& o) {
    Workspace ws = open_workspace(o);
    const auto& table = ws.factors();
    std::printf("%zu speeches x %zu factors -> %s\n", table.rows(), table.cols(), ws.factors_path().c_str());
    return 0;
}

int cmd_analyze(const Options& o) {
    Workspace ws = open_workspace(o);
    const auto& report = ws.analysis();
    const auto significant = std::count_if(report.factors.begin(), report.factors.end(),
                                           [&](const FactorAnalysis& f) { return f.significant; });
    std::printf("%zu factors fitted, %zu skipped, %td significant at %g -> %s\n", report.factors.size(),
                report.skipped.size(), significant, report.significance, ws.analysis_path().c_str());
    return 0;
}

int cmd_embed(const Options& o) {
    Workspace ws = open_workspace(o);
    const auto& e = ws.embedding();
    std::printf("%zu points from %zu factors (KL %.4f) -> %s\n", e.speech_ids.size(), e.selected_factors.size(),
                e.kl_trace.empty() ? 0.0 : e.kl_trace.back(), ws.embedding_path().c_str());
    for (const auto& w : e.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    return 0;
}

int cmd_layout(const Options& o) {
    Workspace ws = open_workspace(o);
    const std::size_t n = ws.write_layouts();
    std::printf("%zu layouts -> %s\n", n, ws.layouts_dir().c_str());
    return 0;
}

int cmd_serve(const Options& o) {
    Workspace ws = open_workspace(o);
    std::optional<fs::path> root;
    if (!o.static_dir.empty()) root = o.static_dir;
    const Service service(ws.artifacts(), root);
    std::printf("serving %zu speeches on http://%s:%d\n", service.artifacts().corpus.size(), o.host.c_str(), o.port);
    std::fflush(stdout);
    run_server(service, o.host, o.port);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Speech effectiveness analysis pipeline"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--corpus", o.corpus, "Corpus directory");
        sub->add_option("--out", o.out, "Artifact cache root");
        sub->add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
    };

    std::vector<std::pair<CLI::App*, int (*)(const Options&)>> commands;
    auto* synth = app.add_subcommand("synth", "Write a synthetic corpus with planted effects to --out");
    synth->add_option("--out", o.out, "Output corpus directory")->required();
    synth->add_option("--seed", o.seed, "Random seed");
    synth->add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
    commands.emplace_back(synth, cmd_synth);

    auto* validate = app.add_subcommand("validate", "Check every speech file in the corpus");
    validate->add_option("--corpus", o.corpus, "Corpus directory")->required();
    commands.emplace_back(validate, cmd_validate);

    auto* factors = app.add_subcommand("factors", "Compute the factor table");
    add_common(factors);
    commands.emplace_back(factors, cmd_factors);
    auto* analyze = app.add_subcommand("analyze", "Fit ordinal models for every factor");
    add_common(analyze);
    commands.emplace_back(analyze, cmd_analyze);
    auto* embed = app.add_subcommand("embed", "Embed speeches by their significant factors");
    add_common(embed);
    commands.emplace_back(embed, cmd_embed);
    auto* layout = app.add_subcommand("layout", "Write spiral, script, type, strip and distribution layouts");
    add_common(layout);
    commands.emplace_back(layout, cmd_layout);
    auto* serve = app.add_subcommand("serve", "Serve artifacts over HTTP");
    add_common(serve);
    serve->add_option("--port", o.port, "TCP port")->check(CLI::Range(1, 65535));
    serve->add_option("--host", o.host, "Bind address");
    serve->add_option("--static", o.static_dir, "UI bundle directory served at /")->check(CLI::ExistingDirectory);
    commands.emplace_back(serve, cmd_serve);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 2;
    }

    try {
        for (const auto& [sub, fn] : commands) {
            if (sub->parsed()) return fn(o);
        }
    } catch (const CLI::RequiredError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "validation failed: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
