// Command-line front end: ingest, serve, chat and eval.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "vta/config.hpp"
#include "vta/error.hpp"
#include "vta/eval.hpp"
#include "vta/index.hpp"
#include "vta/knowledge.hpp"
#include "vta/orchestrator.hpp"
#include "vta/service.hpp"
#include "vta/teach_prompt.hpp"

namespace {

vta::EngineConfig resolve_config(const std::string& flag) {
    std::string path = flag;
    if (path.empty()) {
        if (const char* env = std::getenv("VTA_CONFIG")) path = env;
    }
    if (path.empty()) vta::fail(vta::ErrorCode::InvalidArgument, "no config: pass --config or set VTA_CONFIG");
    return vta::load_config(path);
}

int run_ingest(const std::string& concepts, const std::string& edges, const std::string& faq,
               const std::string& examples) {
    const auto graph = vta::load_concept_graph(concepts, edges.empty() ? std::nullopt
                                                                        : std::optional<std::filesystem::path>(edges));
    auto snippets = vta::unify_concepts(graph);
    std::size_t faq_count = 0;
    if (!faq.empty()) {
        auto faq_snippets = vta::load_faq(faq);
        faq_count = faq_snippets.size();
        snippets.insert(snippets.end(), faq_snippets.begin(), faq_snippets.end());
    }
    std::size_t example_count = 0;
    if (!examples.empty()) example_count = vta::load_cot_examples(examples).size();
    const auto index = vta::SnippetIndex::build(std::move(snippets));

    std::cout << "concepts: " << graph.size() << "\n"
              << "edges: " << graph.edges().size() << "\n"
              << "faq: " << faq_count << "\n"
              << "examples: " << example_count << "\n"
              << "snippets: " << index.snippets().size() << "\n"
              << "terms: " << index.bm25().postings().size() << "\n"
              << "courses: " << graph.courses().size() << "\n";
    return 0;
}

int run_serve(const std::string& config_path, int port_flag, const std::string& host) {
    const auto config = resolve_config(config_path);
    auto engine = vta::Engine::from_config(config);
    const vta::Api api(*engine, config.service.max_body_bytes);
    vta::HttpServer server(api);

    // SIGINT/SIGTERM are consumed by a waiter thread so shutdown runs outside
    // signal context.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    const int port = server.bind(host, port_flag >= 0 ? port_flag : config.service.port);
    if (port < 0) vta::fail(vta::ErrorCode::Io, "cannot bind " + host);
    std::cout << "listening on " << host << ":" << port << " config " << vta::config_hash(config) << std::endl;

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });
    server.serve();
    if (waiter.joinable()) {
        // serve() only returns after stop(), which the waiter issued.
        waiter.join();
    }
    engine->flush();
    std::cout << "shut down" << std::endl;
    return 0;
}

int run_chat(const std::string& config_path, const std::string& course) {
    auto engine = vta::Engine::from_config(resolve_config(config_path));
    const auto session = engine->create_session(course);
    std::string line;
    while (std::getline(std::cin, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (line == ":quit") break;
        const auto res = engine->respond(session.id, line);
        std::cout << "Student: " << line << "\n"
                  << "Assistant [" << vta::to_string(res.route) << "]: " << res.text << "\n";
        if (res.error) std::cout << "  (error: " << *res.error << ")\n";
        std::cout.flush();
    }
    engine->flush();
    return 0;
}

int run_eval(const std::string& config_path, const std::string& dataset, const std::string& sweep_spec,
             const std::string& out_path, int workers_flag) {
    const auto config = resolve_config(config_path);
    auto engine = vta::Engine::from_config(config);
    auto data = vta::load_dataset(dataset);
    for (const auto& e : data.errors) std::cerr << "skipped " << e << "\n";
    std::optional<vta::SweepSpec> sweep;
    if (!sweep_spec.empty()) sweep = vta::parse_sweep(sweep_spec);
    const std::size_t workers = workers_flag > 0 ? static_cast<std::size_t>(workers_flag) : config.eval.workers;

    auto report = vta::run_eval_with_sweep(*engine, data.records, sweep, workers);
    report.dataset_errors = data.errors;

    std::ofstream out(out_path);
    if (!out) vta::fail(vta::ErrorCode::Io, "cannot write " + out_path);
    out << vta::report_to_json(report).dump(2) << "\n";
    if (!out) vta::fail(vta::ErrorCode::Io, "write failed: " + out_path);

    std::cout << "records: " << report.records.size() << "\n"
              << "rouge1: " << report.mean_r1 << "\n"
              << "rouge2: " << report.mean_r2 << "\n"
              << "rougeL: " << report.mean_rl << "\n";
    for (const auto& p : report.sweep) {
        std::cout << p.key << "=" << p.value << " rouge1 " << p.mean_r1 << " rouge2 " << p.mean_r2 << " rougeL "
                  << p.mean_rl << "\n";
    }
    std::cout << "report: " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Virtual teaching assistant engine"};
    app.require_subcommand(1);

    std::string concepts, edges, faq, examples;
    auto* ingest = app.add_subcommand("ingest", "Validate knowledge files, build the index and print counts");
    ingest->add_option("--concepts", concepts, "concepts JSONL")->required();
    ingest->add_option("--edges", edges, "prerequisite edges JSONL");
    ingest->add_option("--faq", faq, "FAQ JSONL");
    ingest->add_option("--examples", examples, "Chain of Teach examples JSONL");

    std::string config_path;
    int port = -1;
    std::string host = "127.0.0.1";
    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    serve->add_option("--config", config_path, "config JSON (default: $VTA_CONFIG)");
    serve->add_option("--port", port, "listen port (default: service.port)");
    serve->add_option("--host", host, "listen address");

    std::string course;
    auto* chat = app.add_subcommand("chat", "Interactive session on stdin");
    chat->add_option("--config", config_path, "config JSON (default: $VTA_CONFIG)");
    chat->add_option("--course", course, "course id")->required();

    std::string dataset, sweep, out_path = "eval_report.json";
    int workers = 0;
    auto* eval = app.add_subcommand("eval", "Score the engine on a dataset with ROUGE");
    eval->add_option("--config", config_path, "config JSON (default: $VTA_CONFIG)");
    eval->add_option("--dataset", dataset, "dataset JSONL")->required();
    eval->add_option("--sweep", sweep, "e.g. beta=0:5:0.5");
    eval->add_option("--out", out_path, "report path");
    eval->add_option("--workers", workers, "parallel records (default: eval.workers)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) return run_ingest(concepts, edges, faq, examples);
        if (*serve) return run_serve(config_path, port, host);
        if (*chat) return run_chat(config_path, course);
        if (*eval) return run_eval(config_path, dataset, sweep, out_path, workers);
    } catch (const vta::Error& e) {
        std::cerr << "error: " << vta::to_string(e.code()) << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
