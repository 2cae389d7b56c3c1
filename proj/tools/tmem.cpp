// tmem: operator CLI for the trajectory memory engine.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error, 3 gateway error.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "tmem/engine.hpp"
#include "tmem/errors.hpp"
#include "tmem/json_io.hpp"
#include "tmem/service.hpp"

namespace {

using tmem::json;

struct GlobalOptions {
    std::string store_path;
    std::string provider = "scripted";
    std::string fixtures_path;
    std::string endpoint;
    std::string model;
    std::string api_key_var = "TMEM_API_KEY";
    int embed_dim = 256;
    double rate_limit = 0.0;
    std::string fixed_clock;
    bool json_output = false;
};

std::string env_or(const char* name, const std::string& fallback) {
    const char* value = std::getenv(name);
    return value ? value : fallback;
}

std::shared_ptr<tmem::ChatProvider> make_provider(const GlobalOptions& opts) {
    if (opts.provider == "scripted") {
        if (opts.fixtures_path.empty()) {
            throw tmem::Error(tmem::ErrorCode::provider_unavailable,
                              "scripted provider needs --fixtures or TMEM_FIXTURES");
        }
        return std::make_shared<tmem::ScriptedProvider>(
            tmem::ScriptedProvider::load(opts.fixtures_path));
    }
    if (opts.provider == "live") {
        tmem::LiveProviderConfig cfg;
        cfg.base_url = opts.endpoint;
        cfg.model = opts.model;
        cfg.api_key = env_or(opts.api_key_var.c_str(), "");
        return std::make_shared<tmem::LiveProvider>(cfg);
    }
    throw tmem::Error(tmem::ErrorCode::invalid_field,
                      "provider must be 'live' or 'scripted', got '" + opts.provider + "'");
}

tmem::Engine make_engine(const GlobalOptions& opts) {
    if (opts.store_path.empty()) {
        throw tmem::Error(tmem::ErrorCode::io_error, "no store path; use --store or TMEM_STORE");
    }
    auto embedder = std::make_shared<tmem::HashingEmbedder>(opts.embed_dim);
    tmem::GatewayConfig gcfg;
    gcfg.rate_limit_rps = opts.rate_limit;
    auto gateway = std::make_shared<tmem::Gateway>(make_provider(opts), embedder, gcfg);
    std::shared_ptr<tmem::Clock> clock;
    if (opts.fixed_clock.empty()) {
        clock = std::make_shared<tmem::SystemClock>();
    } else {
        clock = std::make_shared<tmem::FixedClock>(opts.fixed_clock);
    }
    return tmem::Engine(tmem::Store::open(opts.store_path, opts.embed_dim), gateway, clock);
}

void print_table(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& rows) {
    size_t width = 0;
    for (const auto& [key, value] : rows) width = std::max(width, key.size());
    for (const auto& [key, value] : rows) {
        out << key << std::string(width - key.size() + 2, ' ') << value << "\n";
    }
}

int run_ingest(const GlobalOptions& opts, const std::vector<std::string>& files,
               const std::string& extract) {
    tmem::Engine engine = make_engine(opts);
    tmem::ExtractMode mode = tmem::extract_mode_from_string(extract);
    json results = json::array();
    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) {
            throw tmem::Error(tmem::ErrorCode::io_error, "cannot open " + file);
        }
        json doc = json::parse(in, nullptr, false);
        if (doc.is_discarded()) {
            throw tmem::Error(tmem::ErrorCode::invalid_field, file + " is not valid JSON");
        }
        tmem::PutResult put = engine.put_trajectory_doc(doc);
        json entry{{"file", file}, {"id", put.id}, {"revision", put.revision}};
        if (mode != tmem::ExtractMode::none) {
            entry["extraction"] = to_json(engine.extract_tips(put.id, mode));
        }
        results.push_back(entry);
    }
    if (opts.json_output) {
        std::cout << json{{"ingested", results}}.dump() << "\n";
    } else {
        for (const auto& entry : results) {
            std::string line = entry["id"].get<std::string>();
            if (entry.contains("extraction")) {
                const json& x = entry["extraction"];
                line += "  task_tips=" + std::to_string(x["task_tips"].get<int>()) +
                        " subtask_tips=" + std::to_string(x["subtask_tips"].get<int>());
            }
            std::cout << line << "\n";
        }
    }
    return 0;
}

int run_consolidate(const GlobalOptions& opts, double threshold) {
    tmem::Engine engine = make_engine(opts);
    tmem::ConsolidationReport report = engine.consolidate(threshold);
    if (opts.json_output) {
        std::cout << to_json(report).dump() << "\n";
    } else {
        print_table(std::cout,
                    {{"tips before", std::to_string(report.tips_before)},
                     {"tips after", std::to_string(report.tips_after)},
                     {"generalized", std::to_string(report.generalized)},
                     {"clusters formed", std::to_string(report.clusters_formed)},
                     {"clusters updated", std::to_string(report.clusters_updated)},
                     {"conflicts resolved", std::to_string(report.conflicts_resolved)},
                     {"failures", std::to_string(report.failures.size())},
                     {"revision", std::to_string(report.revision_after)}});
        for (const auto& f : report.failures) std::cout << "failure: " << f << "\n";
    }
    return 0;
}

int run_retrieve(const GlobalOptions& opts, const std::string& task, const std::string& strategy,
                 double tau, int k, bool render) {
    tmem::Engine engine = make_engine(opts);
    tmem::RetrievalConfig cfg;
    cfg.strategy = tmem::retrieval_strategy_from_string(strategy);
    cfg.tau = tau;
    cfg.k = k;
    tmem::RetrievalResult result = engine.retrieve(task, cfg);

    if (render) {
        // Guidelines text is the machine-pipeable output; tables go to stderr.
        std::cout << tmem::render_guidelines(result);
        if (!opts.json_output) {
            std::cerr << result.tips.size() << " tip(s), strategy " << result.strategy_used
                      << "\n";
        }
        return 0;
    }
    if (opts.json_output) {
        std::cout << json{{"result", to_json(result)},
                          {"rendered", tmem::render_guidelines(result)}}
                         .dump()
                  << "\n";
    } else {
        for (const auto& scored : result.tips) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.4f", scored.score);
            std::cout << buf << "  [" << to_string(scored.tip.priority) << "/"
                      << to_string(scored.tip.category) << "] " << scored.tip.id << "  "
                      << scored.tip.content << "\n";
        }
        if (result.tips.empty()) std::cout << "(no tips above tau)\n";
    }
    return 0;
}

int run_stats(const GlobalOptions& opts) {
    tmem::Engine engine = make_engine(opts);
    json stats = engine.stats();
    if (opts.json_output) {
        std::cout << stats.dump() << "\n";
    } else {
        print_table(std::cout,
                    {{"revision", stats["revision"].dump()},
                     {"trajectories", stats["trajectories"].dump()},
                     {"tips", stats["tips"].dump()},
                     {"clusters", stats["clusters"].dump()},
                     {"generic tips", stats["generic_tips"].dump()},
                     {"by category", stats["by_category"].dump()},
                     {"by priority", stats["by_priority"].dump()},
                     {"by granularity", stats["by_granularity"].dump()}});
    }
    return 0;
}

int run_show(const GlobalOptions& opts, const std::string& tip_id) {
    tmem::Engine engine = make_engine(opts);
    json tip = engine.tip_as_json(tip_id);
    if (opts.json_output) {
        std::cout << tip.dump() << "\n";
    } else {
        json compact = tip;
        compact.erase("embedding");
        compact.erase("index_embedding");
        std::cout << compact.dump(2) << "\n";
    }
    return 0;
}

int run_export(const GlobalOptions& opts, const std::string& format) {
    if (format != "jsonl") {
        throw tmem::Error(tmem::ErrorCode::invalid_field, "unsupported export format: " + format);
    }
    tmem::Engine engine = make_engine(opts);
    engine.export_tips_jsonl(std::cout);
    return 0;
}

int run_serve(const GlobalOptions& opts, const std::string& bind, const std::string& log_file) {
    tmem::Engine engine = make_engine(opts);
    tmem::ServiceConfig cfg;
    auto colon = bind.rfind(':');
    if (colon == std::string::npos) {
        throw tmem::Error(tmem::ErrorCode::invalid_field, "--bind must be host:port");
    }
    cfg.bind_host = bind.substr(0, colon);
    cfg.port = std::stoi(bind.substr(colon + 1));
    cfg.log_path = log_file;
    tmem::Service service(engine, cfg);
    int port = service.start();
    std::cerr << "tmem service listening on " << cfg.bind_host << ":" << port << "\n";
    for (;;) std::this_thread::sleep_for(std::chrono::seconds(60));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"trajectory memory engine"};
    app.require_subcommand(1);

    GlobalOptions opts;
    opts.store_path = env_or("TMEM_STORE", "");
    opts.provider = env_or("TMEM_PROVIDER", "scripted");
    opts.fixtures_path = env_or("TMEM_FIXTURES", "");
    opts.endpoint = env_or("TMEM_ENDPOINT", "");
    opts.model = env_or("TMEM_MODEL", "");
    opts.api_key_var = env_or("TMEM_API_KEY_VAR", "TMEM_API_KEY");

    app.add_option("--store", opts.store_path, "store directory (env TMEM_STORE)");
    app.add_option("--provider", opts.provider, "live|scripted (env TMEM_PROVIDER)");
    app.add_option("--fixtures", opts.fixtures_path,
                   "scripted provider fixture file (env TMEM_FIXTURES)");
    app.add_option("--endpoint", opts.endpoint, "live chat-completions base URL");
    app.add_option("--model", opts.model, "live model id");
    app.add_option("--api-key-var", opts.api_key_var, "env var holding the API key");
    app.add_option("--embed-dim", opts.embed_dim, "embedding dimension");
    app.add_option("--rate-limit", opts.rate_limit, "gateway requests/second (0 = unlimited)");
    app.add_option("--fixed-clock", opts.fixed_clock, "RFC-3339 instant for reproducible runs");
    app.add_flag("--json", opts.json_output, "machine-readable JSON output");

    auto* ingest = app.add_subcommand("ingest", "validate and store trajectory files");
    std::vector<std::string> ingest_files;
    std::string extract_mode = "none";
    ingest->add_option("files", ingest_files, "trajectory JSON files")->required();
    ingest->add_option("--extract", extract_mode, "task|subtask|both");

    auto* consolidate = app.add_subcommand("consolidate", "generalize, cluster and merge tips");
    double threshold = 0.85;
    consolidate->add_option("--threshold", threshold, "clustering similarity threshold");

    auto* retrieve = app.add_subcommand("retrieve", "retrieve tips for a task description");
    std::string task, strategy = "cosine";
    double tau = 0.6;
    int k = 5;
    bool render = false;
    retrieve->add_option("--task", task, "task description")->required();
    retrieve->add_option("--strategy", strategy, "cosine|llm");
    retrieve->add_option("--tau", tau, "similarity threshold");
    retrieve->add_option("--k", k, "maximum tips");
    retrieve->add_flag("--render", render, "print the guidelines text to stdout");

    auto* stats = app.add_subcommand("stats", "store statistics");

    auto* show = app.add_subcommand("show", "show one tip");
    std::string tip_id;
    show->add_option("tip-id", tip_id, "tip id")->required();

    auto* export_cmd = app.add_subcommand("export", "dump tips");
    std::string format = "jsonl";
    export_cmd->add_option("--format", format, "jsonl");

    auto* serve = app.add_subcommand("serve", "run the HTTP service");
    std::string bind = "127.0.0.1:8080";
    std::string log_file;
    serve->add_option("--bind", bind, "host:port");
    serve->add_option("--log-file", log_file, "request log path (JSON lines)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(ingest)) return run_ingest(opts, ingest_files, extract_mode);
        if (app.got_subcommand(consolidate)) return run_consolidate(opts, threshold);
        if (app.got_subcommand(retrieve)) {
            return run_retrieve(opts, task, strategy, tau, k, render);
        }
        if (app.got_subcommand(stats)) return run_stats(opts);
        if (app.got_subcommand(show)) return run_show(opts, tip_id);
        if (app.got_subcommand(export_cmd)) return run_export(opts, format);
        if (app.got_subcommand(serve)) return run_serve(opts, bind, log_file);
    } catch (const tmem::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (tmem::is_io_error(e.code())) return 2;
        if (tmem::is_gateway_error(e.code())) return 3;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
