#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "mvpbt/bench.hpp"

namespace fs = std::filesystem;
using namespace mvpbt;

namespace {

EngineConfig engine_config(const std::string& path) {
    return path.empty() ? EngineConfig{} : load_config(path);
}

std::vector<Engine> engines_for(const std::string& name) {
    if (name == "both") return {Engine::MvPbt, Engine::Baseline};
    return {parse_engine(name)};
}

std::string engine_dir(const std::string& root, Engine e) {
    return (fs::path(root) / engine_name(e)).string();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MV-PBT benchmark driver"};
    app.require_subcommand(1);

    std::string config_path;
    std::string dir = "bench_data";
    std::string engine = "both";
    std::uint64_t keys = 100000;

    auto* load = app.add_subcommand("load", "Bulk-load keys into fresh tables");
    load->add_option("--engine", engine)->check(CLI::IsMember({"mvpbt", "baseline", "both"}));
    load->add_option("--keys", keys);
    load->add_option("--config", config_path);
    load->add_option("--dir", dir);

    std::string workload = "a";
    std::uint64_t ops = 100000;
    std::uint64_t seed = 1;
    std::string trace_path;
    std::size_t threads = 1;
    std::string out_path;
    auto* run = app.add_subcommand("run", "Run a YCSB workload and print CSV metrics");
    run->add_option("--workload", workload)->check(CLI::IsMember({"a", "b", "d", "e"}));
    run->add_option("--ops", ops);
    run->add_option("--seed", seed);
    run->add_option("--engine", engine)->check(CLI::IsMember({"mvpbt", "baseline", "both"}));
    run->add_option("--trace", trace_path, "Write the physical write trace as TSV");
    run->add_option("--threads", threads)->check(CLI::PositiveNumber);
    run->add_option("--keys", keys);
    run->add_option("--config", config_path);
    run->add_option("--dir", dir);
    run->add_option("--out", out_path, "CSV output file (default stdout)");

    ChainSpec chain_spec;
    auto* chain = app.add_subcommand("chain", "Version chain experiment");
    chain->add_option("--length", chain_spec.length)->check(CLI::PositiveNumber);
    chain->add_option("--pause", chain_spec.pause_seconds);
    chain->add_option("--background", chain_spec.background_keys);
    chain->add_option("--config", config_path);
    chain->add_option("--dir", dir);

    std::string analyze_path;
    auto* trace = app.add_subcommand("trace", "Summarize a write trace");
    trace->add_option("--analyze", analyze_path)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*load) {
            EngineConfig cfg = engine_config(config_path);
            for (Engine e : engines_for(engine)) {
                std::string d = engine_dir(dir, e);
                fs::remove_all(d);
                Metrics metrics;
                Table t(engine_table(e, d, cfg), metrics);
                load_keys(t, keys);
                t.close();
                std::cerr << engine_name(e) << ": loaded " << keys << " keys into " << d << "\n";
            }
        } else if (*run) {
            EngineConfig cfg = engine_config(config_path);
            WorkloadSpec spec = ycsb_workload(workload, keys, ops);
            spec.threads = threads;
            std::ofstream file;
            std::ostream* out = &std::cout;
            if (!out_path.empty()) {
                file.open(out_path, std::ios::binary);
                out = &file;
            }
            write_run_header(*out);
            IoTrace io_trace;
            io_trace.enable(!trace_path.empty());
            for (Engine e : engines_for(engine)) {
                std::string d = engine_dir(dir, e);
                Metrics metrics;
                Table t(engine_table(e, d, cfg), metrics, &io_trace);
                if (t.tuple_count() < keys) {
                    // Nothing loaded yet: start from a fresh table.
                    t.close();
                    fs::remove_all(d);
                    Table fresh(engine_table(e, d, cfg), metrics, &io_trace);
                    load_keys(fresh, keys);
                    metrics.reset();
                    auto r = run_workload(fresh, e, spec, seed, metrics, out);
                    fresh.close();
                    std::cerr << engine_name(e) << ": digest " << std::hex << r.result_digest << std::dec
                              << " errors " << r.errors << "\n";
                    continue;
                }
                auto r = run_workload(t, e, spec, seed, metrics, out);
                t.close();
                std::cerr << engine_name(e) << ": digest " << std::hex << r.result_digest << std::dec
                          << " errors " << r.errors << "\n";
            }
            if (!trace_path.empty()) io_trace.write_tsv(trace_path);
        } else if (*chain) {
            chain_spec.engine = engine_config(config_path);
            fs::path d = fs::path(dir) / "chain";
            fs::remove_all(d);
            write_chain_csv(std::cout, chain_experiment(chain_spec, d.string()));
        } else if (*trace) {
            TraceStats s = analyze_trace(read_trace_tsv(analyze_path));
            std::cout << "writes," << s.writes << "\r\n"
                      << "extents," << s.extents << "\r\n"
                      << "extent_order_violations," << s.extent_order_violations << "\r\n"
                      << "backward_page_writes," << s.backward_page_writes << "\r\n"
                      << "bytes," << s.bytes << "\r\n"
                      << "runs," << s.runs << "\r\n"
                      << "long_run_fraction," << s.long_run_fraction() << "\r\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
