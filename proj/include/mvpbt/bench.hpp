#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "mvpbt/config.hpp"
#include "mvpbt/metrics.hpp"
#include "mvpbt/table.hpp"
#include "mvpbt/workload.hpp"

namespace mvpbt {

/// RFC 4180 field quoting.
std::string csv_field(const std::string& s);

enum class Engine { MvPbt, Baseline };
const char* engine_name(Engine e) noexcept;
Engine parse_engine(const std::string& s);

/// Table layout for one engine.
TableConfig engine_table(Engine e, const std::string& dir, const EngineConfig& cfg);

/// Inserts keys [0, n) in one transaction per `batch` keys. Tuple id == key.
void load_keys(Table& t, std::uint64_t n, std::size_t batch = 1000);

struct RunResult {
    MetricsSample totals;
    std::uint64_t ops = 0;
    std::uint64_t errors = 0;
    // Order-independent digest of every read and scan result.
    std::uint64_t result_digest = 0;
    double seconds = 0;
};

/// Columns: engine, workload, bucket, ops, ops_per_sec, heap_fetches,
/// page_fetches, index_bytes_written, records_examined,
/// partitions_searched, partitions_skipped, evictions. One row per second
/// plus a final "total" row.
void write_run_header(std::ostream& out);

/// One transaction per operation; scans and reads are read-only.
RunResult run_workload(Table& t, Engine e, const WorkloadSpec& spec, std::uint64_t seed,
                       Metrics& metrics, std::ostream* csv);

struct ChainSpec {
    std::size_t length = 50;
    double pause_seconds = 0;
    std::uint64_t background_keys = 1000;
    EngineConfig engine;
};

struct ChainRow {
    std::string series;   // btree, pbt, mvpbt, mvpbt_gc
    std::size_t chain_length = 0;
    std::uint64_t heap_fetches = 0;
    std::uint64_t records_examined = 0;
};

/// A long reader pins the first version of a hot tuple while committed
/// updates grow its chain; at every length the reader queries the hot key
/// through each engine. After the reader commits, one scan and one update
/// let GC clean up and the cost is measured again.
std::vector<ChainRow> chain_experiment(const ChainSpec& spec, const std::string& dir);
void write_chain_csv(std::ostream& out, const std::vector<ChainRow>& rows);

struct TraceStats {
    std::size_t writes = 0;
    std::size_t extents = 0;
    // Writes inside an eviction extent that do not start where the previous
    // write of that extent ended.
    std::size_t extent_order_violations = 0;
    // In-place page writes landing below the previous page write.
    std::size_t backward_page_writes = 0;
    std::uint64_t bytes = 0;
    std::uint64_t bytes_in_long_runs = 0;
    std::size_t runs = 0;

    double long_run_fraction() const {
        return bytes == 0 ? 1.0 : static_cast<double>(bytes_in_long_runs) / static_cast<double>(bytes);
    }
};

/// A run is a maximal sequence of consecutive writes of one extent, each
/// starting where the previous ended.
TraceStats analyze_trace(const std::vector<WriteEvent>& events, std::uint64_t long_run_bytes = 64 * 1024);
std::vector<WriteEvent> read_trace_tsv(const std::string& path);

}  // namespace mvpbt
