#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

namespace mvpbt {

/// Plain copy of the counters at one instant. Differences of two samples
/// give per-phase costs.
struct MetricsSample {
    std::uint64_t ops = 0;
    std::uint64_t heap_fetches = 0;
    std::uint64_t mem_page_fetches = 0;
    std::uint64_t persisted_page_fetches = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_misses = 0;
    std::uint64_t index_bytes_written = 0;
    std::uint64_t heap_bytes_written = 0;
    std::uint64_t records_examined = 0;
    std::uint64_t partitions_searched = 0;
    std::uint64_t partitions_skipped = 0;
    std::uint64_t evictions = 0;
    std::uint64_t gc_flagged = 0;
    std::uint64_t gc_reclaimed = 0;

    std::uint64_t page_fetches() const { return mem_page_fetches + persisted_page_fetches; }

    MetricsSample operator-(const MetricsSample& o) const;
};

/// Process-wide counters; every component takes a reference to one of these.
struct Metrics {
    std::atomic<std::uint64_t> ops{0};
    std::atomic<std::uint64_t> heap_fetches{0};
    std::atomic<std::uint64_t> mem_page_fetches{0};
    std::atomic<std::uint64_t> persisted_page_fetches{0};
    std::atomic<std::uint64_t> cache_hits{0};
    std::atomic<std::uint64_t> cache_misses{0};
    std::atomic<std::uint64_t> index_bytes_written{0};
    std::atomic<std::uint64_t> heap_bytes_written{0};
    std::atomic<std::uint64_t> records_examined{0};
    std::atomic<std::uint64_t> partitions_searched{0};
    std::atomic<std::uint64_t> partitions_skipped{0};
    std::atomic<std::uint64_t> evictions{0};
    std::atomic<std::uint64_t> gc_flagged{0};
    std::atomic<std::uint64_t> gc_reclaimed{0};

    MetricsSample sample() const;
    void reset();
};

/// One physical write as seen by the device.
struct WriteEvent {
    std::int64_t time_us = 0;
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
    // Extent the write belongs to ("evict:<file>:<partition>") or "page" for
    // in-place page writes.
    std::string extent;
};

/// Collects physical writes when enabled. Thread-safe.
class IoTrace {
public:
    void enable(bool on) { enabled_.store(on); }
    bool enabled() const { return enabled_.load(); }

    void record(std::uint64_t offset, std::uint64_t length, const std::string& extent);

    std::vector<WriteEvent> events() const;
    void clear();

    /// Tab-separated: time_us, offset, length, extent.
    void write_tsv(const std::string& path) const;

private:
    std::atomic<bool> enabled_{false};
    mutable std::mutex mu_;
    std::vector<WriteEvent> events_;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace mvpbt
