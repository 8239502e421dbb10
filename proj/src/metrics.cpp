#include "mvpbt/metrics.hpp"

#include <fstream>

#include "mvpbt/common.hpp"

namespace mvpbt {

MetricsSample MetricsSample::operator-(const MetricsSample& o) const {
    MetricsSample d;
    d.ops = ops - o.ops;
    d.heap_fetches = heap_fetches - o.heap_fetches;
    d.mem_page_fetches = mem_page_fetches - o.mem_page_fetches;
    d.persisted_page_fetches = persisted_page_fetches - o.persisted_page_fetches;
    d.cache_hits = cache_hits - o.cache_hits;
    d.cache_misses = cache_misses - o.cache_misses;
    d.index_bytes_written = index_bytes_written - o.index_bytes_written;
    d.heap_bytes_written = heap_bytes_written - o.heap_bytes_written;
    d.records_examined = records_examined - o.records_examined;
    d.partitions_searched = partitions_searched - o.partitions_searched;
    d.partitions_skipped = partitions_skipped - o.partitions_skipped;
    d.evictions = evictions - o.evictions;
    d.gc_flagged = gc_flagged - o.gc_flagged;
    d.gc_reclaimed = gc_reclaimed - o.gc_reclaimed;
    return d;
}

MetricsSample Metrics::sample() const {
    MetricsSample s;
    s.ops = ops.load();
    s.heap_fetches = heap_fetches.load();
    s.mem_page_fetches = mem_page_fetches.load();
    s.persisted_page_fetches = persisted_page_fetches.load();
    s.cache_hits = cache_hits.load();
    s.cache_misses = cache_misses.load();
    s.index_bytes_written = index_bytes_written.load();
    s.heap_bytes_written = heap_bytes_written.load();
    s.records_examined = records_examined.load();
    s.partitions_searched = partitions_searched.load();
    s.partitions_skipped = partitions_skipped.load();
    s.evictions = evictions.load();
    s.gc_flagged = gc_flagged.load();
    s.gc_reclaimed = gc_reclaimed.load();
    return s;
}

void Metrics::reset() {
    for (auto* c : {&ops, &heap_fetches, &mem_page_fetches, &persisted_page_fetches, &cache_hits,
                    &cache_misses, &index_bytes_written, &heap_bytes_written, &records_examined,
                    &partitions_searched, &partitions_skipped, &evictions, &gc_flagged,
                    &gc_reclaimed}) {
        c->store(0);
    }
}

void IoTrace::record(std::uint64_t offset, std::uint64_t length, const std::string& extent) {
    if (!enabled()) return;
    auto now = std::chrono::steady_clock::now();
    std::lock_guard lock(mu_);
    events_.push_back(WriteEvent{
        std::chrono::duration_cast<std::chrono::microseconds>(now - start_).count(), offset,
        length, extent});
}

std::vector<WriteEvent> IoTrace::events() const {
    std::lock_guard lock(mu_);
    return events_;
}

void IoTrace::clear() {
    std::lock_guard lock(mu_);
    events_.clear();
}

void IoTrace::write_tsv(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot open trace file " + path);
    std::lock_guard lock(mu_);
    for (const auto& e : events_) {
        out << e.time_us << '\t' << e.offset << '\t' << e.length << '\t' << e.extent << '\n';
    }
}

}  // namespace mvpbt
