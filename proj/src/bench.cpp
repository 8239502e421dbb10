#include "mvpbt/bench.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace mvpbt {

namespace fs = std::filesystem;

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

const char* engine_name(Engine e) noexcept { return e == Engine::MvPbt ? "mvpbt" : "baseline"; }

Engine parse_engine(const std::string& s) {
    if (s == "mvpbt") return Engine::MvPbt;
    if (s == "baseline") return Engine::Baseline;
    throw Error(Errc::InvalidSpec, "unknown engine " + s);
}

TableConfig engine_table(Engine e, const std::string& dir, const EngineConfig& cfg) {
    TableConfig tc;
    tc.dir = dir;
    tc.engine = cfg;
    tc.with_mvpbt = e == Engine::MvPbt;
    tc.with_baseline = e == Engine::Baseline;
    return tc;
}

void load_keys(Table& t, std::uint64_t n, std::size_t batch) {
    std::uint64_t k = 0;
    while (k < n) {
        auto tx = t.begin();
        for (std::size_t i = 0; i < batch && k < n; ++i, ++k) t.insert(tx, bench_key(k), "init");
        t.commit(tx);
    }
}

namespace {

std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t digest_hits(std::uint64_t op_index, const std::vector<SearchHit>& hits) {
    std::uint64_t d = mix(op_index);
    for (const auto& h : hits) {
        std::uint64_t x = std::hash<std::string>{}(h.key);
        d = mix(d ^ x ^ (std::uint64_t{h.rid.page_no} << 16) ^ h.rid.slot);
    }
    return d;
}

void write_row(std::ostream& out, Engine e, const std::string& workload, const std::string& bucket,
               std::uint64_t ops, double seconds, const MetricsSample& d) {
    out << engine_name(e) << ',' << csv_field(workload) << ',' << bucket << ',' << ops << ','
        << (seconds > 0 ? static_cast<double>(ops) / seconds : 0.0) << ',' << d.heap_fetches << ','
        << d.page_fetches() << ',' << d.index_bytes_written << ',' << d.records_examined << ','
        << d.partitions_searched << ',' << d.partitions_skipped << ',' << d.evictions << "\r\n";
}

}  // namespace

void write_run_header(std::ostream& out) {
    out << "engine,workload,bucket,ops,ops_per_sec,heap_fetches,page_fetches,index_bytes_written,"
           "records_examined,partitions_searched,partitions_skipped,evictions\r\n";
}

RunResult run_workload(Table& t, Engine e, const WorkloadSpec& spec, std::uint64_t seed, Metrics& metrics,
                       std::ostream* csv) {
    validate(spec);
    RunResult res;
    const MetricsSample start = metrics.sample();
    const auto t0 = std::chrono::steady_clock::now();
    std::mutex out_mu;
    std::atomic<std::uint64_t> digest{0};
    std::atomic<std::uint64_t> errors{0};
    std::atomic<std::uint64_t> done{0};
    std::atomic<std::uint64_t> next_key{spec.key_count};

    auto read_point = [&](const Snapshot& snap, const Key& key) {
        std::vector<SearchHit> hits;
        if (e == Engine::MvPbt) {
            if (auto h = t.get(snap, key)) hits.push_back(*h);
        } else {
            hits = t.baseline_scan(snap, KeyBounds::point(key));
        }
        return hits;
    };

    auto worker = [&](std::size_t index, std::uint64_t ops) {
        WorkloadGenerator gen(spec, seed + index);
        for (std::uint64_t i = 0; i < ops; ++i) {
            Op op = gen.next();
            std::uint64_t op_index = index * spec.ops + i;
            auto tx = t.begin();
            try {
                switch (op.type) {
                    case Op::Type::Read:
                        digest += digest_hits(op_index, read_point(tx.snapshot, bench_key(op.key)));
                        break;
                    case Op::Type::Scan: {
                        KeyBounds b = KeyBounds::range(bench_key(op.key), bench_key(op.key + op.scan_length - 1));
                        auto hits = e == Engine::MvPbt ? t.scan(tx.snapshot, b) : t.baseline_scan(tx.snapshot, b);
                        digest += digest_hits(op_index, hits);
                        break;
                    }
                    case Op::Type::Update:
                        if (op.key < t.tuple_count()) t.update(tx, op.key, "u" + std::to_string(op_index));
                        break;
                    case Op::Type::Insert: {
                        std::uint64_t k = spec.threads == 1 ? op.key : next_key.fetch_add(1);
                        t.insert(tx, bench_key(k), "i" + std::to_string(op_index));
                        break;
                    }
                }
                t.commit(tx);
            } catch (const Error&) {
                t.abort(tx);
                ++errors;
            }
            metrics.ops++;
            ++done;
        }
    };

    std::vector<std::thread> threads;
    std::uint64_t per = spec.ops / spec.threads;
    if (spec.threads == 1) {
        // The deterministic reference: run inline and sample every second.
        std::jthread sampler;
        std::atomic<bool> stop{false};
        if (csv != nullptr) {
            sampler = std::jthread([&] {
                MetricsSample prev = start;
                std::uint64_t prev_done = 0;
                std::uint64_t bucket = 0;
                auto due = std::chrono::steady_clock::now();
                while (true) {
                    due += std::chrono::seconds(1);
                    while (!stop.load() && std::chrono::steady_clock::now() < due) {
                        std::this_thread::sleep_for(std::chrono::milliseconds(5));
                    }
                    if (stop.load()) break;
                    MetricsSample now = metrics.sample();
                    std::uint64_t d = done.load();
                    std::lock_guard lock(out_mu);
                    write_row(*csv, e, spec.name, std::to_string(bucket++), d - prev_done, 1.0, now - prev);
                    prev = now;
                    prev_done = d;
                }
            });
        }
        worker(0, spec.ops);
        stop = true;
    } else {
        for (std::size_t i = 0; i < spec.threads; ++i) {
            std::uint64_t n = (i + 1 == spec.threads) ? spec.ops - per * i : per;
            threads.emplace_back(worker, i, n);
        }
        for (auto& th : threads) th.join();
    }

    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.totals = metrics.sample() - start;
    res.ops = done.load();
    res.errors = errors.load();
    res.result_digest = digest.load();
    if (csv != nullptr) {
        std::lock_guard lock(out_mu);
        write_row(*csv, e, spec.name, "total", res.ops, res.seconds, res.totals);
    }
    return res;
}

std::vector<ChainRow> chain_experiment(const ChainSpec& spec, const std::string& dir) {
    if (spec.length == 0) throw Error(Errc::InvalidSpec, "chain length must be at least 1");
    Metrics ma, mb;
    TableConfig ca = engine_table(Engine::MvPbt, (fs::path(dir) / "versioned").string(), spec.engine);
    ca.with_baseline = true;
    TableConfig cb = engine_table(Engine::MvPbt, (fs::path(dir) / "oblivious").string(), spec.engine);
    cb.index_only_visibility = false;
    cb.gc = false;
    Table a(ca, ma);
    Table b(cb, mb);

    const std::uint64_t bg = spec.background_keys;
    load_keys(a, bg + 1);
    load_keys(b, bg + 1);
    const TupleId hot = bg;
    const Key hot_key = bench_key(bg);
    const KeyBounds hot_range = KeyBounds::point(hot_key);
    std::mt19937_64 rng(42);

    auto reader_a = a.begin();
    auto reader_b = b.begin();
    std::vector<ChainRow> rows;

    auto measure = [&](const char* series, Metrics& m, std::size_t len, auto&& query) {
        MetricsSample before = m.sample();
        query();
        MetricsSample d = m.sample() - before;
        rows.push_back({series, len, d.heap_fetches, d.records_examined});
    };
    auto update_both = [&](TupleId id, const std::string& payload) {
        for (Table* t : {&a, &b}) {
            auto tx = t->begin();
            t->update(tx, id, payload);
            t->commit(tx);
        }
    };

    for (std::size_t len = 1; len <= spec.length; ++len) {
        measure("btree", ma, len, [&] { a.baseline_scan(reader_a.snapshot, hot_range); });
        measure("pbt", mb, len, [&] { b.scan(reader_b.snapshot, hot_range); });
        measure("mvpbt", ma, len, [&] { a.scan(reader_a.snapshot, hot_range); });
        if (len == spec.length) break;
        update_both(hot, "v" + std::to_string(len));
        if (bg > 0) update_both(rng() % bg, "bg" + std::to_string(len));
    }

    if (spec.pause_seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(spec.pause_seconds));
    a.commit(reader_a);
    b.commit(reader_b);

    // Phase 1 marks during a scan; phase 2 reclaims when the next update
    // lands on the same leaf.
    {
        auto tx = a.begin();
        a.scan(tx.snapshot, hot_range);
        a.commit(tx);
        tx = a.begin();
        a.update(tx, hot, "after");
        a.commit(tx);
        tx = a.begin();
        measure("mvpbt_gc", ma, spec.length, [&] { a.scan(tx.snapshot, hot_range); });
        a.commit(tx);
    }
    return rows;
}

void write_chain_csv(std::ostream& out, const std::vector<ChainRow>& rows) {
    out << "series,chain_length,heap_fetches,records_examined\r\n";
    for (const auto& r : rows) {
        out << r.series << ',' << r.chain_length << ',' << r.heap_fetches << ',' << r.records_examined << "\r\n";
    }
}

TraceStats analyze_trace(const std::vector<WriteEvent>& events, std::uint64_t long_run_bytes) {
    TraceStats s;
    std::map<std::string, std::uint64_t> extent_end;
    std::optional<std::uint64_t> last_page;

    std::uint64_t run_bytes = 0;
    const WriteEvent* prev = nullptr;
    auto close_run = [&] {
        if (run_bytes == 0) return;
        ++s.runs;
        if (run_bytes >= long_run_bytes) s.bytes_in_long_runs += run_bytes;
        run_bytes = 0;
    };

    for (const auto& ev : events) {
        ++s.writes;
        s.bytes += ev.length;
        if (ev.extent == "page") {
            if (last_page && ev.offset < *last_page) ++s.backward_page_writes;
            last_page = ev.offset;
        } else {
            auto [it, fresh] = extent_end.try_emplace(ev.extent, ev.offset);
            if (fresh) ++s.extents;
            if (it->second != ev.offset) ++s.extent_order_violations;
            it->second = ev.offset + ev.length;
        }
        bool continues = prev != nullptr && prev->extent == ev.extent && prev->offset + prev->length == ev.offset;
        if (!continues) close_run();
        run_bytes += ev.length;
        prev = &ev;
    }
    close_run();
    return s;
}

std::vector<WriteEvent> read_trace_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::InvalidSpec, "cannot open trace " + path);
    std::vector<WriteEvent> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        WriteEvent ev;
        if (!(ls >> ev.time_us >> ev.offset >> ev.length)) {
            throw Error(Errc::InvalidSpec, "malformed trace line: " + line);
        }
        ls >> std::ws;
        std::getline(ls, ev.extent);
        out.push_back(std::move(ev));
    }
    return out;
}

}  // namespace mvpbt
