#include "history.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <random>
#include <sstream>

namespace mvpbt::testing {

namespace fs = std::filesystem;

namespace {
std::atomic<std::uint64_t> temp_counter{0};
}

TempDir::TempDir(const std::string& tag) {
    auto base = fs::temp_directory_path() / "mvpbt-tests";
    fs::create_directories(base);
    for (;;) {
        auto p = base / (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(temp_counter++));
        if (fs::create_directory(p)) {
            path_ = p.string();
            return;
        }
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string fixed_key(std::uint64_t k, std::size_t width) {
    std::string s = std::to_string(k);
    if (s.size() < width) s.insert(0, width - s.size(), '0');
    return s;
}

std::string describe(const std::vector<SearchHit>& hits) {
    std::ostringstream os;
    os << "{";
    for (std::size_t i = 0; i < hits.size(); ++i) {
        if (i) os << ", ";
        os << hits[i].key << "@" << hits[i].rid.page_no << ":" << hits[i].rid.slot;
    }
    os << "}";
    return os.str();
}

namespace {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen_); }
    bool coin(double p) { return std::uniform_real_distribution<double>(0, 1)(gen_) < p; }

private:
    std::mt19937_64 gen_;
};

bool expected_failure(const Error& e) {
    return e.code() == Errc::WriteConflict || e.code() == Errc::TupleDeleted ||
           e.code() == Errc::UniqueViolation;
}

// One random write by `tx`. Returns false when it was refused.
bool random_write(Table& t, const TransactionHandle& tx, Rng& rng, std::size_t key_space,
                  std::size_t& insert_budget) {
    try {
        std::size_t n = t.tuple_count();
        if (insert_budget > 0 && (n == 0 || rng.coin(0.35))) {
            t.insert(tx, fixed_key(rng.below(key_space)), "v" + std::to_string(rng.below(1000)));
            --insert_budget;
            return true;
        }
        if (n == 0) return false;
        TupleId id = rng.below(n);
        std::size_t op = rng.below(4);
        if (op <= 1) {
            t.update(tx, id, "u" + std::to_string(rng.below(1000)));
        } else if (op == 2) {
            t.update_key(tx, id, fixed_key(rng.below(key_space)), "k");
        } else {
            t.erase(tx, id);
        }
        return true;
    } catch (const Error& e) {
        if (!expected_failure(e)) throw;
        return false;
    }
}

}  // namespace

HistoryReport run_history(const HistoryParams& p) {
    TempDir dir("history");
    Metrics m;
    TableConfig cfg;
    cfg.dir = dir.path();
    cfg.engine.page_size = p.page_size;
    cfg.engine.buffer_capacity_bytes = p.page_size * p.buffer_pages;
    cfg.with_baseline = true;
    Table t(cfg, m);
    Rng rng(p.seed);
    HistoryReport rep;

    auto compare = [&](const Snapshot& s, const char* who) {
        ++rep.checks;
        std::uint64_t before = m.heap_fetches.load();
        auto idx = t.scan(s, KeyBounds::all());
        Key probe = fixed_key(rng.below(p.key_space));
        auto hit = t.get(s, probe);
        rep.heap_fetches_in_index_reads += m.heap_fetches.load() - before;
        auto base = t.baseline_scan(s, KeyBounds::all());
        auto oracle = t.oracle_scan(s, KeyBounds::all());

        bool point_ok;
        auto lo = std::lower_bound(oracle.begin(), oracle.end(), SearchHit{probe, RecordID{}});
        bool oracle_has = lo != oracle.end() && lo->key == probe;
        if (hit) {
            point_ok = std::binary_search(oracle.begin(), oracle.end(), *hit);
        } else {
            point_ok = !oracle_has;
        }
        if (idx != oracle || base != oracle || !point_ok) {
            ++rep.mismatches;
            if (rep.first_mismatch.empty()) {
                std::ostringstream os;
                os << "seed " << p.seed << " " << who << " ts " << s.own_ts.value << ": index "
                   << describe(idx) << " baseline " << describe(base) << " oracle " << describe(oracle)
                   << " point " << probe << (point_ok ? " ok" : " wrong");
                rep.first_mismatch = os.str();
            }
        }
    };

    std::vector<TransactionHandle> writers;
    std::vector<TransactionHandle> readers;
    std::size_t started = 0;
    std::size_t insert_budget = p.tuples;

    auto finish_writer = [&](std::size_t i) {
        if (rng.coin(p.abort_rate)) {
            t.abort(writers[i]);
        } else {
            t.commit(writers[i]);
        }
        writers.erase(writers.begin() + static_cast<std::ptrdiff_t>(i));
        ++rep.transactions;
    };
    auto finish_reader = [&](std::size_t i) {
        compare(readers[i].snapshot, "reader");
        t.commit(readers[i]);
        readers.erase(readers.begin() + static_cast<std::ptrdiff_t>(i));
        ++rep.transactions;
    };

    while (started < p.transactions || !writers.empty() || !readers.empty()) {
        std::size_t open = writers.size() + readers.size();
        if (started < p.transactions && open < p.max_concurrent && (open == 0 || rng.coin(0.3))) {
            auto tx = t.begin();
            ++started;
            if (rng.coin(0.25)) {
                readers.push_back(tx);
            } else {
                writers.push_back(tx);
            }
        } else if (started >= p.transactions) {
            std::size_t i = rng.below(open);
            if (i < writers.size()) {
                finish_writer(i);
            } else {
                finish_reader(i - writers.size());
            }
        } else if (!writers.empty() && rng.coin(0.8)) {
            std::size_t i = rng.below(writers.size());
            random_write(t, writers[i], rng, p.key_space, insert_budget);
            if (p.own_reads && rng.coin(0.05)) compare(writers[i].snapshot, "writer");
            if (rng.coin(0.25)) finish_writer(i);
        } else if (!readers.empty()) {
            std::size_t i = rng.below(readers.size());
            if (rng.coin(0.3)) {
                finish_reader(i);
            } else {
                compare(readers[i].snapshot, "reader");
            }
        } else if (!writers.empty()) {
            finish_writer(rng.below(writers.size()));
        }
        if (rng.coin(p.check_rate)) {
            auto tx = t.begin();
            compare(tx.snapshot, "fresh");
            t.commit(tx);
        }
    }
    auto tx = t.begin();
    compare(tx.snapshot, "final");
    t.commit(tx);
    rep.evictions = m.evictions.load();
    return rep;
}

GcScheduleReport run_gc_schedule(std::uint64_t seed) {
    TempDir dir("gc");
    Metrics m;
    TableConfig cfg;
    cfg.dir = dir.path();
    cfg.engine.page_size = 1024;
    cfg.engine.buffer_capacity_bytes = 1 << 24;  // evictions only when the schedule asks
    Table t(cfg, m);
    Rng rng(seed);
    GcScheduleReport rep;
    const std::size_t key_space = 12;
    std::size_t insert_budget = 30;

    std::vector<TransactionHandle> readers;
    std::vector<TransactionHandle> writers;

    auto scans_of = [&](std::vector<std::vector<SearchHit>>& out) {
        out.clear();
        for (const auto& r : readers) out.push_back(t.scan(r.snapshot, KeyBounds::all()));
    };

    for (std::size_t step = 0; step < 160; ++step) {
        std::size_t action = rng.below(10);
        if (action < 5) {
            // Short writer, sometimes left open.
            auto tx = t.begin();
            std::size_t ops = 1 + rng.below(3);
            for (std::size_t i = 0; i < ops; ++i) random_write(t, tx, rng, key_space, insert_budget);
            if (rng.coin(0.15)) {
                writers.push_back(tx);
            } else if (rng.coin(0.1)) {
                t.abort(tx);
            } else {
                t.commit(tx);
            }
        } else if (action == 5 && readers.size() < 3) {
            readers.push_back(t.begin());
        } else if (action == 6 && !readers.empty()) {
            std::size_t i = rng.below(readers.size());
            t.commit(readers[i]);
            readers.erase(readers.begin() + static_cast<std::ptrdiff_t>(i));
        } else if (action == 7 && !writers.empty()) {
            std::size_t i = rng.below(writers.size());
            if (rng.coin(0.3)) {
                t.abort(writers[i]);
            } else {
                t.commit(writers[i]);
            }
            writers.erase(writers.begin() + static_cast<std::ptrdiff_t>(i));
        } else {
            // A GC phase with every live reader checked before and after.
            std::vector<std::vector<SearchHit>> before, after;
            scans_of(before);
            std::size_t phase = rng.below(3);
            if (phase == 0) {
                auto tx = t.begin();
                t.scan(tx.snapshot, KeyBounds::all());
                t.commit(tx);
            } else if (phase == 1) {
                t.index()->reclaim_garbage();
            } else {
                t.index()->evict();
            }
            ++rep.phases;
            scans_of(after);
            for (std::size_t i = 0; i < readers.size(); ++i) {
                ++rep.comparisons;
                auto oracle = t.oracle_scan(readers[i].snapshot, KeyBounds::all());
                if (before[i] != after[i] || after[i] != oracle) {
                    ++rep.mismatches;
                    if (rep.first_mismatch.empty()) {
                        std::ostringstream os;
                        os << "seed " << seed << " phase " << phase + 1 << " reader ts "
                           << readers[i].ts.value << ": before " << describe(before[i]) << " after "
                           << describe(after[i]) << " oracle " << describe(oracle);
                        rep.first_mismatch = os.str();
                    }
                }
            }
        }
    }
    rep.flagged = m.gc_flagged.load();
    rep.reclaimed = m.gc_reclaimed.load();
    return rep;
}

}  // namespace mvpbt::testing
