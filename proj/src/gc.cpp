#include "mvpbt/gc.hpp"

#include <unordered_set>

namespace mvpbt {

bool phase1_should_flag(const IndexRecord& r, const VisibilityResult& v, Timestamp cutoff,
                        const TransactionManager& txns) {
    switch (v.verdict) {
        case Verdict::Suppressed: return v.anti_ts < cutoff && r.ts < cutoff;
        case Verdict::NotVisibleTs: return txns.state(r.ts) == TxState::Aborted;
        default: return false;
    }
}

std::size_t reclaim_victims(std::vector<IndexRecord>& records, const std::vector<char>& victim,
                            Timestamp cutoff, const TransactionManager& txns, bool drop_dead_anti) {
    const std::size_t n = records.size();
    std::vector<char> remove(n, 0);
    std::vector<TxState> state(n);
    for (std::size_t i = 0; i < n; ++i) state[i] = txns.state(records[i].ts);
    auto settled = [&](std::size_t i) {
        return state[i] == TxState::Committed && records[i].ts < cutoff;
    };

    for (std::size_t i = 0; i < n; ++i) {
        if (victim[i] && (state[i] == TxState::Aborted || !records[i].rid_anti)) remove[i] = 1;
    }

    std::size_t begin = 0;
    while (begin < n) {
        std::size_t end = begin + 1;
        while (end < n && records[end].key == records[begin].key &&
               records[end].partition_no == records[begin].partition_no) {
            ++end;
        }

        std::unordered_map<RecordID, std::size_t, RecordIDHash> victim_by_matter;
        for (std::size_t i = begin; i < end; ++i) {
            if (victim[i] && !remove[i] && records[i].rid_matter) {
                victim_by_matter.emplace(*records[i].rid_matter, i);
            }
        }
        auto walk = [&](std::size_t k) {
            RecordID target = *records[k].rid_anti;
            for (;;) {
                auto it = victim_by_matter.find(target);
                if (it == victim_by_matter.end() || it->second == k || remove[it->second]) break;
                remove[it->second] = 1;
                target = *records[it->second].rid_anti;
            }
            records[k].rid_anti = target;
        };
        for (std::size_t i = begin; i < end; ++i) {
            if (!victim[i] && records[i].rid_anti && settled(i)) walk(i);
        }
        for (std::size_t i = begin; i < end; ++i) {
            if (victim[i] && !remove[i] && settled(i)) walk(i);
        }

        if (drop_dead_anti) {
            std::unordered_set<RecordID, RecordIDHash> removed_matter;
            for (std::size_t i = begin; i < end; ++i) {
                if (remove[i] && records[i].rid_matter) removed_matter.insert(*records[i].rid_matter);
            }
            for (std::size_t i = begin; i < end; ++i) {
                const auto& r = records[i];
                if (!remove[i] && !r.has_matter() && settled(i) && removed_matter.contains(*r.rid_anti)) {
                    remove[i] = 1;
                }
            }
        }
        begin = end;
    }

    std::size_t removed = 0;
    std::size_t out = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (remove[i]) {
            ++removed;
            continue;
        }
        if (out != i) records[out] = std::move(records[i]);
        ++out;
    }
    records.resize(out);
    return removed;
}

std::size_t gc_reclaim_leaf(MemLeaf& leaf, Timestamp cutoff, const TransactionManager& txns) {
    std::vector<char> victim(leaf.records.size());
    for (std::size_t i = 0; i < leaf.records.size(); ++i) victim[i] = leaf.records[i].gc_flagged();
    std::size_t removed = reclaim_victims(leaf.records, victim, cutoff, txns, false);
    leaf.recount();
    return removed;
}

ChainIndex::ChainIndex(std::span<const IndexRecord> records) {
    auto node = [&](RecordID rid) {
        auto [it, inserted] = node_of_.try_emplace(rid, parent_.size());
        if (inserted) parent_.push_back(parent_.size());
        return it->second;
    };
    for (const auto& r : records) {
        std::size_t a = r.rid_matter ? node(*r.rid_matter) : node(*r.rid_anti);
        if (r.rid_matter && r.rid_anti) {
            std::size_t ra = find(a);
            std::size_t rb = find(node(*r.rid_anti));
            if (ra != rb) parent_[ra] = rb;
        }
    }
    chain_id_.assign(parent_.size(), npos);
    for (std::size_t i = 0; i < parent_.size(); ++i) {
        std::size_t root = find(i);
        if (chain_id_[root] == npos) {
            chain_id_[root] = chain_records_.size();
            chain_records_.push_back(0);
        }
    }
    for (const auto& r : records) {
        ++chain_records_[chain_of(r.rid_matter ? *r.rid_matter : *r.rid_anti)];
    }
}

std::size_t ChainIndex::find(std::size_t x) const {
    while (parent_[x] != x) {
        parent_[x] = parent_[parent_[x]];
        x = parent_[x];
    }
    return x;
}

std::size_t ChainIndex::chain_of(RecordID rid) const {
    auto it = node_of_.find(rid);
    if (it == node_of_.end()) return npos;
    return chain_id_[find(it->second)];
}

Phase3Result gc_phase3(std::vector<IndexRecord> records, Timestamp cutoff,
                       const TransactionManager& txns) {
    Phase3Result result;
    result.chains = ChainIndex(records).chain_count();

    std::vector<char> victim(records.size(), 0);
    AntiMap settled_anti;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const IndexRecord& r = records[i];
        TxState st = txns.state(r.ts);
        if (st == TxState::Aborted) {
            victim[i] = 1;
            continue;
        }
        if (st != TxState::Committed || r.ts >= cutoff) continue;
        if (r.gc_flagged()) {
            victim[i] = 1;
        } else if (r.rid_matter) {
            auto anti_ts = settled_anti.get(*r.rid_matter);
            if (anti_ts && *anti_ts >= r.ts) victim[i] = 1;
        }
        if (r.rid_anti) settled_anti.put(*r.rid_anti, r.ts);
    }

    result.removed = reclaim_victims(records, victim, cutoff, txns, true);
    result.survivors = std::move(records);
    return result;
}

}  // namespace mvpbt
