#pragma once

#include <span>
#include <unordered_map>
#include <vector>

#include "mvpbt/index_record.hpp"
#include "mvpbt/mem_partition.hpp"
#include "mvpbt/txn.hpp"
#include "mvpbt/visibility.hpp"

namespace mvpbt {

/// Phase 1: decides whether a record just checked during a scan of the
/// mutable partition can be flagged. Flags suppressed records whose
/// invalidator and own writer both lie below the cutoff, and records of
/// aborted writers.
bool phase1_should_flag(const IndexRecord& r, const VisibilityResult& v, Timestamp cutoff,
                        const TransactionManager& txns);

/// Removes `victim` records from an ordered run and splices anti-matter
/// links over the removed ones.
///
/// A victim is removed when its writer aborted, when it carries no
/// anti-matter, or when a surviving record of the same key (committed below
/// the cutoff) reaches it by following anti -> matter links through other
/// victims. The surviving record then takes over the anti link of the last
/// removed victim. Victims nobody reaches stay in place.
///
/// With `drop_dead_anti`, anti and tombstone records committed below the
/// cutoff whose target version's matter record was removed are dropped too.
std::size_t reclaim_victims(std::vector<IndexRecord>& records, const std::vector<char>& victim,
                            Timestamp cutoff, const TransactionManager& txns, bool drop_dead_anti);

/// Phase 2: reclaims the GC-flagged records of one leaf. Caller holds the
/// exclusive latch.
std::size_t gc_reclaim_leaf(MemLeaf& leaf, Timestamp cutoff, const TransactionManager& txns);

/// Version chains of one partition, built from the rid links of its records.
class ChainIndex {
public:
    explicit ChainIndex(std::span<const IndexRecord> records);

    /// Chain id of a version, or npos when no record names it.
    std::size_t chain_of(RecordID rid) const;
    std::size_t chain_count() const { return chain_records_.size(); }
    /// Records per chain, indexed by chain id.
    const std::vector<std::size_t>& chain_records() const { return chain_records_; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::size_t find(std::size_t x) const;

    std::unordered_map<RecordID, std::size_t, RecordIDHash> node_of_;
    mutable std::vector<std::size_t> parent_;
    std::vector<std::size_t> chain_id_;  // root node -> chain id
    std::vector<std::size_t> chain_records_;
};

struct Phase3Result {
    std::vector<IndexRecord> survivors;
    std::size_t removed = 0;
    std::size_t chains = 0;
};

/// Phase 3: full cleanup of a sealed partition before it is persisted.
/// Every record whose version is invalidated for all current and future
/// snapshots is removed; chains are spliced and dead anti-matter dropped.
Phase3Result gc_phase3(std::vector<IndexRecord> records, Timestamp cutoff,
                       const TransactionManager& txns);

}  // namespace mvpbt
