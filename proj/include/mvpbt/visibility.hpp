#pragma once

#include <optional>
#include <unordered_map>

#include "mvpbt/common.hpp"
#include "mvpbt/index_record.hpp"
#include "mvpbt/txn.hpp"

namespace mvpbt {

/// rid -> greatest invalidating ts seen so far. One instance per search or
/// scan; it spans all partitions visited by that operation.
class AntiMap {
public:
    void put(RecordID rid, Timestamp ts) {
        auto [it, inserted] = map_.try_emplace(rid, ts);
        if (!inserted && it->second < ts) it->second = ts;
    }
    std::optional<Timestamp> get(RecordID rid) const {
        auto it = map_.find(rid);
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }
    std::size_t size() const { return map_.size(); }
    void clear() { map_.clear(); }

private:
    std::unordered_map<RecordID, Timestamp, RecordIDHash> map_;
};

enum class Verdict : std::uint8_t {
    Visible,
    GcFlagged,     // flagged record; its anti-matter may still have been registered
    NotVisibleTs,  // writer aborted, running, concurrent or later
    Suppressed,    // matter invalidated by a newer record seen earlier
    PureAnti,      // anti or tombstone record
};

struct VisibilityResult {
    Verdict verdict = Verdict::Visible;
    // For Suppressed: the invalidating ts found in the anti map.
    Timestamp anti_ts;

    bool visible() const { return verdict == Verdict::Visible; }
};

/// Index-only visibility check. Records must arrive newest-first per key,
/// partitions newest-first.
///
/// Rules, in order:
///  - GC-flagged: invisible. Its anti-matter is still registered when its
///    writer is visible, since a flagged record may have been left in place
///    for a chain whose older records live elsewhere.
///  - Writer not visible to the snapshot (own writes count as visible).
///  - Matter suppressed by an anti-map entry with ts >= record ts; the
///    record's own anti-matter is registered too, so invalidation carries
///    down the chain.
///  - Anti-matter is registered; visible iff the record carries matter.
VisibilityResult visibility_check(const IndexRecord& r, const Snapshot& snap, AntiMap& anti_map,
                                  const TransactionManager& txns);

/// Disabled check used to emulate a version-oblivious partitioned B-tree:
/// every matter record is a candidate.
inline bool matter_candidate(const IndexRecord& r) { return r.has_matter() && !r.gc_flagged(); }

}  // namespace mvpbt
