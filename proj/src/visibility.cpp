#include "mvpbt/visibility.hpp"

namespace mvpbt {

namespace {

bool writer_visible(Timestamp ts, const Snapshot& snap, const TransactionManager& txns) {
    if (ts == snap.own_ts) return true;
    return txns.precedes(ts, snap) && !txns.is_concurrent(ts, snap);
}

}  // namespace

VisibilityResult visibility_check(const IndexRecord& r, const Snapshot& snap, AntiMap& anti_map,
                                  const TransactionManager& txns) {
    if (r.gc_flagged()) {
        if (r.rid_anti && writer_visible(r.ts, snap, txns)) anti_map.put(*r.rid_anti, r.ts);
        return {Verdict::GcFlagged, {}};
    }
    if (!writer_visible(r.ts, snap, txns)) return {Verdict::NotVisibleTs, {}};

    if (r.rid_matter) {
        if (auto anti_ts = anti_map.get(*r.rid_matter); anti_ts && *anti_ts >= r.ts) {
            if (r.rid_anti) anti_map.put(*r.rid_anti, r.ts);
            return {Verdict::Suppressed, *anti_ts};
        }
    }
    if (r.rid_anti) anti_map.put(*r.rid_anti, r.ts);
    if (!r.has_matter()) return {Verdict::PureAnti, {}};
    return {Verdict::Visible, {}};
}

}  // namespace mvpbt
