#pragma once

#include <cstdint>
#include <map>
#include <shared_mutex>
#include <string>
#include <vector>

#include "mvpbt/common.hpp"

namespace mvpbt {

enum class TxState : std::uint8_t { Active, Committed, Aborted };

/// Immutable view of the transaction system taken at begin.
struct Snapshot {
    Timestamp own_ts;
    // Every transaction with ts < horizon had finished when the snapshot was taken.
    Timestamp horizon;
    // Sorted; transactions begun but not finished at snapshot time.
    std::vector<Timestamp> active_set;

    bool in_active_set(Timestamp ts) const;
};

struct TransactionHandle {
    Timestamp ts;
    Snapshot snapshot;
};

/// Timestamp source and commit table. Timestamps are handed out at begin;
/// a version is visible to a snapshot when its writer committed and was not
/// in the snapshot's active set.
class TransactionManager {
public:
    TransactionManager() = default;
    TransactionManager(const TransactionManager&) = delete;
    TransactionManager& operator=(const TransactionManager&) = delete;

    TransactionHandle begin();
    void commit(const TransactionHandle& tx);
    void abort(const TransactionHandle& tx);

    TxState state(Timestamp ts) const;

    bool precedes(Timestamp ts, const Snapshot& reader) const;
    bool is_concurrent(Timestamp ts, const Snapshot& reader) const;

    /// Smallest ts any active transaction still regards as running (or the
    /// next ts when nothing is active). Everything committed below it is
    /// visible to every current and future snapshot.
    Timestamp cutoff_timestamp() const;

    /// Minimum ts over active transactions, or the next ts if none.
    Timestamp oldest_active() const;

    Timestamp next_timestamp() const;
    std::size_t active_count() const;

    /// Clean-shutdown checkpoint of the commit table. Transactions still
    /// active at save time are recorded as aborted.
    void save(const std::string& path) const;
    void load(const std::string& path);

private:
    void check_known(Timestamp ts) const;
    void finish(const TransactionHandle& tx, TxState to);

    mutable std::shared_mutex mu_;
    std::uint64_t next_ts_ = 1;
    std::vector<TxState> states_{TxState::Aborted};  // index 0 unused
    std::map<std::uint64_t, Timestamp> active_;      // ts -> snapshot horizon
};

}  // namespace mvpbt
