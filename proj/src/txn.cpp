#include "mvpbt/txn.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>

namespace mvpbt {

bool Snapshot::in_active_set(Timestamp ts) const {
    return std::binary_search(active_set.begin(), active_set.end(), ts);
}

TransactionHandle TransactionManager::begin() {
    std::unique_lock lock(mu_);
    TransactionHandle tx;
    tx.ts = Timestamp{next_ts_++};
    tx.snapshot.own_ts = tx.ts;
    tx.snapshot.active_set.reserve(active_.size());
    for (const auto& [ts, horizon] : active_) tx.snapshot.active_set.push_back(Timestamp{ts});
    tx.snapshot.horizon = tx.snapshot.active_set.empty() ? tx.ts : tx.snapshot.active_set.front();
    states_.push_back(TxState::Active);
    active_.emplace(tx.ts.value, tx.snapshot.horizon);
    return tx;
}

void TransactionManager::finish(const TransactionHandle& tx, TxState to) {
    std::unique_lock lock(mu_);
    if (tx.ts.value == 0 || tx.ts.value >= next_ts_) {
        throw Error(Errc::UnknownTimestamp, "ts " + std::to_string(tx.ts.value));
    }
    if (states_[tx.ts.value] != TxState::Active) {
        throw Error(Errc::DoubleFinish, "ts " + std::to_string(tx.ts.value));
    }
    states_[tx.ts.value] = to;
    active_.erase(tx.ts.value);
}

void TransactionManager::commit(const TransactionHandle& tx) { finish(tx, TxState::Committed); }

void TransactionManager::abort(const TransactionHandle& tx) { finish(tx, TxState::Aborted); }

void TransactionManager::check_known(Timestamp ts) const {
    if (ts.value == 0 || ts.value >= next_ts_) {
        throw Error(Errc::UnknownTimestamp, "ts " + std::to_string(ts.value));
    }
}

TxState TransactionManager::state(Timestamp ts) const {
    std::shared_lock lock(mu_);
    check_known(ts);
    return states_[ts.value];
}

bool TransactionManager::precedes(Timestamp ts, const Snapshot& reader) const {
    std::shared_lock lock(mu_);
    check_known(ts);
    if (ts >= reader.own_ts) return false;
    if (reader.in_active_set(ts)) return false;
    // Not active at snapshot time and older, so it had finished by then.
    return states_[ts.value] == TxState::Committed;
}

bool TransactionManager::is_concurrent(Timestamp ts, const Snapshot& reader) const {
    std::shared_lock lock(mu_);
    check_known(ts);
    if (ts == reader.own_ts) return false;
    return ts > reader.own_ts || reader.in_active_set(ts);
}

Timestamp TransactionManager::cutoff_timestamp() const {
    std::shared_lock lock(mu_);
    Timestamp cutoff{next_ts_};
    for (const auto& [ts, horizon] : active_) cutoff = std::min(cutoff, horizon);
    return cutoff;
}

Timestamp TransactionManager::oldest_active() const {
    std::shared_lock lock(mu_);
    return active_.empty() ? Timestamp{next_ts_} : Timestamp{active_.begin()->first};
}

Timestamp TransactionManager::next_timestamp() const {
    std::shared_lock lock(mu_);
    return Timestamp{next_ts_};
}

std::size_t TransactionManager::active_count() const {
    std::shared_lock lock(mu_);
    return active_.size();
}

void TransactionManager::save(const std::string& path) const {
    std::shared_lock lock(mu_);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + path);
    out << "next_ts " << next_ts_ << "\naborted";
    for (std::uint64_t ts = 1; ts < next_ts_; ++ts) {
        if (states_[ts] != TxState::Committed) out << ' ' << ts;
    }
    out << '\n';
    if (!out) throw Error(Errc::IoError, "write failed " + path);
}

void TransactionManager::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot read " + path);
    std::string tag;
    std::uint64_t next = 0;
    if (!(in >> tag >> next) || tag != "next_ts" || next == 0) {
        throw Error(Errc::CorruptRecord, "bad commit table header in " + path);
    }
    std::unique_lock lock(mu_);
    next_ts_ = next;
    states_.assign(next, TxState::Committed);
    states_[0] = TxState::Aborted;
    active_.clear();
    if (!(in >> tag) || tag != "aborted") throw Error(Errc::CorruptRecord, "missing aborted list");
    std::uint64_t ts = 0;
    while (in >> ts) {
        if (ts == 0 || ts >= next) throw Error(Errc::CorruptRecord, "aborted ts out of range");
        states_[ts] = TxState::Aborted;
    }
}

}  // namespace mvpbt
