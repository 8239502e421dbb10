#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvpbt/common.hpp"
#include "mvpbt/index_record.hpp"

namespace mvpbt {

/// Two independent 64-bit hashes of a byte string. Probe i uses
/// h1 + i * h2 (mod m).
std::pair<std::uint64_t, std::uint64_t> bloom_hashes(std::string_view key) noexcept;

class BloomFilter {
public:
    BloomFilter() = default;

    /// Sized for `expected_n` keys at `target_fpr`:
    /// m = ceil(-n ln p / ln^2 2), k = round(m / n * ln 2).
    BloomFilter(std::uint64_t expected_n, double target_fpr);

    void add(std::string_view key);
    bool may_contain(std::string_view key) const;

    std::uint64_t bit_count() const { return m_; }
    std::uint32_t hash_count() const { return k_; }
    std::uint64_t inserted() const { return n_; }
    std::size_t byte_size() const { return bits_.size(); }

    const std::string& bits() const { return bits_; }

    /// Header {m u64, k u32, n u64}; the bit array is written separately.
    void serialize_header(std::string& out) const;
    static BloomFilter deserialize_header(le::Reader& rd);
    void read_bits(le::Reader& rd);

    bool operator==(const BloomFilter&) const = default;

private:
    std::uint64_t m_ = 0;
    std::uint32_t k_ = 0;
    std::uint64_t n_ = 0;
    std::string bits_;
};

/// Bloom filter over the first `prefix_len` bytes of each key (whole key if
/// shorter).
class PrefixBloomFilter {
public:
    PrefixBloomFilter() = default;
    PrefixBloomFilter(std::uint64_t expected_prefixes, double target_fpr, std::uint32_t prefix_len)
        : bloom_(expected_prefixes, target_fpr), prefix_len_(prefix_len) {}

    std::string_view prefix_of(std::string_view key) const {
        return key.substr(0, std::min<std::size_t>(key.size(), prefix_len_));
    }
    void add_prefix(std::string_view prefix) { bloom_.add(prefix); }
    bool may_contain_prefix(std::string_view prefix) const { return bloom_.may_contain(prefix); }

    std::uint32_t prefix_len() const { return prefix_len_; }
    const BloomFilter& bloom() const { return bloom_; }
    BloomFilter& bloom() { return bloom_; }

    bool operator==(const PrefixBloomFilter&) const = default;

private:
    BloomFilter bloom_;
    std::uint32_t prefix_len_ = 0;
};

struct FilterConfig {
    double bloom_fpr = 0.02;
    double pbf_fpr = 0.10;
    // 0 disables the prefix filter.
    std::uint32_t pbf_prefix_len = 4;
};

/// Skip filters of one persisted partition.
struct FilterSet {
    std::optional<Key> min_key;  // empty partition: no range
    std::optional<Key> max_key;
    Timestamp min_ts{UINT64_MAX};
    Timestamp max_ts{0};
    BloomFilter bloom;
    std::optional<PrefixBloomFilter> prefix_bloom;

    bool empty() const { return !min_key.has_value(); }
    bool operator==(const FilterSet&) const = default;
};

/// One pass over an ordered record stream.
FilterSet build_filters(std::span<const IndexRecord> records, const FilterConfig& config);

bool may_contain_point(const FilterSet& fs, std::string_view key);
bool may_contain_range(const FilterSet& fs, const KeyBounds& bounds);

/// Filter block: {m u64, k u32, n u64, prefix_len u32}, bloom bits, then
/// when prefix_len > 0 the prefix bloom {m, k, n} and bits; key range,
/// ts range, and a trailing CRC-32 of everything before it.
std::string filter_serialize(const FilterSet& fs);
FilterSet filter_deserialize(std::string_view bytes);

}  // namespace mvpbt
