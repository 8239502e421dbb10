#include "mvpbt/filters.hpp"

#include <cmath>

namespace mvpbt {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view key) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : key) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// MurmurHash64A.
std::uint64_t murmur64a(std::string_view key, std::uint64_t seed) {
    constexpr std::uint64_t m = 0xc6a4a7935bd1e995ULL;
    constexpr int r = 47;
    std::uint64_t h = seed ^ (key.size() * m);
    std::size_t i = 0;
    for (; i + 8 <= key.size(); i += 8) {
        std::uint64_t k = le::get_u64(key.data() + i);
        k *= m;
        k ^= k >> r;
        k *= m;
        h ^= k;
        h *= m;
    }
    std::size_t rest = key.size() - i;
    if (rest > 0) {
        std::uint64_t k = 0;
        for (std::size_t j = 0; j < rest; ++j) {
            k |= std::uint64_t{static_cast<unsigned char>(key[i + j])} << (8 * j);
        }
        h ^= k;
        h *= m;
    }
    h ^= h >> r;
    h *= m;
    h ^= h >> r;
    return h;
}

}  // namespace

std::pair<std::uint64_t, std::uint64_t> bloom_hashes(std::string_view key) noexcept {
    return {mix64(fnv1a(key)), murmur64a(key, 0x9e3779b97f4a7c15ULL) | 1};
}

BloomFilter::BloomFilter(std::uint64_t expected_n, double target_fpr) {
    if (expected_n == 0) return;
    if (!(target_fpr > 0.0 && target_fpr < 1.0)) {
        throw Error(Errc::InvalidArgument, "bloom target fpr must be in (0,1)");
    }
    const double ln2 = std::log(2.0);
    m_ = static_cast<std::uint64_t>(
        std::ceil(-static_cast<double>(expected_n) * std::log(target_fpr) / (ln2 * ln2)));
    k_ = static_cast<std::uint32_t>(
        std::max(1.0, std::round(static_cast<double>(m_) / static_cast<double>(expected_n) * ln2)));
    bits_.assign((m_ + 7) / 8, '\0');
}

void BloomFilter::add(std::string_view key) {
    if (m_ == 0) throw Error(Errc::InvalidArgument, "bloom filter sized for zero keys");
    auto [h1, h2] = bloom_hashes(key);
    for (std::uint32_t i = 0; i < k_; ++i) {
        std::uint64_t bit = (h1 + i * h2) % m_;
        bits_[bit / 8] = static_cast<char>(bits_[bit / 8] | (1 << (bit % 8)));
    }
    ++n_;
}

bool BloomFilter::may_contain(std::string_view key) const {
    if (m_ == 0) return false;
    auto [h1, h2] = bloom_hashes(key);
    for (std::uint32_t i = 0; i < k_; ++i) {
        std::uint64_t bit = (h1 + i * h2) % m_;
        if ((bits_[bit / 8] & (1 << (bit % 8))) == 0) return false;
    }
    return true;
}

void BloomFilter::serialize_header(std::string& out) const {
    le::put_u64(out, m_);
    le::put_u32(out, k_);
    le::put_u64(out, n_);
}

BloomFilter BloomFilter::deserialize_header(le::Reader& rd) {
    BloomFilter f;
    f.m_ = rd.u64();
    f.k_ = rd.u32();
    f.n_ = rd.u64();
    if ((f.m_ == 0) != (f.k_ == 0) || f.k_ > 64) throw Error(Errc::CorruptFilter, "bad bloom header");
    return f;
}

void BloomFilter::read_bits(le::Reader& rd) { bits_ = std::string(rd.bytes((m_ + 7) / 8)); }

namespace {

void put_key(std::string& out, const Key& k) {
    le::put_u16(out, static_cast<std::uint16_t>(k.size()));
    out += k;
}

}  // namespace

FilterSet build_filters(std::span<const IndexRecord> records, const FilterConfig& config) {
    FilterSet fs;
    std::uint64_t distinct_keys = 0;
    std::uint64_t distinct_prefixes = 0;
    std::string_view last_key, last_prefix;
    auto prefix = [&](std::string_view k) {
        return k.substr(0, std::min<std::size_t>(k.size(), config.pbf_prefix_len));
    };
    for (std::size_t i = 0; i < records.size(); ++i) {
        std::string_view k = records[i].key;
        if (i == 0 || k != last_key) ++distinct_keys;
        if (config.pbf_prefix_len > 0 && (i == 0 || prefix(k) != last_prefix)) ++distinct_prefixes;
        last_key = k;
        last_prefix = prefix(k);
    }
    fs.bloom = BloomFilter(distinct_keys, config.bloom_fpr);
    if (config.pbf_prefix_len > 0) {
        fs.prefix_bloom = PrefixBloomFilter(distinct_prefixes, config.pbf_fpr, config.pbf_prefix_len);
    }

    for (std::size_t i = 0; i < records.size(); ++i) {
        const IndexRecord& r = records[i];
        if (i > 0 && compare(records[i - 1], r) > 0) {
            throw Error(Errc::InternalOrderViolation, "filter input not sorted");
        }
        bool new_key = (i == 0 || r.key != records[i - 1].key);
        if (new_key) fs.bloom.add(r.key);
        if (fs.prefix_bloom) {
            auto p = fs.prefix_bloom->prefix_of(r.key);
            if (i == 0 || p != fs.prefix_bloom->prefix_of(records[i - 1].key)) {
                fs.prefix_bloom->add_prefix(p);
            }
        }
        if (!fs.min_key || r.key < *fs.min_key) fs.min_key = r.key;
        if (!fs.max_key || r.key > *fs.max_key) fs.max_key = r.key;
        fs.min_ts = std::min(fs.min_ts, r.ts);
        fs.max_ts = std::max(fs.max_ts, r.ts);
    }
    return fs;
}

bool may_contain_point(const FilterSet& fs, std::string_view key) {
    if (fs.empty()) return false;
    if (key < std::string_view(*fs.min_key) || key > std::string_view(*fs.max_key)) return false;
    return fs.bloom.may_contain(key);
}

bool may_contain_range(const FilterSet& fs, const KeyBounds& bounds) {
    if (fs.empty()) return false;
    if (bounds.low && *bounds.low > *fs.max_key) return false;
    if (bounds.high && *bounds.high < *fs.min_key) return false;
    if (bounds.low && bounds.high && *bounds.low > *bounds.high) return false;
    if (bounds.is_point()) return fs.bloom.may_contain(*bounds.low);
    if (fs.prefix_bloom && bounds.low && bounds.high) {
        std::size_t p = fs.prefix_bloom->prefix_len();
        if (bounds.low->size() >= p && bounds.high->size() >= p &&
            bounds.low->compare(0, p, *bounds.high, 0, p) == 0) {
            return fs.prefix_bloom->may_contain_prefix(std::string_view(*bounds.low).substr(0, p));
        }
    }
    return true;
}

std::string filter_serialize(const FilterSet& fs) {
    std::string out;
    fs.bloom.serialize_header(out);
    le::put_u32(out, fs.prefix_bloom ? fs.prefix_bloom->prefix_len() : 0);
    out += fs.bloom.bits();
    if (fs.prefix_bloom) {
        fs.prefix_bloom->bloom().serialize_header(out);
        out += fs.prefix_bloom->bloom().bits();
    }
    out.push_back(fs.empty() ? 0 : 1);
    if (!fs.empty()) {
        put_key(out, *fs.min_key);
        put_key(out, *fs.max_key);
    }
    le::put_u64(out, fs.min_ts.value);
    le::put_u64(out, fs.max_ts.value);
    le::put_u32(out, crc32(out));
    return out;
}

FilterSet filter_deserialize(std::string_view bytes) {
    if (bytes.size() < 4) throw Error(Errc::CorruptFilter, "filter block too short");
    auto body = bytes.substr(0, bytes.size() - 4);
    if (crc32(body) != le::get_u32(bytes.data() + body.size())) {
        throw Error(Errc::CorruptFilter, "filter block checksum mismatch");
    }
    le::Reader rd(body, Errc::CorruptFilter);
    FilterSet fs;
    fs.bloom = BloomFilter::deserialize_header(rd);
    std::uint32_t prefix_len = rd.u32();
    fs.bloom.read_bits(rd);
    if (prefix_len > 0) {
        PrefixBloomFilter pbf(0, 0.5, prefix_len);
        pbf.bloom() = BloomFilter::deserialize_header(rd);
        pbf.bloom().read_bits(rd);
        fs.prefix_bloom = std::move(pbf);
    }
    if (rd.u8() != 0) {
        fs.min_key = Key(rd.bytes(rd.u16()));
        fs.max_key = Key(rd.bytes(rd.u16()));
    }
    fs.min_ts = Timestamp{rd.u64()};
    fs.max_ts = Timestamp{rd.u64()};
    if (rd.remaining() != 0) throw Error(Errc::CorruptFilter, "trailing bytes in filter block");
    return fs;
}

}  // namespace mvpbt
