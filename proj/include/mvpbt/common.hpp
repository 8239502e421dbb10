#pragma once

#include <compare>
#include <cstdint>
#include <cstring>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mvpbt {

// Keys and payloads are opaque byte strings compared lexicographically
// (std::string compares as unsigned char).
using Key = std::string;

inline constexpr std::size_t kMaxKeySize = 1024;
inline constexpr std::size_t kDefaultPageSize = 8192;

struct Timestamp {
    std::uint64_t value = 0;

    constexpr Timestamp() = default;
    constexpr explicit Timestamp(std::uint64_t v) : value(v) {}

    constexpr auto operator<=>(const Timestamp&) const = default;
};

struct PartitionNo {
    std::uint16_t value = 0;

    constexpr PartitionNo() = default;
    constexpr explicit PartitionNo(std::uint16_t v) : value(v) {}

    constexpr auto operator<=>(const PartitionNo&) const = default;
};

/// Physical address of a version record in the heap: page and slot.
struct RecordID {
    std::uint32_t page_no = 0;
    std::uint16_t slot = 0;

    constexpr auto operator<=>(const RecordID&) const = default;
};

struct RecordIDHash {
    std::size_t operator()(const RecordID& rid) const noexcept {
        return std::hash<std::uint64_t>{}((std::uint64_t{rid.page_no} << 16) | rid.slot);
    }
};

enum class Errc {
    DoubleFinish,
    UnknownTimestamp,
    StorageFull,
    UnknownRecordID,
    MalformedRecord,
    CorruptRecord,
    ImmutablePartition,
    InternalOrderViolation,
    CorruptPage,
    CorruptFilter,
    UniqueViolation,
    EmptyBuffer,
    DuplicateEntry,
    InvalidSpec,
    WriteConflict,
    TupleDeleted,
    KeyTooLarge,
    InvalidArgument,
    IoError,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Inclusive key bounds; an absent side is unbounded.
struct KeyBounds {
    std::optional<Key> low;
    std::optional<Key> high;

    static KeyBounds all() { return {}; }
    static KeyBounds point(Key k) { return {k, k}; }
    static KeyBounds range(Key lo, Key hi) { return {std::move(lo), std::move(hi)}; }

    bool contains(std::string_view k) const {
        if (low && k < std::string_view(*low)) return false;
        if (high && k > std::string_view(*high)) return false;
        return true;
    }
    bool is_point() const { return low && high && *low == *high; }
};

// Little-endian byte helpers shared by all on-disk formats.
namespace le {

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}
inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_rid(std::string& out, RecordID rid) {
    put_u32(out, rid.page_no);
    put_u16(out, rid.slot);
}

inline std::uint16_t get_u16(const char* p) {
    auto b = reinterpret_cast<const unsigned char*>(p);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}
inline std::uint32_t get_u32(const char* p) {
    auto b = reinterpret_cast<const unsigned char*>(p);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}
inline std::uint64_t get_u64(const char* p) {
    auto b = reinterpret_cast<const unsigned char*>(p);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}
inline RecordID get_rid(const char* p) { return RecordID{get_u32(p), get_u16(p + 4)}; }

inline void store_u32(char* p, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = static_cast<char>((v >> (8 * i)) & 0xff);
}

/// Bounds-checked sequential reader; throws Error(on_short) on truncation.
class Reader {
public:
    Reader(std::string_view buf, Errc on_short) : buf_(buf), on_short_(on_short) {}

    std::uint8_t u8() { need(1); return static_cast<std::uint8_t>(buf_[pos_++]); }
    std::uint16_t u16() { need(2); auto v = get_u16(buf_.data() + pos_); pos_ += 2; return v; }
    std::uint32_t u32() { need(4); auto v = get_u32(buf_.data() + pos_); pos_ += 4; return v; }
    std::uint64_t u64() { need(8); auto v = get_u64(buf_.data() + pos_); pos_ += 8; return v; }
    RecordID rid() { need(6); auto v = get_rid(buf_.data() + pos_); pos_ += 6; return v; }
    std::string_view bytes(std::size_t n) {
        need(n);
        auto v = buf_.substr(pos_, n);
        pos_ += n;
        return v;
    }

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return buf_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (buf_.size() - pos_ < n) throw Error(on_short_, "truncated buffer");
    }

    std::string_view buf_;
    std::size_t pos_ = 0;
    Errc on_short_;
};

}  // namespace le

std::uint32_t crc32(std::string_view bytes) noexcept;

}  // namespace mvpbt
