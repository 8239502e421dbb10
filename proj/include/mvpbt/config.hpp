#pragma once

#include <cstdint>
#include <istream>
#include <string>

#include "mvpbt/common.hpp"

namespace mvpbt {

/// Engine settings read from a plain key=value file. '#' starts a comment.
struct EngineConfig {
    std::size_t buffer_capacity_bytes = 16 * 1024 * 1024;
    unsigned evict_threshold_pct = 90;
    unsigned staleness_evictions = 4;
    std::size_t page_size = kDefaultPageSize;
    std::size_t write_buffer_bytes = 64 * 1024;
    double bloom_fpr = 0.02;
    double pbf_fpr = 0.10;
    std::uint32_t pbf_prefix_len = 4;
};

/// Throws InvalidSpec on unknown keys or malformed values.
EngineConfig parse_config(std::istream& in);
EngineConfig load_config(const std::string& path);

}  // namespace mvpbt
