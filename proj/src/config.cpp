#include "mvpbt/config.hpp"

#include <charconv>
#include <fstream>

namespace mvpbt {

namespace {

std::string trim(std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw Error(Errc::InvalidSpec, "bad value for " + key + ": " + v);
    }
    return out;
}

}  // namespace

EngineConfig parse_config(std::istream& in) {
    EngineConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(Errc::InvalidSpec, "line " + std::to_string(lineno) + ": expected key=value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key == "buffer_capacity_bytes") c.buffer_capacity_bytes = parse_number<std::size_t>(key, val);
        else if (key == "evict_threshold_pct") c.evict_threshold_pct = parse_number<unsigned>(key, val);
        else if (key == "staleness_evictions") c.staleness_evictions = parse_number<unsigned>(key, val);
        else if (key == "page_size") c.page_size = parse_number<std::size_t>(key, val);
        else if (key == "write_buffer_bytes") c.write_buffer_bytes = parse_number<std::size_t>(key, val);
        else if (key == "bloom_fpr") c.bloom_fpr = parse_number<double>(key, val);
        else if (key == "pbf_fpr") c.pbf_fpr = parse_number<double>(key, val);
        else if (key == "pbf_prefix_len") c.pbf_prefix_len = parse_number<std::uint32_t>(key, val);
        else throw Error(Errc::InvalidSpec, "unknown config key " + key);
    }
    if (c.evict_threshold_pct == 0 || c.evict_threshold_pct > 100) {
        throw Error(Errc::InvalidSpec, "evict_threshold_pct must be in 1..100");
    }
    if (c.page_size < 512 || c.page_size > 65535) throw Error(Errc::InvalidSpec, "page_size must be in 512..65535");
    if (!(c.bloom_fpr > 0 && c.bloom_fpr < 1) || !(c.pbf_fpr > 0 && c.pbf_fpr < 1)) {
        throw Error(Errc::InvalidSpec, "filter fpr must be in (0,1)");
    }
    return c;
}

EngineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::InvalidSpec, "cannot open config " + path);
    return parse_config(in);
}

}  // namespace mvpbt
