#include "mvpbt/workload.hpp"

#include <cmath>

namespace mvpbt {

namespace {

// log1p(x) / x, stable near 0.
double helper1(double x) {
    if (std::abs(x) > 1e-8) return std::log1p(x) / x;
    return 1.0 - x * (0.5 - x * (1.0 / 3.0 - 0.25 * x));
}

// expm1(x) / x, stable near 0.
double helper2(double x) {
    if (std::abs(x) > 1e-8) return std::expm1(x) / x;
    return 1.0 + x * 0.5 * (1.0 + x / 3.0 * (1.0 + 0.25 * x));
}

}  // namespace

ZipfianGenerator::ZipfianGenerator(std::uint64_t n, double theta) : n_(n), theta_(theta) {
    if (n == 0) throw Error(Errc::InvalidSpec, "zipfian over zero items");
    if (!(theta > 0.0)) throw Error(Errc::InvalidSpec, "zipfian exponent must be positive");
    h_integral_x1_ = h_integral(1.5) - 1.0;
    h_integral_n_ = h_integral(static_cast<double>(n) + 0.5);
    s_ = 2.0 - h_integral_inverse(h_integral(2.5) - h(2.0));
}

double ZipfianGenerator::h(double x) const { return std::exp(-theta_ * std::log(x)); }

double ZipfianGenerator::h_integral(double x) const {
    double log_x = std::log(x);
    return helper2((1.0 - theta_) * log_x) * log_x;
}

double ZipfianGenerator::h_integral_inverse(double x) const {
    double t = x * (1.0 - theta_);
    if (t < -1.0) t = -1.0;
    return std::exp(helper1(t) * x);
}

double ZipfianGenerator::top_mass(std::uint64_t n, double theta) {
    double h = 0.0;
    for (std::uint64_t i = 1; i <= n; ++i) h += std::pow(static_cast<double>(i), -theta);
    return 1.0 / h;
}

WorkloadSpec ycsb_workload(const std::string& name, std::uint64_t key_count, std::uint64_t ops) {
    WorkloadSpec s;
    s.name = name;
    s.key_count = key_count;
    s.ops = ops;
    if (name == "a") {
        s.read = 0.5;
        s.update = 0.5;
    } else if (name == "b") {
        s.read = 0.95;
        s.update = 0.05;
    } else if (name == "d") {
        s.read = 0.95;
        s.insert = 0.05;
        s.distribution = Distribution::Latest;
    } else if (name == "e") {
        s.scan = 0.95;
        s.insert = 0.05;
    } else {
        throw Error(Errc::InvalidSpec, "unknown workload " + name);
    }
    validate(s);
    return s;
}

void validate(const WorkloadSpec& s) {
    double sum = s.read + s.update + s.insert + s.scan;
    if (s.read < 0 || s.update < 0 || s.insert < 0 || s.scan < 0 || std::abs(sum - 1.0) > 1e-9) {
        throw Error(Errc::InvalidSpec, "operation fractions must be non-negative and sum to 1");
    }
    if (s.key_count == 0) throw Error(Errc::InvalidSpec, "key count must be positive");
    if (s.scan > 0 && s.max_scan_length == 0) throw Error(Errc::InvalidSpec, "scan length must be positive");
    if (s.threads == 0) throw Error(Errc::InvalidSpec, "thread count must be positive");
}

const char* op_name(Op::Type t) noexcept {
    switch (t) {
        case Op::Type::Read: return "read";
        case Op::Type::Update: return "update";
        case Op::Type::Insert: return "insert";
        case Op::Type::Scan: return "scan";
    }
    return "?";
}

WorkloadGenerator::WorkloadGenerator(const WorkloadSpec& spec, std::uint64_t seed)
    : spec_(spec), gen_(seed), keys_(spec.key_count), zipf_(spec.key_count, spec.theta) {
    validate(spec_);
}

std::uint64_t WorkloadGenerator::pick_existing() {
    switch (spec_.distribution) {
        case Distribution::Uniform:
            return std::uniform_int_distribution<std::uint64_t>(0, keys_ - 1)(gen_);
        case Distribution::Zipfian:
            return zipf_(gen_) - 1;
        case Distribution::Latest: {
            std::uint64_t back = zipf_(gen_) - 1;
            return back < keys_ ? keys_ - 1 - back : 0;
        }
    }
    return 0;
}

Op WorkloadGenerator::next() {
    double r = std::uniform_real_distribution<double>(0.0, 1.0)(gen_);
    Op op;
    if (r < spec_.read) {
        op.type = Op::Type::Read;
        op.key = pick_existing();
    } else if (r < spec_.read + spec_.update) {
        op.type = Op::Type::Update;
        op.key = pick_existing();
    } else if (r < spec_.read + spec_.update + spec_.insert) {
        op.type = Op::Type::Insert;
        op.key = keys_++;
    } else {
        op.type = Op::Type::Scan;
        op.key = pick_existing();
        op.scan_length = std::uniform_int_distribution<std::uint32_t>(1, spec_.max_scan_length)(gen_);
    }
    return op;
}

std::vector<Op> generate(const WorkloadSpec& spec, std::uint64_t seed) {
    WorkloadGenerator g(spec, seed);
    std::vector<Op> out;
    out.reserve(spec.ops);
    for (std::uint64_t i = 0; i < spec.ops; ++i) out.push_back(g.next());
    return out;
}

std::string bench_key(std::uint64_t k) {
    std::string s = std::to_string(k);
    if (s.size() < 12) s.insert(0, 12 - s.size(), '0');
    return s;
}

}  // namespace mvpbt
