#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mvpbt/common.hpp"

namespace mvpbt {

/// Zipf-distributed ranks in [1, n] with exponent `theta`, drawn by
/// rejection-inversion (Hörmann and Derflinger).
class ZipfianGenerator {
public:
    ZipfianGenerator(std::uint64_t n, double theta);

    template <typename Gen>
    std::uint64_t operator()(Gen& gen) {
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (;;) {
            double u = h_integral_n_ + uni(gen) * (h_integral_x1_ - h_integral_n_);
            double x = h_integral_inverse(u);
            auto k = static_cast<std::uint64_t>(x + 0.5);
            if (k < 1) k = 1;
            if (k > n_) k = n_;
            if (static_cast<double>(k) - x <= s_ || u >= h_integral(static_cast<double>(k) + 0.5) - h(static_cast<double>(k))) {
                return k;
            }
        }
    }

    std::uint64_t n() const { return n_; }
    double theta() const { return theta_; }

    /// Probability mass of rank 1: 1 / H(n, theta).
    static double top_mass(std::uint64_t n, double theta);

private:
    double h(double x) const;
    double h_integral(double x) const;
    double h_integral_inverse(double x) const;

    std::uint64_t n_;
    double theta_;
    double h_integral_x1_;
    double h_integral_n_;
    double s_;
};

enum class Distribution { Uniform, Zipfian, Latest };

struct WorkloadSpec {
    std::string name;
    double read = 0;
    double update = 0;
    double insert = 0;
    double scan = 0;
    std::uint64_t key_count = 100000;
    std::uint64_t ops = 100000;
    Distribution distribution = Distribution::Zipfian;
    double theta = 0.99;
    std::uint32_t max_scan_length = 100;
    std::size_t threads = 1;
};

/// YCSB core workloads a, b, d, e. Throws InvalidSpec for anything else.
WorkloadSpec ycsb_workload(const std::string& name, std::uint64_t key_count, std::uint64_t ops);
void validate(const WorkloadSpec& spec);

struct Op {
    enum class Type : std::uint8_t { Read, Update, Insert, Scan };
    Type type = Type::Read;
    std::uint64_t key = 0;
    std::uint32_t scan_length = 0;

    bool operator==(const Op&) const = default;
};

const char* op_name(Op::Type t) noexcept;

/// Deterministic operation stream for (spec, seed). Inserts extend the key
/// space; "latest" skews toward the most recently inserted keys.
class WorkloadGenerator {
public:
    WorkloadGenerator(const WorkloadSpec& spec, std::uint64_t seed);
    Op next();
    std::uint64_t key_count() const { return keys_; }

private:
    std::uint64_t pick_existing();

    WorkloadSpec spec_;
    std::mt19937_64 gen_;
    std::uint64_t keys_;
    ZipfianGenerator zipf_;
};

std::vector<Op> generate(const WorkloadSpec& spec, std::uint64_t seed);

/// Keys as fixed-width decimal strings so byte order matches numeric order.
std::string bench_key(std::uint64_t k);

}  // namespace mvpbt
