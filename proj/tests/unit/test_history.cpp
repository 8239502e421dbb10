#include "doctest.h"
#include "support/history.hpp"

using namespace mvpbt;
using namespace mvpbt::testing;

TEST_CASE("random histories agree with the chain-walk oracle") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        HistoryParams p;
        p.seed = seed;
        auto rep = run_history(p);
        INFO(rep.first_mismatch);
        CHECK(rep.mismatches == 0);
        CHECK(rep.heap_fetches_in_index_reads == 0);
    }
}

TEST_CASE("GC phases never change what live readers see") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto rep = run_gc_schedule(seed);
        INFO(rep.first_mismatch);
        CHECK(rep.mismatches == 0);
    }
}
