#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include <hmlab/parallel.hpp>

using namespace hmlab;

TEST(Parallel, VisitsEveryIndexOnce) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Parallel, RethrowsWorkerExceptions) {
    EXPECT_THROW(parallel_for(64, [](std::size_t i) {
                     if (i == 17) throw std::runtime_error("boom");
                 }),
                 std::runtime_error);
}

TEST(Parallel, WorkerCountHonoursEnvironment) {
    setenv("HMLAB_THREADS", "3", 1);
    EXPECT_EQ(worker_count(), 3u);
    setenv("HMLAB_THREADS", "junk", 1);
    EXPECT_GE(worker_count(), 1u);
    unsetenv("HMLAB_THREADS");
    EXPECT_GE(worker_count(), 1u);
}

TEST(Parallel, EmptyRangeIsANoOp) {
    int calls = 0;
    parallel_for(0, [&](std::size_t) { ++calls; });
    EXPECT_EQ(calls, 0);
}
