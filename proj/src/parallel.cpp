#include "hartogskit/parallel.hpp"

#include <atomic>

namespace hk {

namespace {
std::atomic<int> g_thread_limit{1};
}

void set_thread_limit(int threads) { g_thread_limit.store(threads < 1 ? 1 : threads); }

int thread_limit() { return g_thread_limit.load(); }

} // namespace hk
