#include <atomic>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "cbjj/parallel.hpp"
#include "cbjj/random.hpp"

using namespace cbjj;

TEST_CASE("stream seeds are stable and distinct") {
  CHECK(stream_seed(1, 0) == stream_seed(1, 0));
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 20; ++s) {
    for (std::uint64_t i = 0; i < 200; ++i) {
      seen.insert(stream_seed(s, i));
    }
  }
  CHECK(seen.size() == 4000);
  CHECK(derive_seed(5, "rate-curve", 3) != derive_seed(5, "efficiency-scan", 3));
  CHECK(derive_seed(5, "rate-curve", 3) == derive_seed(5, "rate-curve", 3));
  Rng a = make_stream(9, 4);
  Rng b = make_stream(9, 4);
  CHECK(a() == b());
}

TEST_CASE("hash constants") {
  // First splitmix64 output from state 0, and 64-bit FNV-1a.
  CHECK(mix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("parallel_for fills every slot once for any worker count") {
  for (unsigned jobs : {1u, 2u, 4u, 16u}) {
    std::vector<int> hits(257, 0);
    parallel_for(hits.size(), jobs, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) {
      CHECK(h == 1);
    }
  }
  parallel_for(0, 4, [](std::size_t) { FAIL("no items"); });
}

TEST_CASE("parallel_for rethrows the lowest failing index") {
  for (unsigned jobs : {1u, 3u}) {
    try {
      parallel_for(50, jobs, [](std::size_t i) {
        if (i == 17 || i == 33) {
          throw std::runtime_error(std::to_string(i));
        }
      });
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "17");
    }
  }
}
