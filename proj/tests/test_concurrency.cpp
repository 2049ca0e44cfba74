#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>
#include <vector>

#include "flow/ops.hpp"
#include "flow/rng.hpp"
#include "support.hpp"

using namespace flow;
using testsupport::as_ints;
using testsupport::counting_source;

namespace {

std::vector<std::int64_t> random_ints(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<std::int64_t> out(n);
  for (auto& x : out) x = static_cast<std::int64_t>(rng.below(1'000'000));
  return out;
}

double elapsed_ms(const std::function<void()>& body) {
  auto start = std::chrono::steady_clock::now();
  body();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

TEST_CASE("prefetch is transparent for content and order") {
  for (std::size_t capacity : {std::size_t{1}, std::size_t{2}, std::size_t{8}, std::size_t{64}}) {
    auto data = random_ints(capacity, 250);
    auto out = make_source(data) >> prefetch(capacity) >> collect();
    CHECK(as_ints(out) == data);
  }
  CHECK((make_source(std::vector<std::int64_t>{}) >> prefetch(4) >> collect()).empty());
  CHECK_THROWS_AS(prefetch(0), std::invalid_argument);
}

TEST_CASE("prefetch pulls nothing until the downstream side pulls") {
  auto pulls = std::make_shared<std::atomic<std::int64_t>>(0);
  {
    Flow f = counting_source(100, pulls) >> prefetch(8);
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    CHECK(*pulls == 0);  // worker must not start at construction
  }                      // dropping the unpulled flow must not hang
  CHECK(*pulls == 0);
}

TEST_CASE("prefetch reads at most capacity ahead of the consumer") {
  auto pulls = std::make_shared<std::atomic<std::int64_t>>(0);
  auto out = counting_source(1000, pulls) >> prefetch(8) >> take(3) >> collect();
  CHECK(as_ints(out) == std::vector<std::int64_t>{0, 1, 2});
  // 3 delivered + at most 8 buffered; the worker has been joined by now.
  CHECK(*pulls <= 11);
}

TEST_CASE("dropping a prefetching flow mid-stream stops the worker") {
  auto pulls = std::make_shared<std::atomic<std::int64_t>>(0);
  {
    Flow f = counting_source(100000, pulls) >> prefetch(4);
    CHECK(f.pull().is_element());
    CHECK(f.pull().is_element());
  }  // destructor joins; the test would hang here on a stuck worker
  std::int64_t after = *pulls;
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  CHECK(*pulls == after);  // no pulls continue after the drop
}

TEST_CASE("prefetch delivers an upstream Error in order") {
  Processor boom = from_fn("boom", [](std::int64_t x) -> std::int64_t {
    if (x == 5) throw std::runtime_error("bad element");
    return x;
  });
  Flow f = range_source(0, 100) >> boom >> prefetch(4);
  std::vector<std::int64_t> got;
  for (;;) {
    PullResult r = f.pull();
    if (r.is_element()) {
      got.push_back(r.element().value().as_int());
      continue;
    }
    REQUIRE(r.is_error());
    CHECK(r.error().stage == "boom");
    break;
  }
  CHECK(got == std::vector<std::int64_t>{0, 1, 2, 3, 4});
  CHECK(f.pull().is_end());
}

TEST_CASE("prefetch overlaps producer and consumer wait time") {
  using namespace std::chrono_literals;
  const int n = 25;
  auto slow_source = [&]() {
    return generate([i = 0]() mutable -> std::optional<Element> {
      if (i >= n) return std::nullopt;
      std::this_thread::sleep_for(2ms);
      return Element(Value(std::int64_t{i++}));
    });
  };
  Processor slow_stage = map([](Element e) {
    std::this_thread::sleep_for(2ms);
    return e;
  });

  double sequential = elapsed_ms([&] { slow_source() >> slow_stage >> consume(); });
  double overlapped =
      elapsed_ms([&] { slow_source() >> prefetch(8) >> slow_stage >> consume(); });
  // Sleeps on the worker and consumer threads overlap even on one core.
  CHECK(overlapped < 0.8 * sequential);
}

TEST_CASE("parallel_map matches sequential map exactly") {
  auto square_mod = [](std::int64_t x) { return (x * x) % 997; };
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto data = random_ints(seed, 300);
    auto sequential = make_source(data) >> map(square_mod) >> collect();
    auto parallel = make_source(data) >> parallel_map(square_mod, 4, 8) >> collect();
    CHECK(sequential == parallel);
  }
}

TEST_CASE("parallel_map with one worker behaves like map") {
  auto data = random_ints(3, 100);
  auto inc = [](std::int64_t x) { return x + 1; };
  CHECK((make_source(data) >> map(inc) >> collect()) ==
        (make_source(data) >> parallel_map(inc, 1, 1) >> collect()));
}

TEST_CASE("parallel_map handles flows shorter than its window") {
  auto out = make_source(std::vector<std::int64_t>{1, 2}) >>
             parallel_map([](std::int64_t x) { return x * 10; }, 4, 16) >> collect();
  CHECK(as_ints(out) == std::vector<std::int64_t>{10, 20});
  CHECK((make_source(std::vector<std::int64_t>{}) >>
         parallel_map([](std::int64_t x) { return x; }, 2, 4) >> collect())
            .empty());
}

TEST_CASE("parallel_map validates its configuration") {
  auto f = [](std::int64_t x) { return x; };
  CHECK_THROWS_AS(parallel_map(f, 0, 4), std::invalid_argument);
  CHECK_THROWS_AS(parallel_map(f, 2, 0), std::invalid_argument);
  CHECK_THROWS_AS(parallel_map(f, 4, 2), std::invalid_argument);  // window < workers
}

TEST_CASE("parallel_map surfaces a failure at its input position") {
  auto f = [](std::int64_t x) -> std::int64_t {
    if (x == 57) throw std::runtime_error("x=57");
    return x * 2;
  };
  Flow flw = range_source(0, 1000) >> parallel_map(f, 4, 8);
  std::vector<std::int64_t> got;
  for (;;) {
    PullResult r = flw.pull();
    if (r.is_element()) {
      got.push_back(r.element().value().as_int());
      continue;
    }
    REQUIRE(r.is_error());
    CHECK(r.error().stage == "parallel_map");
    CHECK(r.error().message == "x=57");
    break;
  }
  CHECK(got.size() == 57);  // every element before the failing one, in order
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == std::int64_t(2 * i));
  CHECK(flw.pull().is_end());
}

TEST_CASE("parallel_map bounds in-flight work by its window") {
  auto pulls = std::make_shared<std::atomic<std::int64_t>>(0);
  auto out = counting_source(1000, pulls) >>
             parallel_map([](std::int64_t x) { return x; }, 2, 6) >> take(3) >> collect();
  CHECK(out.size() == 3);
  CHECK(*pulls <= 3 + 6);
}

TEST_CASE("parallel_map speeds up CPU-bound work given enough cores") {
  if (std::thread::hardware_concurrency() < 4) {
    MESSAGE("skipped: needs at least 4 hardware threads, have "
            << std::thread::hardware_concurrency());
    return;
  }
  auto burn = [](std::int64_t x) {
    volatile std::uint64_t acc = static_cast<std::uint64_t>(x);
    for (int i = 0; i < 200000; ++i) acc = acc * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<std::int64_t>(acc & 0xff);
  };
  auto data = random_ints(9, 400);
  double sequential = elapsed_ms([&] { make_source(data) >> map(burn) >> consume(); });
  double parallel =
      elapsed_ms([&] { make_source(data) >> parallel_map(burn, 4, 8) >> consume(); });
  CHECK(parallel < 0.5 * sequential);
}
