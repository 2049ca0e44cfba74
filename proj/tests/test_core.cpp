#include <doctest.h>

#include <atomic>
#include <stdexcept>
#include <vector>

#include "flow/core.hpp"
#include "flow/ops.hpp"
#include "support.hpp"

using namespace flow;
using testsupport::as_ints;
using testsupport::counting_source;

namespace {

Processor multiply_by(std::int64_t factor) {
  return from_fn("multiply_by", [factor](std::int64_t x) { return x * factor; });
}

// Chainability is a compile-time property: flows chain into processors and
// sinks, never into sources or other flows.
template <class L, class R>
concept Chains = requires(L l, const R& r) { std::move(l) >> r; };

static_assert(Chains<Flow, Processor>);
static_assert(Chains<Flow, Sink<std::vector<Element>>>);
static_assert(Chains<Source, Processor>);
static_assert(Chains<std::vector<std::int64_t>, Processor>);
static_assert(!Chains<Flow, Source>);
static_assert(!Chains<Flow, Flow>);
static_assert(!Chains<Source, Source>);

}  // namespace

TEST_CASE("pull protocol: elements, End, idempotent End") {
  Flow f = single(Value(std::int64_t{7}));
  PullResult r = f.pull();
  REQUIRE(r.is_element());
  CHECK(r.element().value().as_int() == 7);
  CHECK(f.pull().is_end());
  CHECK(f.pull().is_end());
}

TEST_CASE("a flow latches after End even if its pull function would revive") {
  int calls = 0;
  Flow f = Flow::from_pull([&calls]() -> PullResult {
    ++calls;
    if (calls == 2) return End{};
    return Element(Value(std::int64_t{1}));  // would yield again on call 3
  });
  CHECK(f.pull().is_element());
  CHECK(f.pull().is_end());
  CHECK(f.pull().is_end());
  CHECK(calls == 2);  // the latch never re-invokes the pull function
}

TEST_CASE("a flow latches after Error") {
  Flow f = Flow::from_pull([]() -> PullResult { return Error{"stage", "boom"}; });
  PullResult r = f.pull();
  REQUIRE(r.is_error());
  CHECK(r.error().stage == "stage");
  CHECK(r.error().message == "boom");
  CHECK(f.pull().is_end());
}

TEST_CASE("make_source yields in order, lazily") {
  auto pulls = std::make_shared<std::atomic<std::int64_t>>(0);
  Flow f = counting_source(10, pulls).make();
  CHECK(*pulls == 0);  // nothing runs before the first pull
  CHECK(f.pull().element().value().as_int() == 0);
  CHECK(f.pull().element().value().as_int() == 1);
  CHECK(f.pull().element().value().as_int() == 2);
  CHECK(*pulls == 3);
}

TEST_CASE("make_source on an empty container ends immediately") {
  Flow f = make_source(std::vector<std::int64_t>{});
  CHECK(f.pull().is_end());
}

TEST_CASE("an infinite source is fine as long as the consumer bounds it") {
  auto evens = generate([n = std::int64_t{0}]() mutable -> std::optional<Element> {
    Element e{Value(n)};
    n += 2;
    return e;
  });
  auto out = std::move(evens) >> take(3) >> collect();
  CHECK(as_ints(out) == std::vector<std::int64_t>{0, 2, 4});
}

TEST_CASE("host scalars coerce to the right value kinds") {
  auto out = make_source(std::vector<int>{1, 2}) >> collect();
  CHECK(out[0].value().kind() == ValueKind::Int);
  auto fout = make_source(std::vector<double>{0.5}) >> collect();
  CHECK(fout[0].value().kind() == ValueKind::Float);
  auto tout = make_source(std::vector<std::string>{"hi"}) >> collect();
  CHECK(tout[0].value().kind() == ValueKind::Text);
  CHECK(tout[0].value().as_text() == "hi");
}

TEST_CASE("custom function stages: multiply_by") {
  auto out = std::vector<std::int64_t>{1, 2, 3} >> multiply_by(2) >> collect();
  CHECK(as_ints(out) == std::vector<std::int64_t>{2, 4, 6});
}

TEST_CASE("custom function stages compose: x+1 twice on [0] gives [2]") {
  Processor inc = from_fn("inc", [](std::int64_t x) { return x + 1; });
  auto out = std::vector<std::int64_t>{0} >> inc >> inc >> collect();
  CHECK(as_ints(out) == std::vector<std::int64_t>{2});
}

TEST_CASE("identity function stage leaves a flow unchanged") {
  Processor ident = from_fn("ident", [](Element e) { return e; });
  auto out = std::vector<std::int64_t>{3, 1, 4, 1, 5} >> ident >> collect();
  CHECK(as_ints(out) == std::vector<std::int64_t>{3, 1, 4, 1, 5});
}

TEST_CASE("function stages adapt to sample, value, and text arguments") {
  Processor first_col = from_fn("first_col", [](Sample s) { return s.col(0); });
  auto out = std::vector<Sample>{row(7, "x")} >> first_col >> collect();
  CHECK(as_ints(out) == std::vector<std::int64_t>{7});

  Processor upper = from_fn("upper", [](std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
  });
  auto tout = std::vector<std::string>{"ab"} >> upper >> collect();
  CHECK(tout[0].value().as_text() == "AB");

  Processor halve = from_fn("halve", [](double x) { return x / 2; });
  auto dout = std::vector<double>{3.0} >> halve >> collect();
  CHECK(dout[0].value().as_number() == 1.5);
}

TEST_CASE("a kind mismatch inside a function stage becomes an Error pull") {
  Processor wants_sample = from_fn("wants_sample", [](Sample s) { return s; });
  Flow f = make_source(std::vector<std::int64_t>{1}) >> wants_sample;
  PullResult r = f.pull();
  REQUIRE(r.is_error());
  CHECK(r.error().stage == "wants_sample");
}

TEST_CASE("a throwing function stage yields Error and the sink raises it") {
  Processor divide = from_fn("divide", [](double x) {
    if (x == 0) throw std::domain_error("division by zero");
    return 1.0 / x;
  });
  Flow f = make_source(std::vector<double>{1.0, 0.0, 2.0}) >> divide;
  CHECK(f.pull().element().value().as_number() == 1.0);
  PullResult r = f.pull();
  REQUIRE(r.is_error());
  CHECK(r.error().stage == "divide");
  CHECK(r.error().message == "division by zero");
  CHECK(f.pull().is_end());

  CHECK_THROWS_AS(
      (make_source(std::vector<double>{0.0}) >> divide >> collect()), PipelineError);
}

TEST_CASE("laziness: take(k) pulls the source exactly k times") {
  auto pulls = std::make_shared<std::atomic<std::int64_t>>(0);
  auto out = counting_source(100, pulls) >> map([](std::int64_t x) { return x * 3; }) >>
             take(7) >> collect();
  CHECK(out.size() == 7);
  CHECK(*pulls == 7);
}

TEST_CASE("take(0) pulls nothing at all") {
  auto pulls = std::make_shared<std::atomic<std::int64_t>>(0);
  auto out = counting_source(3, pulls) >> take(0) >> collect();
  CHECK(out.empty());
  CHECK(*pulls == 0);
}

TEST_CASE("processors apply without pulling until the output is pulled") {
  auto pulls = std::make_shared<std::atomic<std::int64_t>>(0);
  Flow f = counting_source(5, pulls) >> map([](std::int64_t x) { return x + 1; }) >>
           filter([](std::int64_t x) { return x > 0; });
  CHECK(*pulls == 0);
  (void)f.pull();
  CHECK(*pulls == 1);
}

TEST_CASE("chaining is left-associative: stepwise equals composed") {
  Processor p1 = map([](std::int64_t x) { return x + 10; });
  Processor p2 = filter([](std::int64_t x) { return x % 2 == 0; });
  Processor p3 = map([](std::int64_t x) { return x * x; });

  std::vector<std::int64_t> input{1, 2, 3, 4, 5, 6, 7};
  auto stepwise = make_source(input) >> p1 >> p2 >> p3 >> collect();
  auto composed = make_source(input) >> compose(compose(p1, p2), p3) >> collect();
  auto right_grouped = make_source(input) >> compose(p1, compose(p2, p3)) >> collect();
  CHECK(stepwise == composed);
  CHECK(stepwise == right_grouped);
}

TEST_CASE("stage objects are reusable across flows and epochs") {
  Processor doubler = multiply_by(2);
  Source numbers = src(testsupport::ints({1, 2, 3}));
  for (int epoch = 0; epoch < 3; ++epoch) {
    auto out = numbers >> doubler >> collect();
    CHECK(as_ints(out) == std::vector<std::int64_t>{2, 4, 6});
  }
}

TEST_CASE("single-pass: each source element appears at most once downstream") {
  auto pulls = std::make_shared<std::atomic<std::int64_t>>(0);
  auto out = counting_source(20, pulls) >> filter([](std::int64_t x) { return x % 3 == 0; }) >>
             collect();
  CHECK(as_ints(out) == std::vector<std::int64_t>{0, 3, 6, 9, 12, 15, 18});
  CHECK(*pulls == 21);  // 20 elements + the End discovery
}

TEST_CASE("samples enforce at least one column and bounds-checked access") {
  CHECK_THROWS_AS(Sample(std::vector<Value>{}), std::invalid_argument);
  Sample s = row(1, "a");
  CHECK(s.size() == 2);
  CHECK_THROWS_AS(s.col(2), std::out_of_range);
}

TEST_CASE("value accessors raise TypeError on kind mismatch") {
  Value v(std::int64_t{3});
  CHECK(v.as_int() == 3);
  CHECK(v.as_number() == 3.0);
  CHECK_THROWS_AS(v.as_text(), TypeError);
  CHECK_THROWS_AS(v.as_array(), TypeError);
  Value t("hello");
  CHECK_THROWS_AS(t.as_number(), TypeError);
}

TEST_CASE("scalar rendering uses shortest round-trip float form") {
  CHECK(render_double(0.5) == "0.5");
  CHECK(render_double(1.0) == "1");
  CHECK(render_double(0.1) == "0.1");
  CHECK(Value(std::int64_t{42}).render() == "42");
  CHECK(row("a", 1).render() == "a,1");
}

TEST_CASE("PipelineError carries the failing stage") {
  Processor boom = from_fn("boom", [](std::int64_t) -> std::int64_t {
    throw std::runtime_error("nope");
  });
  try {
    make_source(std::vector<std::int64_t>{1}) >> boom >> consume();
    FAIL("expected PipelineError");
  } catch (const PipelineError& e) {
    CHECK(e.error().stage == "boom");
    CHECK(e.error().message == "nope");
  }
}
