#pragma once

// Random pipelines of map/filter/take/chunk checked against an eager
// list evaluator that shares no code with the flow implementation.

#include <cstdint>
#include <string>
#include <vector>

#include "flow/ops.hpp"
#include "flow/rng.hpp"

namespace oracle {

// Eager counterpart of what a pipeline can carry: integers, or nested
// groups once a chunk stage has run.
struct Node {
  std::int64_t value = 0;
  bool is_list = false;
  std::vector<Node> children;

  bool operator==(const Node& other) const {
    if (is_list != other.is_list) return false;
    return is_list ? children == other.children : value == other.value;
  }
};

struct Step {
  enum class Kind { Map, Filter, Take, Chunk } kind;
  std::int64_t a = 0, b = 0;  // map: x -> a*x + b
  std::int64_t m = 1, r = 0;  // filter: keep x with x mod m == r
  std::size_t n = 0;          // take / chunk
};

struct Pipeline {
  std::vector<std::int64_t> input;
  std::vector<Step> steps;
};

inline Pipeline random_pipeline(std::uint64_t seed) {
  flow::Rng rng(seed);
  Pipeline p;
  p.input.resize(rng.below(101));
  for (auto& x : p.input) x = rng.range(-100, 100);

  std::size_t length = 1 + rng.below(6);
  std::size_t depth = 0;  // chunks so far; scalar ops are depth-0 only
  for (std::size_t i = 0; i < length; ++i) {
    Step s;
    switch (depth == 0 ? rng.below(4) : 2 + rng.below(2)) {
      case 0:
        s.kind = Step::Kind::Map;
        s.a = rng.range(-3, 3);
        s.b = rng.range(-10, 10);
        break;
      case 1:
        s.kind = Step::Kind::Filter;
        s.m = rng.range(1, 5);
        s.r = rng.range(0, s.m - 1);
        break;
      case 2:
        s.kind = Step::Kind::Take;
        s.n = rng.below(p.input.size() + 5);
        break;
      default:
        s.kind = Step::Kind::Chunk;
        s.n = 1 + rng.below(7);
        depth += 1;
        break;
    }
    p.steps.push_back(s);
  }
  return p;
}

inline std::vector<Node> eager_eval(const Pipeline& p) {
  std::vector<Node> nodes;
  nodes.reserve(p.input.size());
  for (std::int64_t x : p.input) nodes.push_back(Node{x, false, {}});
  for (const Step& s : p.steps) {
    switch (s.kind) {
      case Step::Kind::Map:
        for (Node& n : nodes) n.value = s.a * n.value + s.b;
        break;
      case Step::Kind::Filter: {
        std::vector<Node> kept;
        for (const Node& n : nodes) {
          std::int64_t mod = n.value % s.m;
          if (mod < 0) mod += s.m;
          if (mod == s.r) kept.push_back(n);
        }
        nodes = std::move(kept);
        break;
      }
      case Step::Kind::Take:
        if (nodes.size() > s.n) nodes.resize(s.n);
        break;
      case Step::Kind::Chunk: {
        std::vector<Node> grouped;
        for (std::size_t i = 0; i < nodes.size(); i += s.n) {
          Node group{0, true, {}};
          for (std::size_t j = i; j < std::min(nodes.size(), i + s.n); ++j)
            group.children.push_back(nodes[j]);
          grouped.push_back(std::move(group));
        }
        nodes = std::move(grouped);
        break;
      }
    }
  }
  return nodes;
}

inline flow::Flow lazy_eval(const Pipeline& p) {
  flow::Flow f = flow::make_source(p.input);
  for (const Step& s : p.steps) {
    switch (s.kind) {
      case Step::Kind::Map:
        f = std::move(f) >> flow::map([a = s.a, b = s.b](std::int64_t x) { return a * x + b; });
        break;
      case Step::Kind::Filter:
        f = std::move(f) >> flow::filter([m = s.m, r = s.r](std::int64_t x) {
              std::int64_t mod = x % m;
              if (mod < 0) mod += m;
              return mod == r;
            });
        break;
      case Step::Kind::Take:
        f = std::move(f) >> flow::take(s.n);
        break;
      case Step::Kind::Chunk:
        f = std::move(f) >> flow::chunk(s.n);
        break;
    }
  }
  return f;
}

inline Node to_node(const flow::Element& e) {
  Node n;
  if (e.is_list()) {
    n.is_list = true;
    for (const flow::Element& child : e.list().items()) n.children.push_back(to_node(child));
  } else {
    n.value = e.value().as_int();
  }
  return n;
}

// Runs one seeded pipeline both ways; true when they agree exactly.
inline bool pipelines_agree(std::uint64_t seed) {
  Pipeline p = random_pipeline(seed);
  std::vector<Node> expected = eager_eval(p);
  std::vector<flow::Element> got = lazy_eval(p) >> flow::collect();
  if (got.size() != expected.size()) return false;
  for (std::size_t i = 0; i < got.size(); ++i)
    if (!(to_node(got[i]) == expected[i])) return false;
  return true;
}

}  // namespace oracle
