#include "flow/core.hpp"

namespace flow {

Processor compose(Processor first, Processor second) {
  std::string name = first.name() + "|" + second.name();
  return Processor(std::move(name),
                   [first = std::move(first), second = std::move(second)](Flow in) {
                     return second.apply(first.apply(std::move(in)));
                   });
}

Flow generate(std::function<std::optional<Element>()> next) {
  return Flow::from_pull([next = std::move(next)]() -> PullResult {
    if (auto e = next()) return std::move(*e);
    return End{};
  });
}

Flow single(Element e) {
  return Flow::from_pull([e = std::move(e), done = false]() mutable -> PullResult {
    if (done) return End{};
    done = true;
    return e;
  });
}

Source src(std::vector<Element> items) {
  auto shared = std::make_shared<const std::vector<Element>>(std::move(items));
  return Source("items", [shared] {
    return Flow::from_pull([shared, i = std::size_t{0}]() mutable -> PullResult {
      if (i >= shared->size()) return End{};
      return (*shared)[i++];
    });
  });
}

Processor per_element(std::string name, std::function<Element(Element)> fn) {
  return Processor(name, [name, fn = std::move(fn)](Flow in) {
    return Flow::from_pull([name, fn, in = std::move(in)]() mutable -> PullResult {
      PullResult r = in.pull();
      if (!r.is_element()) return r;
      try {
        return fn(std::move(r.element()));
      } catch (const std::exception& e) {
        return Error{name, e.what()};
      }
    });
  });
}

}  // namespace flow
