#include "flow/ops.hpp"

#include <cmath>
#include <fstream>
#include <memory>

namespace flow {

Source range_source(std::int64_t start, std::int64_t end) {
  return Source("range", [start, end] {
    return Flow::from_pull([i = start, end]() mutable -> PullResult {
      if (i >= end) return End{};
      return Element(Value(i++));
    });
  });
}

Processor filter(std::function<bool(Element)> pred) {
  return Processor("filter", [pred = std::move(pred)](Flow in) {
    return Flow::from_pull([pred, in = std::move(in)]() mutable -> PullResult {
      for (;;) {
        PullResult r = in.pull();
        if (!r.is_element()) return r;
        try {
          if (pred(r.element())) return r;
        } catch (const std::exception& e) {
          return Error{"filter", e.what()};
        }
      }
    });
  });
}

Processor map(std::function<Element(Element)> fn) {
  return per_element("map", std::move(fn));
}

Processor map_col(std::size_t col, std::function<Value(Value)> fn) {
  std::string name = "map_col(" + std::to_string(col) + ")";
  return per_element(name, [col, fn = std::move(fn)](Element e) -> Element {
    if (!e.is_sample()) throw TypeError("expected a sample element");
    Sample& s = e.sample();
    s.col(col) = fn(s.col(col));  // col() checks the index
    return e;
  });
}

Processor zip_with(std::vector<Element> other) {
  auto shared = std::make_shared<const std::vector<Element>>(std::move(other));
  return Processor("zip", [shared](Flow in) {
    return Flow::from_pull([shared, in = std::move(in), i = std::size_t{0}]() mutable -> PullResult {
      if (i >= shared->size()) return End{};  // shorter side wins, input not pulled
      PullResult r = in.pull();
      if (!r.is_element()) return r;
      const Element& right = (*shared)[i++];
      try {
        if (!r.element().is_value() || !right.is_value())
          throw TypeError("zip pairs scalar values");
        return Element(Sample({r.element().value(), right.value()}));
      } catch (const std::exception& e) {
        return Error{"zip", e.what()};
      }
    });
  });
}

Processor take(std::size_t n) {
  return Processor("take", [n](Flow in) {
    return Flow::from_pull([n, taken = std::size_t{0}, in = std::move(in)]() mutable -> PullResult {
      if (taken >= n) return End{};
      PullResult r = in.pull();
      if (r.is_element()) ++taken;
      return r;
    });
  });
}

Processor chunk(std::size_t n) {
  if (n == 0) throw std::invalid_argument("chunk size must be at least 1");
  return Processor("chunk", [n](Flow in) {
    return Flow::from_pull([n, in = std::move(in)]() mutable -> PullResult {
      std::vector<Element> group;
      while (group.size() < n) {
        PullResult r = in.pull();
        if (r.is_error()) return r;  // fail fast, partial group dropped
        if (r.is_end()) break;
        group.push_back(std::move(r.element()));
      }
      if (group.empty()) return End{};
      return Element(List(std::move(group)));
    });
  });
}

Processor flatten() {
  return Processor("flatten", [](Flow in) {
    return Flow::from_pull(
        [in = std::move(in), pending = std::vector<Element>{}, next = std::size_t{0}]() mutable -> PullResult {
          for (;;) {
            if (next < pending.size()) return std::move(pending[next++]);
            PullResult r = in.pull();
            if (!r.is_element()) return r;
            if (!r.element().is_list()) return r;
            pending = r.element().list().items();
            next = 0;
          }
        });
  });
}

Sink<std::vector<Element>> collect() {
  return Sink<std::vector<Element>>("collect", [](Flow in) {
    std::vector<Element> out;
    for (;;) {
      PullResult r = in.pull();
      if (r.is_end()) return out;
      if (r.is_error()) throw PipelineError(r.error());
      out.push_back(std::move(r.element()));
    }
  });
}

Sink<std::size_t> consume() {
  return Sink<std::size_t>("consume", [](Flow in) {
    std::size_t n = 0;
    for (;;) {
      PullResult r = in.pull();
      if (r.is_end()) return n;
      if (r.is_error()) throw PipelineError(r.error());
      ++n;
    }
  });
}

Sink<MeanStdResult> mean_std() {
  return Sink<MeanStdResult>("mean_std", [](Flow in) {
    MeanStdResult acc;
    double m2 = 0.0;
    for (;;) {
      PullResult r = in.pull();
      if (r.is_error()) throw PipelineError(r.error());
      if (r.is_end()) break;
      double x;
      try {
        x = r.element().is_value() ? r.element().value().as_number()
                                   : throw TypeError("mean_std needs numeric elements");
      } catch (const std::exception& e) {
        throw PipelineError(Error{"mean_std", e.what()});
      }
      // Welford
      acc.count += 1;
      double delta = x - acc.mean;
      acc.mean += delta / static_cast<double>(acc.count);
      m2 += delta * (x - acc.mean);
    }
    if (acc.count == 0) throw PipelineError(Error{"mean_std", "empty flow"});
    acc.std = std::sqrt(m2 / static_cast<double>(acc.count));
    return acc;
  });
}

Processor log_to_file(std::filesystem::path path) {
  auto file = std::make_shared<std::ofstream>(path, std::ios::trunc);
  if (!*file) throw std::runtime_error("cannot open log file " + path.string());
  std::string name = "log_to_file(" + path.string() + ")";
  return Processor(name, [name, file](Flow in) {
    return Flow::from_pull([name, file, in = std::move(in)]() mutable -> PullResult {
      PullResult r = in.pull();
      if (r.is_element()) {
        *file << r.element().render() << '\n';
        if (!*file) return Error{name, "write failed"};
      } else if (r.is_end()) {
        file->flush();
      }
      return r;
    });
  });
}

ErrorHandler skip_on_error() {
  return [](const Element&, const Error&) { return std::nullopt; };
}

ErrorHandler substitute_on_error(Element replacement) {
  return [replacement = std::move(replacement)](const Element&, const Error&) {
    return replacement;
  };
}

Processor try_catch(Processor inner, ErrorHandler handler) {
  std::string name = "try_catch(" + inner.name() + ")";
  return Processor(name, [name, inner = std::move(inner), handler = std::move(handler)](Flow in) {
    return Flow::from_pull([name, inner, handler, in = std::move(in)]() mutable -> PullResult {
      for (;;) {
        PullResult r = in.pull();
        if (!r.is_element()) return r;
        Element original = r.element();
        // Run the per-element stage on just this element.
        Flow one = inner.apply(single(std::move(r.element())));
        PullResult out = one.pull();
        if (out.is_element()) return out;
        if (out.is_end()) continue;  // inner dropped it
        std::optional<Element> fixed;
        try {
          fixed = handler(original, out.error());
        } catch (const std::exception& e) {
          return Error{name, std::string("handler failed: ") + e.what()};
        }
        if (fixed) return std::move(*fixed);
        // skip: fall through to the next upstream element
      }
    });
  });
}

}  // namespace flow
