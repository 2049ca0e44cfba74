#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <ranges>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

#include "flow/value.hpp"

namespace flow {

// ---------------------------------------------------------------------------
// Pull protocol
// ---------------------------------------------------------------------------

/// Terminal marker: the stream is exhausted.
struct End {};

/// Terminal marker: a stage failed. `stage` names the component that failed.
struct Error {
  std::string stage;
  std::string message;
  std::string describe() const { return stage + ": " + message; }
};

class PullResult {
 public:
  PullResult(Element e) : v_(std::move(e)) {}
  PullResult(End e) : v_(e) {}
  PullResult(Error e) : v_(std::move(e)) {}

  bool is_element() const { return std::holds_alternative<Element>(v_); }
  bool is_end() const { return std::holds_alternative<End>(v_); }
  bool is_error() const { return std::holds_alternative<Error>(v_); }

  Element& element() { return std::get<Element>(v_); }
  const Element& element() const { return std::get<Element>(v_); }
  const Error& error() const { return std::get<Error>(v_); }

 private:
  std::variant<Element, End, Error> v_;
};

/// What sinks throw when the stream they drive delivers an Error.
class PipelineError : public std::runtime_error {
 public:
  explicit PipelineError(Error e) : std::runtime_error(e.describe()), error_(std::move(e)) {}
  const Error& error() const { return error_; }

 private:
  Error error_;
};

// ---------------------------------------------------------------------------
// Flow: a lazy, single-consumer stream
// ---------------------------------------------------------------------------

// Elements are produced strictly on demand, one per pull. A Flow is
// move-only and dies once it reports End or Error; subsequent pulls
// return End. Rebuilding a pipeline for another pass means re-applying
// the (cheap, reusable) stage objects, not reusing the Flow.
class Flow {
 public:
  Flow() = default;  // empty: first pull returns End

  Flow(Flow&&) = default;
  Flow& operator=(Flow&&) = default;
  Flow(const Flow&) = delete;
  Flow& operator=(const Flow&) = delete;

  template <class F>
    requires std::is_invocable_r_v<PullResult, F&>
  static Flow from_pull(F fn) {
    Flow f;
    f.impl_ = std::make_unique<Puller<F>>(std::move(fn));
    return f;
  }

  PullResult pull() {
    if (!impl_) return End{};
    PullResult r = impl_->next();
    if (!r.is_element()) impl_.reset();  // latch: everything after End/Error is End
    return r;
  }

 private:
  struct Iface {
    virtual ~Iface() = default;
    virtual PullResult next() = 0;
  };
  template <class F>
  struct Puller final : Iface {
    explicit Puller(F f) : fn(std::move(f)) {}
    PullResult next() override { return fn(); }
    F fn;
  };

  std::unique_ptr<Iface> impl_;
};

// ---------------------------------------------------------------------------
// Pipeline stages
// ---------------------------------------------------------------------------

// Stages are immutable value objects: configuration is captured at
// construction and never mutated, so a stage can be applied to any number
// of flows (one epoch after another, or several pipelines at once).

/// Emits data: () -> Flow.
class Source {
 public:
  Source(std::string name, std::function<Flow()> make)
      : name_(std::move(name)), make_(std::move(make)) {}
  Flow make() const { return make_(); }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::function<Flow()> make_;
};

/// Transforms a stream: Flow -> Flow. Applying one wraps the input without
/// pulling it; nothing runs until the output is pulled.
class Processor {
 public:
  Processor(std::string name, std::function<Flow(Flow)> apply)
      : name_(std::move(name)), apply_(std::move(apply)) {}
  Flow apply(Flow in) const { return apply_(std::move(in)); }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::function<Flow(Flow)> apply_;
};

/// Consumes a stream and drives it: Flow -> R. Sinks convert stream Errors
/// into PipelineError exceptions.
template <class R>
class Sink {
 public:
  Sink(std::string name, std::function<R(Flow)> run)
      : name_(std::move(name)), run_(std::move(run)) {}
  R run(Flow in) const { return run_(std::move(in)); }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::function<R(Flow)> run_;
};

/// Applies `first`, then `second`.
Processor compose(Processor first, Processor second);

// ---------------------------------------------------------------------------
// Sources from host iterables
// ---------------------------------------------------------------------------

template <class R>
concept ElementRange =
    std::ranges::input_range<std::remove_cvref_t<R>> &&
    requires(std::ranges::range_reference_t<std::remove_cvref_t<R>> r) { flow::to_element(r); };

/// Wraps any iterable (finite or infinite) as a lazy Flow. The range is
/// decay-copied; iteration starts on the first pull.
template <ElementRange R>
Flow make_source(R&& range) {
  using Range = std::remove_cvref_t<R>;
  using It = std::ranges::iterator_t<Range>;
  struct State {
    Range range;
    std::optional<It> it;
  };
  auto st = std::make_unique<State>(State{std::forward<R>(range), std::nullopt});
  return Flow::from_pull([st = std::move(st)]() mutable -> PullResult {
    if (!st->it) st->it = std::ranges::begin(st->range);
    if (*st->it == std::ranges::end(st->range)) return End{};
    Element e = to_element(**st->it);
    ++*st->it;
    return e;
  });
}

/// Generator-backed flow: `next` yields elements until it returns nullopt.
Flow generate(std::function<std::optional<Element>()> next);

/// Flow holding exactly one element.
Flow single(Element e);

/// Reusable source over a fixed element list.
Source src(std::vector<Element> items);

// ---------------------------------------------------------------------------
// Per-element function stages (the custom-stage helper)
// ---------------------------------------------------------------------------

namespace detail {

template <class F>
struct callable_arg;
template <class R, class C, class A>
struct callable_arg<R (C::*)(A)> {
  using type = A;
};
template <class R, class C, class A>
struct callable_arg<R (C::*)(A) const> {
  using type = A;
};
template <class R, class A>
struct callable_arg<R (*)(A)> {
  using type = A;
};
template <class F>
struct callable_arg : callable_arg<decltype(&F::operator())> {};

template <class T>
Element wrap_result(T&& x) {
  return to_element(std::forward<T>(x));
}

}  // namespace detail

/// Adapts a host function over Element / Sample / Value / int64 / double /
/// string into an Element -> Element function with kind checking.
template <class F>
std::function<Element(Element)> element_fn(F f) {
  if constexpr (std::is_invocable_v<F, Element&&>) {
    return [f = std::move(f)](Element e) { return detail::wrap_result(f(std::move(e))); };
  } else {
    using Arg = std::remove_cvref_t<typename detail::callable_arg<F>::type>;
    if constexpr (std::is_same_v<Arg, Sample>) {
      return [f = std::move(f)](Element e) {
        if (!e.is_sample()) throw TypeError("expected a sample element");
        return detail::wrap_result(f(std::move(e.sample())));
      };
    } else if constexpr (std::is_same_v<Arg, Value>) {
      return [f = std::move(f)](Element e) {
        if (!e.is_value()) throw TypeError("expected a value element");
        return detail::wrap_result(f(std::move(e.value())));
      };
    } else if constexpr (std::is_same_v<Arg, std::int64_t> || std::is_same_v<Arg, int>) {
      return [f = std::move(f)](Element e) {
        if (!e.is_value()) throw TypeError("expected a value element");
        return detail::wrap_result(f(e.value().as_int()));
      };
    } else if constexpr (std::is_floating_point_v<Arg>) {
      return [f = std::move(f)](Element e) {
        if (!e.is_value()) throw TypeError("expected a value element");
        return detail::wrap_result(f(e.value().as_number()));
      };
    } else if constexpr (std::is_same_v<Arg, std::string>) {
      return [f = std::move(f)](Element e) {
        if (!e.is_value()) throw TypeError("expected a value element");
        return detail::wrap_result(f(e.value().as_text()));
      };
    } else {
      static_assert(!sizeof(F), "unsupported function argument type");
    }
  }
}

/// Same adaptation for predicates.
template <class F>
std::function<bool(Element)> element_pred(F f) {
  auto fn = element_fn(std::move(f));
  return [fn = std::move(fn)](Element e) -> bool {
    Element r = fn(std::move(e));
    if (!r.is_value()) throw TypeError("predicate must return a scalar");
    return r.value().as_number() != 0.0;
  };
}

/// Lazy per-element processor with error capture: a thrown exception from
/// `fn` becomes an Error pull result carrying `name`.
Processor per_element(std::string name, std::function<Element(Element)> fn);

/// The custom-stage helper: lifts a plain host function into a processor.
template <class F>
Processor from_fn(std::string name, F f) {
  return per_element(std::move(name), element_fn(std::move(f)));
}

// ---------------------------------------------------------------------------
// Chaining
// ---------------------------------------------------------------------------

inline Flow operator>>(Flow in, const Processor& p) { return p.apply(std::move(in)); }

template <class R>
R operator>>(Flow in, const Sink<R>& s) {
  return s.run(std::move(in));
}

inline Flow operator>>(const Source& s, const Processor& p) { return p.apply(s.make()); }

template <class R>
R operator>>(const Source& s, const Sink<R>& k) {
  return k.run(s.make());
}

template <ElementRange C>
Flow operator>>(C&& c, const Processor& p) {
  return p.apply(make_source(std::forward<C>(c)));
}

template <ElementRange C, class R>
R operator>>(C&& c, const Sink<R>& s) {
  return s.run(make_source(std::forward<C>(c)));
}

}  // namespace flow
