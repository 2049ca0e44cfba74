#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flow/core.hpp"

namespace flow {

// ---------------------------------------------------------------------------
// Generic combinators
// ---------------------------------------------------------------------------

/// Integers start, start+1, ..., end-1. start >= end gives an empty flow.
Source range_source(std::int64_t start, std::int64_t end);

/// Keeps elements where the predicate holds; order preserved.
Processor filter(std::function<bool(Element)> pred);
template <class F>
  requires(!std::is_convertible_v<F, std::function<bool(Element)>>)
Processor filter(F pred) {
  return filter(element_pred(std::move(pred)));
}

/// Applies a function to every element, lazily.
Processor map(std::function<Element(Element)> fn);
template <class F>
  requires(!std::is_convertible_v<F, std::function<Element(Element)>>)
Processor map(F fn) {
  return from_fn("map", std::move(fn));
}

/// Applies a function to one column of each sample; other columns untouched.
Processor map_col(std::size_t col, std::function<Value(Value)> fn);

/// Pairs each element with the next element of `other` into a 2-column
/// sample; stops at the shorter side.
Processor zip_with(std::vector<Element> other);

/// At most n elements, pulling the input at most n times.
Processor take(std::size_t n);

/// Groups consecutive elements into lists of length n (last may be shorter).
Processor chunk(std::size_t n);

/// Expands list elements one level; non-lists pass through.
Processor flatten();

/// Gathers a finite flow into a host vector.
Sink<std::vector<Element>> collect();

/// Pulls everything, discarding elements; returns the count consumed.
Sink<std::size_t> consume();

struct MeanStdResult {
  double mean = 0.0;
  double std = 0.0;  // population (ddof = 0)
  std::size_t count = 0;
};

/// Mean and population standard deviation of a finite numeric flow
/// (single-pass Welford accumulation).
Sink<MeanStdResult> mean_std();

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvConfig {
  char delimiter = ',';
  bool has_header = false;              // read: skip the first record
  std::vector<std::string> header;      // write: emitted first when non-empty
};

/// Streams one sample per record; every field is a Text value. RFC-4180
/// quoting: fields are quoted with '"', embedded quotes doubled, quoted
/// fields may contain delimiters and newlines. Accepts \r\n line endings.
Source read_csv(std::filesystem::path path, CsvConfig cfg = {});

/// Writes one record per sample (scalar columns only); fields are quoted
/// only when they contain the delimiter, a quote, or a newline. Lines end
/// with '\n'. Returns the number of rows written (header not counted).
Sink<std::size_t> write_csv(std::filesystem::path path, CsvConfig cfg = {});

// ---------------------------------------------------------------------------
// Logging
// ---------------------------------------------------------------------------

/// Pass-through stage appending each element to a file, one line each,
/// samples comma-joined. The file is truncated when the stage object is
/// constructed and flushed at flow end, so one stage instance accumulates
/// a whole run (e.g. every epoch of a training loop).
Processor log_to_file(std::filesystem::path path);

// ---------------------------------------------------------------------------
// Error handling
// ---------------------------------------------------------------------------

/// Handler verdict for a failed element: skip it or substitute a value.
using ErrorHandler = std::function<std::optional<Element>(const Element&, const Error&)>;

ErrorHandler skip_on_error();
ErrorHandler substitute_on_error(Element replacement);

/// Runs a per-element processor; when it fails on an element the handler
/// decides to drop that element or replace it. Other elements flow through
/// unchanged. A throwing handler fails the flow (no recursive recovery).
Processor try_catch(Processor inner, ErrorHandler handler);

// ---------------------------------------------------------------------------
// Concurrency
// ---------------------------------------------------------------------------

/// A background worker eagerly pulls the upstream into a bounded buffer of
/// `capacity`; downstream pulls drain it. Order and content are preserved
/// exactly. The worker starts on the first downstream pull, never holds
/// more than `capacity` undelivered elements, and stops when the flow ends
/// or is dropped.
Processor prefetch(std::size_t capacity);

/// Applies `fn` with up to `workers` concurrent executions and at most
/// `window` in-flight elements; output order equals input order, and a
/// failure surfaces as an in-order Error. `fn` must be pure.
Processor parallel_map(std::function<Element(Element)> fn, std::size_t workers,
                       std::size_t window);
template <class F>
  requires(!std::is_convertible_v<F, std::function<Element(Element)>>)
Processor parallel_map(F fn, std::size_t workers, std::size_t window) {
  return parallel_map(element_fn(std::move(fn)), workers, window);
}

}  // namespace flow
