#include <fstream>
#include <memory>

#include "flow/ops.hpp"

namespace flow {

namespace {

constexpr char kQuote = '"';

struct CsvReadState {
  std::filesystem::path path;
  CsvConfig cfg;
  std::ifstream file;
  bool opened = false;
  bool header_skipped = false;
  std::size_t line = 1;
};

struct RecordResult {
  std::vector<std::string> fields;
  bool at_end = false;
  std::string error;  // non-empty on malformed input
};

// Reads one record. Quoted fields may span lines; "" is a literal quote.
RecordResult read_record(CsvReadState& st) {
  RecordResult out;
  std::istream& in = st.file;
  if (in.peek() == EOF) {
    out.at_end = true;
    return out;
  }
  std::string field;
  bool quoted = false;
  for (;;) {
    int ci = in.get();
    if (ci == EOF) {
      if (quoted) {
        out.error = "line " + std::to_string(st.line) + ": unterminated quoted field";
        return out;
      }
      out.fields.push_back(std::move(field));
      return out;
    }
    char c = static_cast<char>(ci);
    if (quoted) {
      if (c == kQuote) {
        if (in.peek() == kQuote) {
          in.get();
          field += kQuote;
          continue;
        }
        quoted = false;
        // Only a delimiter, a record end, or EOF may follow.
        int next = in.peek();
        if (next != EOF && next != st.cfg.delimiter && next != '\n' && next != '\r') {
          out.error = "line " + std::to_string(st.line) + ": text after closing quote";
          return out;
        }
        continue;
      }
      if (c == '\n') ++st.line;
      field += c;
      continue;
    }
    if (c == kQuote) {
      if (!field.empty()) {
        out.error = "line " + std::to_string(st.line) + ": quote inside unquoted field";
        return out;
      }
      quoted = true;
      continue;
    }
    if (c == st.cfg.delimiter) {
      out.fields.push_back(std::move(field));
      field.clear();
      continue;
    }
    if (c == '\r' && in.peek() == '\n') {
      in.get();
      ++st.line;
      out.fields.push_back(std::move(field));
      return out;
    }
    if (c == '\n') {
      ++st.line;
      out.fields.push_back(std::move(field));
      return out;
    }
    field += c;
  }
}

PullResult pull_record(CsvReadState& st) {
  const std::string stage = "read_csv(" + st.path.string() + ")";
  if (!st.opened) {
    st.file.open(st.path, std::ios::binary);
    st.opened = true;
    if (!st.file) return Error{stage, "cannot open " + st.path.string()};
  }
  if (st.cfg.has_header && !st.header_skipped) {
    st.header_skipped = true;
    RecordResult header = read_record(st);
    if (!header.error.empty()) return Error{stage, header.error};
    if (header.at_end) return End{};
  }
  RecordResult rec = read_record(st);
  if (!rec.error.empty()) return Error{stage, rec.error};
  if (rec.at_end) return End{};
  std::vector<Value> cols;
  cols.reserve(rec.fields.size());
  for (auto& f : rec.fields) cols.emplace_back(std::move(f));
  return Element(Sample(std::move(cols)));
}

bool needs_quoting(const std::string& field, char delimiter) {
  for (char c : field)
    if (c == delimiter || c == kQuote || c == '\n' || c == '\r') return true;
  return false;
}

std::string quote_field(const std::string& field, char delimiter) {
  if (!needs_quoting(field, delimiter)) return field;
  std::string out;
  out.reserve(field.size() + 2);
  out += kQuote;
  for (char c : field) {
    if (c == kQuote) out += kQuote;
    out += c;
  }
  out += kQuote;
  return out;
}

std::string scalar_field(const Value& v) {
  if (v.kind() == ValueKind::Array || v.kind() == ValueKind::Image)
    throw TypeError("CSV fields must be scalar, got " + kind_name(v.kind()));
  return v.render();
}

}  // namespace

Source read_csv(std::filesystem::path path, CsvConfig cfg) {
  if (cfg.delimiter == kQuote) throw std::invalid_argument("delimiter may not be the quote character");
  return Source("read_csv", [path = std::move(path), cfg = std::move(cfg)] {
    auto st = std::make_shared<CsvReadState>();
    st->path = path;
    st->cfg = cfg;
    return Flow::from_pull([st]() { return pull_record(*st); });
  });
}

Sink<std::size_t> write_csv(std::filesystem::path path, CsvConfig cfg) {
  if (cfg.delimiter == kQuote) throw std::invalid_argument("delimiter may not be the quote character");
  const std::string stage = "write_csv(" + path.string() + ")";
  return Sink<std::size_t>(
      "write_csv", [stage, path = std::move(path), cfg = std::move(cfg)](Flow in) -> std::size_t {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw PipelineError(Error{stage, "cannot open " + path.string()});
        if (!cfg.header.empty()) {
          for (std::size_t i = 0; i < cfg.header.size(); ++i) {
            if (i) out << cfg.delimiter;
            out << quote_field(cfg.header[i], cfg.delimiter);
          }
          out << '\n';
        }
        std::size_t rows = 0;
        for (;;) {
          PullResult r = in.pull();
          if (r.is_error()) throw PipelineError(r.error());
          if (r.is_end()) break;
          try {
            const Element& e = r.element();
            if (e.is_sample()) {
              const auto& cols = e.sample().columns();
              for (std::size_t i = 0; i < cols.size(); ++i) {
                if (i) out << cfg.delimiter;
                out << quote_field(scalar_field(cols[i]), cfg.delimiter);
              }
            } else if (e.is_value()) {
              out << quote_field(scalar_field(e.value()), cfg.delimiter);
            } else {
              throw TypeError("CSV rows must be samples or scalars");
            }
          } catch (const PipelineError&) {
            throw;
          } catch (const std::exception& ex) {
            throw PipelineError(Error{stage, ex.what()});
          }
          out << '\n';
          ++rows;
          if (!out) throw PipelineError(Error{stage, "write failed"});
        }
        out.flush();
        if (!out) throw PipelineError(Error{stage, "write failed"});
        return rows;
      });
}

}  // namespace flow
