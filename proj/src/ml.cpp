#include "flow/ml.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "flow/ops.hpp"
#include "flow/rng.hpp"

namespace flow::ml {

// ---------------------------------------------------------------------------
// Sample reading
// ---------------------------------------------------------------------------

Source read_samples(std::filesystem::path path, bool has_header) {
  CsvConfig cfg;
  cfg.has_header = has_header;
  Source csv = read_csv(std::move(path), cfg);
  Processor check = per_element("read_samples", [](Element e) -> Element {
    if (!e.is_sample() || e.sample().size() != 2)
      throw TypeError("expected 2-column records (filepath,label)");
    return e;
  });
  return Source("read_samples", [csv = std::move(csv), check = std::move(check)]() {
    return check.apply(csv.make());
  });
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

namespace {

// Largest-remainder apportionment of n into parts proportional to ratios.
// Ties on the fractional part go to earlier parts.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& ratios) {
  const double total = std::accumulate(ratios.begin(), ratios.end(), 0.0);
  std::vector<std::size_t> sizes(ratios.size());
  std::vector<double> fracs(ratios.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    double quota = static_cast<double>(n) * ratios[i] / total;
    sizes[i] = static_cast<std::size_t>(std::floor(quota));
    fracs[i] = quota - std::floor(quota);
    assigned += sizes[i];
  }
  std::vector<std::size_t> order(ratios.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fracs[a] > fracs[b]; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) sizes[order[i]] += 1;
  return sizes;
}

void check_ratios(const RatioSpec& spec) {
  if (spec.ratios.size() < 2) throw std::invalid_argument("need at least 2 split ratios");
  for (double r : spec.ratios)
    if (!(r > 0.0) || !std::isfinite(r))
      throw std::invalid_argument("split ratios must be positive finite numbers");
}

std::vector<Sample> drain_samples(Flow& in, const char* stage, PullResult* failure) {
  std::vector<Sample> samples;
  for (;;) {
    PullResult r = in.pull();
    if (r.is_end()) break;
    if (r.is_error()) {
      *failure = std::move(r);
      return samples;
    }
    if (!r.element().is_sample()) {
      *failure = Error{stage, "expected sample elements"};
      return samples;
    }
    samples.push_back(std::move(r.element().sample()));
  }
  return samples;
}

}  // namespace

std::vector<std::vector<Sample>> split_random(std::vector<Sample> samples,
                                              const RatioSpec& spec) {
  check_ratios(spec);
  Rng rng(spec.seed);
  rng.shuffle(samples);
  std::vector<std::size_t> sizes = apportion(samples.size(), spec.ratios);
  std::vector<std::vector<Sample>> folds(sizes.size());
  std::size_t at = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    folds[i].assign(std::make_move_iterator(samples.begin() + static_cast<std::ptrdiff_t>(at)),
                    std::make_move_iterator(samples.begin() + static_cast<std::ptrdiff_t>(at + sizes[i])));
    at += sizes[i];
  }
  return folds;
}

Sink<std::vector<std::vector<Sample>>> split_random(const RatioSpec& spec) {
  check_ratios(spec);
  return Sink<std::vector<std::vector<Sample>>>(
      "split_random", [spec](Flow in) -> std::vector<std::vector<Sample>> {
        PullResult failure = End{};
        std::vector<Sample> samples = drain_samples(in, "split_random", &failure);
        if (failure.is_error()) throw PipelineError(failure.error());
        return split_random(std::move(samples), spec);
      });
}

// ---------------------------------------------------------------------------
// Stratification
// ---------------------------------------------------------------------------

std::vector<Sample> stratify(const std::vector<Sample>& samples, std::size_t labelcol,
                             StratifyMode mode, std::uint64_t seed) {
  if (samples.empty()) return {};
  // Classes keyed by the rendered label; iteration over the map is in
  // sorted key order, which pins the draw sequence for a given seed.
  std::map<std::string, std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < samples.size(); ++i)
    classes[samples[i].col(labelcol).render()].push_back(i);

  std::size_t target = classes.begin()->second.size();
  for (const auto& [key, members] : classes)
    target = mode == StratifyMode::Up ? std::max(target, members.size())
                                      : std::min(target, members.size());

  Rng rng(seed);
  std::vector<Sample> out;
  for (const auto& [key, members] : classes) {
    if (mode == StratifyMode::Up) {
      for (std::size_t i : members) out.push_back(samples[i]);
      for (std::size_t n = members.size(); n < target; ++n)
        out.push_back(samples[members[rng.below(members.size())]]);
    } else {
      std::vector<std::size_t> picks = members;
      rng.shuffle(picks);
      picks.resize(target);
      for (std::size_t i : picks) out.push_back(samples[i]);
    }
  }
  rng.shuffle(out);
  return out;
}

Processor stratify(std::size_t labelcol, StratifyMode mode, std::uint64_t seed) {
  return Processor("stratify", [labelcol, mode, seed](Flow in) {
    struct State {
      Flow in;
      std::vector<Sample> out;
      std::size_t i = 0;
      bool ready = false;
    };
    auto st = std::make_shared<State>();
    st->in = std::move(in);
    return Flow::from_pull([labelcol, mode, seed, st]() -> PullResult {
      if (!st->ready) {
        PullResult failure = End{};
        std::vector<Sample> samples = drain_samples(st->in, "stratify", &failure);
        if (failure.is_error()) return failure;
        try {
          st->out = stratify(samples, labelcol, mode, seed);
        } catch (const std::exception& e) {
          return Error{"stratify", e.what()};
        }
        st->ready = true;
      }
      if (st->i >= st->out.size()) return End{};
      return Element(st->out[st->i++]);
    });
  });
}

std::map<std::string, std::int64_t> label_index(const std::vector<Sample>& samples,
                                                std::size_t labelcol) {
  std::map<std::string, std::int64_t> index;
  for (const Sample& s : samples) index.emplace(s.col(labelcol).as_text(), 0);
  std::int64_t next = 0;
  for (auto& [label, idx] : index) idx = next++;
  return index;
}

// ---------------------------------------------------------------------------
// Image pipeline stages
// ---------------------------------------------------------------------------

Processor read_image(std::vector<std::size_t> columns, std::string path_template) {
  if (path_template.find('*') == std::string::npos)
    throw std::invalid_argument("path template needs a '*' placeholder: " + path_template);
  return per_element("read_image", [columns, path_template](Element e) -> Element {
    if (columns.empty()) return e;
    Sample& s = e.sample();
    for (std::size_t c : columns) {
      std::string path = path_template;
      path.replace(path.find('*'), 1, s.col(c).as_text());
      s.col(c) = Value(std::make_shared<const img::Image>(img::read_image_file(path)));
    }
    return e;
  });
}

Processor transform_image(std::vector<std::size_t> imagecols,
                          std::vector<img::TransformSpec> specs,
                          img::TransformRegistry registry) {
  for (const auto& spec : specs)
    if (!registry.has(spec.name))
      throw std::invalid_argument("unknown transform '" + spec.name + "'");
  return per_element("transform_image",
                     [imagecols, specs, registry](Element e) -> Element {
                       if (imagecols.empty() || specs.empty()) return e;
                       Sample& s = e.sample();
                       for (std::size_t c : imagecols) {
                         img::Image cur = *s.col(c).as_image();
                         for (const auto& spec : specs) cur = registry.apply(spec, cur);
                         s.col(c) = Value(std::make_shared<const img::Image>(std::move(cur)));
                       }
                       return e;
                     });
}

Processor augment_image(std::vector<std::size_t> imagecols,
                        std::vector<img::AugmentSpec> specs, std::uint64_t seed,
                        img::TransformRegistry registry) {
  for (const auto& spec : specs) {
    if (!registry.has(spec.name))
      throw std::invalid_argument("unknown transform '" + spec.name + "'");
    if (spec.probability < 0.0 || spec.probability > 1.0)
      throw std::invalid_argument("augmentation probability must be in [0,1]");
  }
  return Processor("augment_image", [imagecols, specs, seed, registry](Flow in) {
    auto ordinal = std::make_shared<std::uint64_t>(0);
    return Flow::from_pull(
        [imagecols, specs, seed, registry, ordinal, in = std::move(in)]() mutable -> PullResult {
          PullResult r = in.pull();
          if (!r.is_element()) return r;
          const std::uint64_t ord = (*ordinal)++;
          if (imagecols.empty() || specs.empty()) return std::move(r.element());
          try {
            Element e = std::move(r.element());
            Sample& s = e.sample();
            std::vector<img::Image> images;
            images.reserve(imagecols.size());
            for (std::size_t c : imagecols) images.push_back(*s.col(c).as_image());
            Rng rng(mix_seed(seed, ord));
            images = registry.apply_augmentation(specs, std::move(images), rng);
            for (std::size_t i = 0; i < imagecols.size(); ++i)
              s.col(imagecols[i]) =
                  Value(std::make_shared<const img::Image>(std::move(images[i])));
            return e;
          } catch (const std::exception& e) {
            return Error{"augment_image", e.what()};
          }
        });
  });
}

// ---------------------------------------------------------------------------
// Batching
// ---------------------------------------------------------------------------

NDArray one_hot(std::int64_t label, std::int64_t classes, Dtype dtype) {
  if (classes < 1) throw std::invalid_argument("one_hot needs at least 1 class");
  if (label < 0 || label >= classes)
    throw std::out_of_range("label " + std::to_string(label) + " out of range for " +
                            std::to_string(classes) + " classes");
  NDArray a = NDArray::zeros(dtype, {static_cast<std::size_t>(classes)});
  const auto at = static_cast<std::size_t>(label);
  switch (dtype) {
    case Dtype::U8: a.u8_mut()[at] = 1; break;
    case Dtype::I64: a.i64_mut()[at] = 1; break;
    case Dtype::F64: a.f64_mut()[at] = 1.0; break;
  }
  return a;
}

std::size_t Batch::rows() const {
  return columns.empty() ? 0 : columns.front().shape().front();
}

Batch Batch::from_sample(const Sample& s) {
  Batch b;
  b.columns.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const NDArray& a = s.col(i).as_array();
    if (a.rank() == 0) throw TypeError("batch columns must have a leading dimension");
    if (i > 0 && a.shape().front() != b.columns.front().shape().front())
      throw TypeError("batch columns disagree on leading dimension");
    b.columns.push_back(a);
  }
  return b;
}

Sample Batch::to_sample() const {
  std::vector<Value> cols;
  cols.reserve(columns.size());
  for (const NDArray& a : columns) cols.emplace_back(a);
  return Sample(std::move(cols));
}

BatchSpec::BatchSpec(std::size_t batchsize) : batchsize_(batchsize) {
  if (batchsize == 0) throw std::invalid_argument("batch size must be at least 1");
}

namespace {

void check_distinct(const std::vector<BatchSpec::Column>& columns, std::size_t col) {
  for (const auto& c : columns)
    if (c.col == col)
      throw std::invalid_argument("column " + std::to_string(col) + " already in batch spec");
}

}  // namespace

BatchSpec& BatchSpec::image(std::size_t col, Dtype dtype, bool channel_first) {
  check_distinct(columns_, col);
  columns_.push_back({col, Kind::Image, dtype, channel_first, 0});
  return *this;
}

BatchSpec& BatchSpec::number(std::size_t col, Dtype dtype) {
  check_distinct(columns_, col);
  columns_.push_back({col, Kind::Number, dtype, false, 0});
  return *this;
}

BatchSpec& BatchSpec::one_hot(std::size_t col, Dtype dtype, std::int64_t classes) {
  check_distinct(columns_, col);
  if (classes < 2) throw std::invalid_argument("one_hot batch column needs at least 2 classes");
  columns_.push_back({col, Kind::OneHot, dtype, false, classes});
  return *this;
}

namespace {

std::string shape_text(const img::Image& im) {
  return std::to_string(im.height()) + "x" + std::to_string(im.width()) + "x" +
         std::to_string(im.channels());
}

NDArray stack_images(const std::vector<Sample>& rows, const BatchSpec::Column& col) {
  const std::size_t n = rows.size();
  const img::Image& first = *rows[0].col(col.col).as_image();
  const std::size_t h = first.height(), w = first.width(), ch = first.channels();
  for (const Sample& s : rows) {
    const img::Image& im = *s.col(col.col).as_image();
    if (im.height() != h || im.width() != w || im.channels() != ch)
      throw TypeError("column " + std::to_string(col.col) + ": image shapes differ (" +
                      shape_text(first) + " vs " + shape_text(im) + ")");
  }
  std::vector<std::size_t> shape =
      col.channel_first ? std::vector<std::size_t>{n, ch, h, w}
                        : std::vector<std::size_t>{n, h, w, ch};
  NDArray out = NDArray::zeros(col.dtype, shape);
  std::size_t at = 0;
  auto put = [&](std::uint8_t px) {
    switch (col.dtype) {
      case Dtype::U8: out.u8_mut()[at] = px; break;
      case Dtype::I64: out.i64_mut()[at] = px; break;
      case Dtype::F64: out.f64_mut()[at] = px; break;
    }
    ++at;
  };
  for (const Sample& s : rows) {
    const img::Image& im = *s.col(col.col).as_image();
    if (col.channel_first) {
      for (std::size_t c = 0; c < ch; ++c)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x) put(im.at(y, x, c));
    } else {
      for (std::uint8_t px : im.pixels()) put(px);
    }
  }
  return out;
}

NDArray stack_numbers(const std::vector<Sample>& rows, const BatchSpec::Column& col) {
  const std::size_t n = rows.size();
  NDArray out = NDArray::zeros(col.dtype, {n});
  for (std::size_t i = 0; i < n; ++i) {
    const Value& v = rows[i].col(col.col);
    switch (col.dtype) {
      case Dtype::U8: {
        std::int64_t x = v.kind() == ValueKind::Int ? v.as_int() : std::llround(v.as_number());
        if (x < 0 || x > 255)
          throw TypeError("column " + std::to_string(col.col) + ": value " + v.render() +
                          " does not fit u8");
        out.u8_mut()[i] = static_cast<std::uint8_t>(x);
        break;
      }
      case Dtype::I64:
        out.i64_mut()[i] =
            v.kind() == ValueKind::Int ? v.as_int() : std::llround(v.as_number());
        break;
      case Dtype::F64:
        out.f64_mut()[i] = v.as_number();
        break;
    }
  }
  return out;
}

NDArray stack_one_hot(const std::vector<Sample>& rows, const BatchSpec::Column& col) {
  const std::size_t n = rows.size();
  const auto k = static_cast<std::size_t>(col.classes);
  NDArray out = NDArray::zeros(col.dtype, {n, k});
  for (std::size_t i = 0; i < n; ++i) {
    std::int64_t label = rows[i].col(col.col).as_int();
    if (label < 0 || label >= col.classes)
      throw std::out_of_range("column " + std::to_string(col.col) + ": label " +
                              std::to_string(label) + " out of range for " +
                              std::to_string(col.classes) + " classes");
    const std::size_t at = i * k + static_cast<std::size_t>(label);
    switch (col.dtype) {
      case Dtype::U8: out.u8_mut()[at] = 1; break;
      case Dtype::I64: out.i64_mut()[at] = 1; break;
      case Dtype::F64: out.f64_mut()[at] = 1.0; break;
    }
  }
  return out;
}

}  // namespace

Processor build_batch(BatchSpec spec) {
  if (spec.columns().empty()) throw std::invalid_argument("batch spec has no columns");
  return Processor("build_batch", [spec](Flow in) {
    return Flow::from_pull([spec, in = std::move(in)]() mutable -> PullResult {
      std::vector<Sample> rows;
      rows.reserve(spec.batchsize());
      while (rows.size() < spec.batchsize()) {
        PullResult r = in.pull();
        if (r.is_end()) break;
        if (r.is_error()) return r;
        if (!r.element().is_sample()) return Error{"build_batch", "expected sample elements"};
        rows.push_back(std::move(r.element().sample()));
      }
      if (rows.empty()) return End{};
      try {
        std::vector<Value> cols;
        cols.reserve(spec.columns().size());
        for (const auto& c : spec.columns()) {
          switch (c.kind) {
            case BatchSpec::Kind::Image: cols.emplace_back(stack_images(rows, c)); break;
            case BatchSpec::Kind::Number: cols.emplace_back(stack_numbers(rows, c)); break;
            case BatchSpec::Kind::OneHot: cols.emplace_back(stack_one_hot(rows, c)); break;
          }
        }
        return Element(Sample(std::move(cols)));
      } catch (const std::exception& e) {
        return Error{"build_batch", e.what()};
      }
    });
  });
}

// ---------------------------------------------------------------------------
// ToyModel
// ---------------------------------------------------------------------------

namespace {

struct Features {
  std::size_t n = 0;
  std::vector<double> x;  // n x d, u8 inputs scaled to [0,1]
};

Features unpack_inputs(const Batch& batch, std::int64_t d) {
  if (batch.columns.empty()) throw std::invalid_argument("batch has no input column");
  const NDArray& a = batch.columns.front();
  Features f;
  f.n = a.shape().front();
  if (f.n == 0) throw std::invalid_argument("batch has no rows");
  const std::size_t per_row = a.size() / f.n;
  if (per_row != static_cast<std::size_t>(d))
    throw std::invalid_argument("input dimension mismatch: batch rows have " +
                                std::to_string(per_row) + " features, model expects " +
                                std::to_string(d));
  f.x.resize(a.size());
  if (a.dtype() == Dtype::U8) {
    auto src = a.u8();
    for (std::size_t i = 0; i < src.size(); ++i) f.x[i] = static_cast<double>(src[i]) / 255.0;
  } else {
    f.x = a.to_f64();
  }
  return f;
}

std::vector<double> unpack_targets(const Batch& batch, std::size_t n, std::int64_t k) {
  if (batch.columns.size() < 2)
    throw std::invalid_argument("batch has no target column");
  const NDArray& a = batch.columns[1];
  if (a.rank() != 2 || a.shape()[0] != n || a.shape()[1] != static_cast<std::size_t>(k))
    throw std::invalid_argument("target column must be one-hot with " + std::to_string(k) +
                                " classes");
  return a.to_f64();
}

}  // namespace

ToyModel::ToyModel(std::int64_t classes, std::int64_t input_dim, double learning_rate)
    : k_(classes), d_(input_dim), lr_(learning_rate),
      w_(static_cast<std::size_t>(classes * input_dim), 0.0),
      b_(static_cast<std::size_t>(classes), 0.0) {
  if (classes < 2) throw std::invalid_argument("need at least 2 classes");
  if (input_dim < 1) throw std::invalid_argument("input dimension must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("learning rate must be finite and non-negative");
}

ToyModel ToyModel::initialized(std::int64_t classes, std::int64_t input_dim,
                               double learning_rate, std::uint64_t seed) {
  ToyModel m(classes, input_dim, learning_rate);
  Rng rng(seed);
  for (double& w : m.w_) w = rng.uniform(-0.01, 0.01);
  return m;
}

namespace {

// Max-subtracted softmax probabilities for one row of logits.
void softmax_row(std::vector<double>& z) {
  double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

}  // namespace

double ToyModel::loss(const Batch& batch) const {
  Features f = unpack_inputs(batch, d_);
  std::vector<double> y = unpack_targets(batch, f.n, k_);
  const auto k = static_cast<std::size_t>(k_), d = static_cast<std::size_t>(d_);
  double total = 0.0;
  std::vector<double> z(k);
  for (std::size_t i = 0; i < f.n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double dot = b_[j];
      const double* wj = w_.data() + j * d;
      const double* xi = f.x.data() + i * d;
      for (std::size_t t = 0; t < d; ++t) dot += wj[t] * xi[t];
      z[j] = dot;
    }
    softmax_row(z);
    for (std::size_t j = 0; j < k; ++j)
      if (y[i * k + j] != 0.0) total -= y[i * k + j] * std::log(z[j]);
  }
  return total / static_cast<double>(f.n);
}

std::pair<std::vector<double>, std::vector<double>> ToyModel::gradients(
    const Batch& batch) const {
  Features f = unpack_inputs(batch, d_);
  std::vector<double> y = unpack_targets(batch, f.n, k_);
  const auto k = static_cast<std::size_t>(k_), d = static_cast<std::size_t>(d_);
  std::vector<double> dw(k * d, 0.0), db(k, 0.0);
  std::vector<double> z(k);
  const double inv_n = 1.0 / static_cast<double>(f.n);
  for (std::size_t i = 0; i < f.n; ++i) {
    const double* xi = f.x.data() + i * d;
    for (std::size_t j = 0; j < k; ++j) {
      double dot = b_[j];
      const double* wj = w_.data() + j * d;
      for (std::size_t t = 0; t < d; ++t) dot += wj[t] * xi[t];
      z[j] = dot;
    }
    softmax_row(z);
    for (std::size_t j = 0; j < k; ++j) {
      const double dz = (z[j] - y[i * k + j]) * inv_n;
      db[j] += dz;
      double* dwj = dw.data() + j * d;
      for (std::size_t t = 0; t < d; ++t) dwj[t] += dz * xi[t];
    }
  }
  return {std::move(dw), std::move(db)};
}

double ToyModel::train_batch(const Batch& batch) {
  const double pre = loss(batch);
  if (!std::isfinite(pre)) throw std::runtime_error("diverged: loss is not finite");
  auto [dw, db] = gradients(batch);
  for (std::size_t i = 0; i < w_.size(); ++i) w_[i] -= lr_ * dw[i];
  for (std::size_t i = 0; i < b_.size(); ++i) b_[i] -= lr_ * db[i];
  return pre;
}

std::vector<std::int64_t> ToyModel::predict_batch(const Batch& batch) {
  Features f = unpack_inputs(batch, d_);
  const auto k = static_cast<std::size_t>(k_), d = static_cast<std::size_t>(d_);
  std::vector<std::int64_t> out(f.n);
  for (std::size_t i = 0; i < f.n; ++i) {
    const double* xi = f.x.data() + i * d;
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < k; ++j) {
      double dot = b_[j];
      const double* wj = w_.data() + j * d;
      for (std::size_t t = 0; t < d; ++t) dot += wj[t] * xi[t];
      if (dot > best) {
        best = dot;
        arg = j;
      }
    }
    out[i] = static_cast<std::int64_t>(arg);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model persistence: flat little-endian f64 file (k, d, W row-major, b)
// ---------------------------------------------------------------------------

namespace {

void write_f64_le(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

double read_f64_le(std::istream& in, const std::filesystem::path& path) {
  char buf[8];
  in.read(buf, 8);
  if (in.gcount() != 8) throw std::runtime_error("truncated model file: " + path.string());
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[i])) << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

void ToyModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_f64_le(out, static_cast<double>(k_));
  write_f64_le(out, static_cast<double>(d_));
  for (double w : w_) write_f64_le(out, w);
  for (double b : b_) write_f64_le(out, b);
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ToyModel ToyModel::load(const std::filesystem::path& path, double learning_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const double kf = read_f64_le(in, path);
  const double df = read_f64_le(in, path);
  if (kf < 2 || df < 1 || kf != std::floor(kf) || df != std::floor(df) || kf > 1e6 || df > 1e9)
    throw std::runtime_error("bad model header in " + path.string());
  ToyModel m(static_cast<std::int64_t>(kf), static_cast<std::int64_t>(df), learning_rate);
  for (double& w : m.w_) w = read_f64_le(in, path);
  for (double& b : m.b_) b = read_f64_le(in, path);
  if (in.peek() != std::char_traits<char>::eof())
    throw std::runtime_error("trailing bytes in model file: " + path.string());
  return m;
}

// ---------------------------------------------------------------------------
// Training / evaluation stages
// ---------------------------------------------------------------------------

double toy_sgd_step(ToyModel& model, const Batch& batch) { return model.train_batch(batch); }

Processor train_on_batches(std::shared_ptr<TrainableModel> model) {
  if (!model) throw std::invalid_argument("train_on_batches needs a model");
  return per_element("train", [model](Element e) -> Element {
    Batch b = Batch::from_sample(e.sample());
    return to_element(model->train_batch(b));
  });
}

Sink<double> evaluate_accuracy(std::shared_ptr<TrainableModel> model) {
  if (!model) throw std::invalid_argument("evaluate_accuracy needs a model");
  return Sink<double>("evaluate", [model](Flow in) -> double {
    std::size_t correct = 0, total = 0;
    for (;;) {
      PullResult r = in.pull();
      if (r.is_end()) break;
      if (r.is_error()) throw PipelineError(r.error());
      try {
        Batch b = Batch::from_sample(r.element().sample());
        if (b.columns.size() < 2)
          throw std::invalid_argument("evaluation batches need a target column");
        const NDArray& y = b.columns[1];
        if (y.rank() != 2) throw std::invalid_argument("target column must be one-hot");
        const std::size_t n = y.shape()[0], k = y.shape()[1];
        std::vector<std::int64_t> pred = model->predict_batch(b);
        if (pred.size() != n)
          throw std::runtime_error("model returned " + std::to_string(pred.size()) +
                                   " predictions for " + std::to_string(n) + " rows");
        for (std::size_t i = 0; i < n; ++i) {
          std::size_t arg = 0;
          double best = y.at_f64(i * k);
          for (std::size_t j = 1; j < k; ++j)
            if (y.at_f64(i * k + j) > best) {
              best = y.at_f64(i * k + j);
              arg = j;
            }
          correct += pred[i] == static_cast<std::int64_t>(arg) ? 1 : 0;
          total += 1;
        }
      } catch (PipelineError&) {
        throw;
      } catch (const std::exception& e) {
        throw PipelineError(Error{"evaluate", e.what()});
      }
    }
    if (total == 0) throw PipelineError(Error{"evaluate", "empty flow"});
    return static_cast<double>(correct) / static_cast<double>(total);
  });
}

}  // namespace flow::ml
