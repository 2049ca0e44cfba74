#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "flow/core.hpp"
#include "flow/image.hpp"

namespace flow::ml {

// ---------------------------------------------------------------------------
// Sample reading / splitting / stratification
// ---------------------------------------------------------------------------

/// CSV of (filepath, label) records as 2-column Text samples; a record
/// with any other arity fails the flow.
Source read_samples(std::filesystem::path path, bool has_header = false);

struct RatioSpec {
  std::vector<double> ratios;  // at least 2, positive
  std::uint64_t seed = 0;
};

/// Seeded shuffle, then partition with fold sizes by largest-remainder
/// apportionment of the normalized ratios (ties go to earlier folds).
/// Folds are disjoint and their union is the input.
std::vector<std::vector<Sample>> split_random(std::vector<Sample> samples,
                                              const RatioSpec& spec);

/// Sink form: gathers the flow (samples only) and splits it.
Sink<std::vector<std::vector<Sample>>> split_random(const RatioSpec& spec);

enum class StratifyMode { Up, Down };

/// Rebalances class frequencies keyed on column `labelcol`.
/// Up: every class is topped up to the max class count by sampling that
/// class with replacement (all originals kept). Down: every class is
/// reduced to the min class count by sampling without replacement.
/// The result is shuffled with the same seed.
std::vector<Sample> stratify(const std::vector<Sample>& samples, std::size_t labelcol,
                             StratifyMode mode, std::uint64_t seed);

/// Processor form: materializes its input on first pull, then streams the
/// stratified samples.
Processor stratify(std::size_t labelcol, StratifyMode mode, std::uint64_t seed);

/// Sorted distinct Text labels in column `labelcol` -> 0..k-1.
std::map<std::string, std::int64_t> label_index(const std::vector<Sample>& samples,
                                                std::size_t labelcol);

// ---------------------------------------------------------------------------
// Image pipeline stages
// ---------------------------------------------------------------------------

/// Lazily replaces the filename in each addressed column with the loaded
/// image. `path_template` contains a '*' that is substituted with the
/// column's text (e.g. "images/*"). An empty column list passes through.
Processor read_image(std::vector<std::size_t> columns, std::string path_template);

/// Applies the transform specs in order to every addressed image column.
Processor transform_image(std::vector<std::size_t> imagecols,
                          std::vector<img::TransformSpec> specs,
                          img::TransformRegistry registry = img::TransformRegistry::with_builtins());

/// Randomized augmentation, synchronized across the addressed columns of
/// each sample; per-sample randomness comes from a generator seeded by
/// (seed, sample ordinal), so a fixed seed reproduces the stream exactly.
Processor augment_image(std::vector<std::size_t> imagecols,
                        std::vector<img::AugmentSpec> specs, std::uint64_t seed,
                        img::TransformRegistry registry = img::TransformRegistry::with_builtins());

// ---------------------------------------------------------------------------
// Batching
// ---------------------------------------------------------------------------

/// Length-k array, all zeros except a 1 at `label`.
NDArray one_hot(std::int64_t label, std::int64_t classes, Dtype dtype = Dtype::U8);

// Ordered column arrays sharing leading dimension N (the batch count).
struct Batch {
  std::vector<NDArray> columns;

  std::size_t rows() const;  // common leading dimension
  /// Validates that every column of the sample is an array with a common
  /// leading dimension.
  static Batch from_sample(const Sample& s);
  Sample to_sample() const;
};

// Declarative batch layout: BatchSpec(16).image(0, Dtype::U8, true)
//                                        .one_hot(1, Dtype::U8, 10)
class BatchSpec {
 public:
  explicit BatchSpec(std::size_t batchsize);

  /// Stack an image column to N x H x W x C, or N x C x H x W when
  /// channel_first is set.
  BatchSpec& image(std::size_t col, Dtype dtype = Dtype::U8, bool channel_first = false);
  /// Collect a numeric column into an N-vector.
  BatchSpec& number(std::size_t col, Dtype dtype = Dtype::F64);
  /// One-hot encode an integer class column to N x classes.
  BatchSpec& one_hot(std::size_t col, Dtype dtype, std::int64_t classes);

  std::size_t batchsize() const { return batchsize_; }

  enum class Kind { Image, Number, OneHot };
  struct Column {
    std::size_t col;
    Kind kind;
    Dtype dtype;
    bool channel_first = false;  // image
    std::int64_t classes = 0;    // one_hot
  };
  const std::vector<Column>& columns() const { return columns_; }

 private:
  std::size_t batchsize_;
  std::vector<Column> columns_;
};

/// Groups `batchsize` consecutive samples into a batch element (a sample
/// whose columns are the stacked arrays). Exactly `batchsize` upstream
/// pulls per emitted batch; a shorter final batch is emitted, never
/// dropped.
Processor build_batch(BatchSpec spec);

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

/// Anything trainable on batches. Batches are expected to carry the input
/// column first and the one-hot target column second. train_batch on an
/// identical (state, batch) pair is deterministic.
class TrainableModel {
 public:
  virtual ~TrainableModel() = default;
  virtual double train_batch(const Batch& batch) = 0;                  // returns loss
  virtual std::vector<std::int64_t> predict_batch(const Batch& batch) = 0;
};

// Softmax regression trained by SGD: W is k x d, b is k. Inputs are
// flattened to d features; u8 data is scaled to [0,1], other dtypes are
// taken as-is.
class ToyModel final : public TrainableModel {
 public:
  ToyModel(std::int64_t classes, std::int64_t input_dim, double learning_rate);

  /// Weights uniform in [-0.01, 0.01] drawn from `seed`, bias zero.
  static ToyModel initialized(std::int64_t classes, std::int64_t input_dim,
                              double learning_rate, std::uint64_t seed);

  double train_batch(const Batch& batch) override;
  std::vector<std::int64_t> predict_batch(const Batch& batch) override;

  /// Softmax cross-entropy loss of the current parameters (no update).
  double loss(const Batch& batch) const;

  /// Analytic gradients (dW row-major k x d, db length k) at the current
  /// parameters.
  std::pair<std::vector<double>, std::vector<double>> gradients(const Batch& batch) const;

  std::int64_t classes() const { return k_; }
  std::int64_t input_dim() const { return d_; }
  double learning_rate() const { return lr_; }
  std::vector<double>& weights() { return w_; }        // row-major k x d
  const std::vector<double>& weights() const { return w_; }
  std::vector<double>& bias() { return b_; }
  const std::vector<double>& bias() const { return b_; }

  /// Flat little-endian f64 file: k, d, W row-major, b.
  void save(const std::filesystem::path& path) const;
  static ToyModel load(const std::filesystem::path& path, double learning_rate);

 private:
  std::int64_t k_, d_;
  double lr_;
  std::vector<double> w_;  // k x d, row-major
  std::vector<double> b_;  // k
};

/// One SGD step on the batch; returns the pre-step loss.
double toy_sgd_step(ToyModel& model, const Batch& batch);

/// Batch -> loss, one training step per pulled batch.
Processor train_on_batches(std::shared_ptr<TrainableModel> model);

/// Drives a flow of batches through prediction; returns the fraction of
/// rows whose argmax prediction matches the one-hot target.
Sink<double> evaluate_accuracy(std::shared_ptr<TrainableModel> model);

}  // namespace flow::ml
