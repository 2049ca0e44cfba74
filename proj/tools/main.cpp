// Command-line front end: synthesize a toy image dataset, train the demo
// softmax model over the full preprocessing chain, and evaluate folds.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flow/image.hpp"
#include "flow/ml.hpp"
#include "flow/ops.hpp"
#include "flow/rng.hpp"

namespace fs = std::filesystem;
using namespace flow;

namespace {

struct SynthConfig {
  std::string data_dir;
  std::int64_t n = 100;
  std::int64_t classes = 3;
  std::int64_t side = 16;
  std::uint64_t seed = 0;
};

struct RunConfig {
  std::string data_dir;
  std::int64_t epochs = 30;
  std::int64_t batch_size = 16;
  std::uint64_t seed = 0;
  double learning_rate = 0.1;
  std::vector<double> split = {60, 20, 20};
  std::string stratify_mode = "up";
  std::string log_file = "losses.log";
  bool use_prefetch = false;
  std::string fold = "test";  // eval only
};

// Paths given relative on the command line live inside the data directory.
fs::path in_data_dir(const std::string& data_dir, const std::string& file) {
  fs::path p(file);
  return p.is_absolute() ? p : fs::path(data_dir) / p;
}

// Class sizes proportional to 2^(k-1-c): deliberately imbalanced so the
// stratify stage has work to do. Largest-remainder rounding, ties to the
// lower class index.
std::vector<std::size_t> class_counts(std::size_t n, std::size_t k) {
  std::vector<double> weights(k);
  double total = 0;
  for (std::size_t c = 0; c < k; ++c) total += weights[c] = std::pow(2.0, double(k - 1 - c));
  std::vector<std::size_t> counts(k);
  std::vector<double> fracs(k);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < k; ++c) {
    double quota = double(n) * weights[c] / total;
    counts[c] = static_cast<std::size_t>(std::floor(quota));
    fracs[c] = quota - std::floor(quota);
    assigned += counts[c];
  }
  std::vector<std::size_t> order(k);
  for (std::size_t c = 0; c < k; ++c) order[c] = c;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fracs[a] > fracs[b]; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) counts[order[i]] += 1;
  return counts;
}

int cmd_synth(const SynthConfig& cfg) {
  const auto n = static_cast<std::size_t>(cfg.n);
  const auto k = static_cast<std::size_t>(cfg.classes);
  const auto side = static_cast<std::size_t>(cfg.side);

  std::vector<std::size_t> counts = class_counts(n, k);
  for (std::size_t c = 0; c < k; ++c)
    if (counts[c] == 0) {
      std::cerr << "error: class " << c << " would get 0 of " << n
                << " samples; lower --classes or raise --n\n";
      return 1;
    }

  const fs::path data_dir(cfg.data_dir);
  const fs::path image_dir = data_dir / "images";
  fs::create_directories(image_dir);

  // One generator drives every pixel in file order, so a seed fixes the
  // whole directory byte for byte.
  Rng rng(cfg.seed);
  const std::int64_t step = 200 / cfg.classes;
  std::vector<Sample> records;
  records.reserve(n);
  std::size_t index = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const auto base = static_cast<std::int64_t>(c) * step;
    for (std::size_t i = 0; i < counts[c]; ++i, ++index) {
      img::Image im(side, side, 1);
      for (std::uint8_t& px : im.pixels_mut()) {
        std::int64_t v = base + rng.range(-20, 20);
        px = static_cast<std::uint8_t>(std::clamp<std::int64_t>(v, 0, 255));
      }
      char name[32];
      std::snprintf(name, sizeof name, "img_%05zu.pgm", index);
      img::write_image_file(image_dir / name, im);
      records.push_back(row(std::string(name), "c" + std::to_string(c)));
    }
  }
  std::size_t written = records >> write_csv(data_dir / "data.csv");
  std::cout << "wrote " << written << " samples in " << k << " classes to " << data_dir.string()
            << "\n";
  return 0;
}

std::vector<Sample> load_samples(const fs::path& csv) {
  std::vector<Element> rows = ml::read_samples(csv) >> collect();
  std::vector<Sample> out;
  out.reserve(rows.size());
  for (Element& e : rows) out.push_back(std::move(e.sample()));
  return out;
}

// Canonical per-image preprocessing: fix the size, collapse RGB to gray.
// The target size comes from the first image so the model dimension is
// derived from the data itself.
std::vector<img::TransformSpec> canonical_transforms(const img::Image& first) {
  std::vector<img::TransformSpec> specs;
  specs.push_back({"resize", {double(first.width()), double(first.height())}});
  if (first.channels() == 3) specs.push_back({"rgb2gray", {}});
  return specs;
}

Processor label_mapper(std::shared_ptr<const std::map<std::string, std::int64_t>> labels) {
  return map_col(1, [labels](Value v) -> Value {
    auto it = labels->find(v.as_text());
    if (it == labels->end()) throw std::runtime_error("unknown label '" + v.as_text() + "'");
    return Value(it->second);
  });
}

int cmd_train(const RunConfig& cfg) {
  const fs::path data_dir(cfg.data_dir);
  std::vector<Sample> samples = load_samples(data_dir / "data.csv");
  auto labels = std::make_shared<const std::map<std::string, std::int64_t>>(
      ml::label_index(samples, 1));
  const auto k = static_cast<std::int64_t>(labels->size());
  if (k < 2) throw std::runtime_error("need at least 2 classes, found " + std::to_string(k));

  auto folds = ml::split_random(std::move(samples), {cfg.split, cfg.seed});
  std::vector<Sample> trainset = std::move(folds[0]);
  if (cfg.stratify_mode != "none") {
    auto mode = cfg.stratify_mode == "up" ? ml::StratifyMode::Up : ml::StratifyMode::Down;
    trainset = ml::stratify(trainset, 1, mode, mix_seed(cfg.seed, 1));
  }
  if (trainset.empty()) throw std::runtime_error("training fold is empty");

  const std::string path_template = (data_dir / "images" / "*").string();
  img::Image first = img::read_image_file(
      in_data_dir((data_dir / "images").string(), trainset.front().col(0).as_text()));
  const auto transforms = canonical_transforms(first);
  const auto d = static_cast<std::int64_t>(first.height() * first.width());

  auto model = std::make_shared<ml::ToyModel>(
      ml::ToyModel::initialized(k, d, cfg.learning_rate, mix_seed(cfg.seed, 3)));

  Processor mapper = label_mapper(labels);
  Processor loader = ml::read_image({0}, path_template);
  Processor transformer = ml::transform_image({0}, transforms);
  Processor batcher = ml::build_batch(
      ml::BatchSpec(static_cast<std::size_t>(cfg.batch_size))
          .image(0, Dtype::U8, true)
          .one_hot(1, Dtype::U8, k));
  Processor trainer = ml::train_on_batches(model);
  // Constructed once: truncates the log here, then accumulates every epoch.
  Processor logger = log_to_file(in_data_dir(cfg.data_dir, cfg.log_file));

  const std::vector<img::AugmentSpec> augments = {
      {"fliplr", 0.5, {}},
      {"rotate", 0.5, {{-10.0, 10.0}}},
  };
  for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Processor augmenter = ml::augment_image(
        {0}, augments, mix_seed(mix_seed(cfg.seed, 2), static_cast<std::uint64_t>(epoch)));
    Flow f = make_source(trainset) >> mapper >> loader >> transformer >> augmenter;
    if (cfg.use_prefetch)
      f = std::move(f) >> prefetch(static_cast<std::size_t>(cfg.batch_size));
    f = std::move(f) >> batcher >> trainer >> logger;
    MeanStdResult ms = std::move(f) >> mean_std();
    std::cout << "epoch " << (epoch + 1) << "/" << cfg.epochs
              << " loss=" << render_double(ms.mean) << " std=" << render_double(ms.std) << "\n";
  }

  model->save(data_dir / "model.bin");
  std::cout << "saved model to " << (data_dir / "model.bin").string() << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  const fs::path data_dir(cfg.data_dir);
  std::vector<Sample> samples = load_samples(data_dir / "data.csv");
  auto labels = std::make_shared<const std::map<std::string, std::int64_t>>(
      ml::label_index(samples, 1));
  const auto k = static_cast<std::int64_t>(labels->size());

  auto folds = ml::split_random(std::move(samples), {cfg.split, cfg.seed});
  std::size_t which = cfg.fold == "train" ? 0 : cfg.fold == "val" ? 1 : folds.size() - 1;
  std::vector<Sample> fold = std::move(folds[which]);
  if (fold.empty()) throw std::runtime_error("fold '" + cfg.fold + "' is empty");

  auto model = std::make_shared<ml::ToyModel>(
      ml::ToyModel::load(data_dir / "model.bin", 0.0));

  const std::string path_template = (data_dir / "images" / "*").string();
  img::Image first = img::read_image_file(
      in_data_dir((data_dir / "images").string(), fold.front().col(0).as_text()));

  double acc = make_source(fold) >> label_mapper(labels) >>
               ml::read_image({0}, path_template) >>
               ml::transform_image({0}, canonical_transforms(first)) >>
               ml::build_batch(ml::BatchSpec(static_cast<std::size_t>(cfg.batch_size))
                                   .image(0, Dtype::U8, true)
                                   .one_hot(1, Dtype::U8, k)) >>
               ml::evaluate_accuracy(model);
  std::cout << "accuracy=" << render_double(acc) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lazy dataflow pipeline demo: synthesize, train, evaluate"};
  app.require_subcommand(1);

  SynthConfig synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a toy image dataset");
  synth_cmd->add_option("--data", synth.data_dir, "Output dataset directory")->required();
  synth_cmd->add_option("--n", synth.n, "Number of samples")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--classes", synth.classes, "Number of classes")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--side", synth.side, "Image side length")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.seed, "Random seed");

  auto add_run_flags = [](CLI::App* cmd, RunConfig& cfg, bool training) {
    cmd->add_option("--data", cfg.data_dir, "Dataset directory")->required();
    cmd->add_option("--batch-size", cfg.batch_size, "Samples per batch")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", cfg.seed, "Random seed (fixes split/stratify/augment)");
    cmd->add_option("--split", cfg.split, "Fold ratios, e.g. 60,20,20")->delimiter(',');
    if (training) {
      cmd->add_option("--epochs", cfg.epochs, "Training epochs")->check(CLI::PositiveNumber);
      cmd->add_option("--lr", cfg.learning_rate, "Learning rate")
          ->check(CLI::NonNegativeNumber);
      cmd->add_option("--stratify", cfg.stratify_mode, "Class rebalancing of the train fold")
          ->check(CLI::IsMember({"up", "down", "none"}));
      cmd->add_option("--log", cfg.log_file,
                      "Batch loss log (relative paths land in the data directory)");
      cmd->add_flag("--prefetch", cfg.use_prefetch,
                    "Read ahead in a background thread while training");
    } else {
      cmd->add_option("--fold", cfg.fold, "Which fold to evaluate")
          ->check(CLI::IsMember({"train", "val", "test"}));
    }
  };

  RunConfig train_cfg;
  CLI::App* train_cmd = app.add_subcommand("train", "Train the toy model");
  add_run_flags(train_cmd, train_cfg, true);

  RunConfig eval_cfg;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a trained model on a fold");
  add_run_flags(eval_cmd, eval_cfg, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth);
    if (train_cmd->parsed()) return cmd_train(train_cfg);
    return cmd_eval(eval_cfg);
  } catch (const PipelineError& e) {
    std::cerr << "error: " << e.error().describe() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
