#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "flow/rng.hpp"

namespace flow::img {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 8-bit raster, row-major, 1 (gray) or 3 (RGB) channels.
class Image {
 public:
  /// Constant-valued image.
  Image(std::size_t height, std::size_t width, std::size_t channels, std::uint8_t fill = 0);
  /// Takes ownership of a pixel buffer of exactly height*width*channels bytes.
  Image(std::size_t height, std::size_t width, std::size_t channels,
        std::vector<std::uint8_t> pixels);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return channels_; }

  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c = 0) const {
    return pixels_[(y * width_ + x) * channels_ + c];
  }
  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c = 0) {
    return pixels_[(y * width_ + x) * channels_ + c];
  }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels_mut() { return pixels_; }

  bool operator==(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_ && pixels_ == other.pixels_;
  }

 private:
  std::size_t height_, width_, channels_;
  std::vector<std::uint8_t> pixels_;
};

// ---------------------------------------------------------------------------
// Netpbm codec (binary P5 gray / P6 RGB, maxval 255)
// ---------------------------------------------------------------------------

/// Reads a binary P5/P6 file. '#' comments are allowed in the header;
/// maxval must be 255. Pixel bytes are preserved exactly.
Image read_image_file(const std::filesystem::path& path);

/// Writes P5 for 1 channel, P6 for 3: "P5|P6\n<w> <h>\n255\n" + raw bytes.
void write_image_file(const std::filesystem::path& path, const Image& img);

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

/// A transform maps (image, scalar params) -> image. Each transform
/// validates its own parameter count.
using TransformFn = std::function<Image(const Image&, std::span<const double>)>;

struct TransformSpec {
  std::string name;
  std::vector<double> params;
};

struct AugmentSpec {
  std::string name;
  double probability = 1.0;                     // in [0, 1]
  std::vector<std::pair<double, double>> ranges;  // per-parameter [lo, hi)
};

// Name -> transform function. Registration of an existing name replaces it.
// Built-ins (always present in with_builtins()):
//   resize(w, h)     nearest-neighbor to width w, height h
//   rgb2gray()       0.299 r + 0.587 g + 0.114 b, rounded half-up
//   crop(x, y, w, h) window must lie inside the image
//   fliplr()         mirror columns
//   rotate(deg)      counterclockwise about the center, nearest-neighbor,
//                    same output size, uncovered pixels 0
//   identity()
class TransformRegistry {
 public:
  static TransformRegistry with_builtins();

  void register_transform(const std::string& name, TransformFn fn);
  bool has(const std::string& name) const;
  const TransformFn& get(const std::string& name) const;  // throws ImageError

  Image apply(const TransformSpec& spec, const Image& image) const;

  /// Probability-gated randomized transforms, applied synchronously: per
  /// spec, one uniform draw decides whether it fires, parameters are drawn
  /// once from the ranges, and the identical parametrized transform is
  /// applied to every image. All images must share height and width.
  std::vector<Image> apply_augmentation(std::span<const AugmentSpec> specs,
                                        std::vector<Image> images, Rng& rng) const;

 private:
  std::map<std::string, TransformFn> fns_;
};

void register_transform(TransformRegistry& registry, const std::string& name, TransformFn fn);
Image apply_transform(const TransformRegistry& registry, const TransformSpec& spec,
                      const Image& image);
std::vector<Image> apply_augmentation(const TransformRegistry& registry,
                                      std::span<const AugmentSpec> specs,
                                      std::vector<Image> images, Rng& rng);

// Direct forms of the built-ins, used by the registry and handy in tests.
Image resize_nearest(const Image& src, std::size_t width, std::size_t height);
Image rgb_to_gray(const Image& src);
Image crop(const Image& src, std::size_t x, std::size_t y, std::size_t w, std::size_t h);
Image flip_lr(const Image& src);
Image rotate(const Image& src, double degrees_ccw);

}  // namespace flow::img
