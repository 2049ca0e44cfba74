#include "flow/image.hpp"

#include <cmath>
#include <fstream>

namespace flow::img {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_channels(std::size_t channels) {
  if (channels != 1 && channels != 3)
    throw ImageError("channels must be 1 or 3, got " + std::to_string(channels));
}

void check_dims(std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw ImageError("image dimensions must be positive");
}

}  // namespace

Image::Image(std::size_t height, std::size_t width, std::size_t channels, std::uint8_t fill)
    : height_(height), width_(width), channels_(channels),
      pixels_(height * width * channels, fill) {
  check_dims(height, width);
  check_channels(channels);
}

Image::Image(std::size_t height, std::size_t width, std::size_t channels,
             std::vector<std::uint8_t> pixels)
    : height_(height), width_(width), channels_(channels), pixels_(std::move(pixels)) {
  check_dims(height, width);
  check_channels(channels);
  if (pixels_.size() != height_ * width_ * channels_)
    throw ImageError("pixel buffer length " + std::to_string(pixels_.size()) +
                     " does not match " + std::to_string(height_ * width_ * channels_));
}

// ---------------------------------------------------------------------------
// Netpbm
// ---------------------------------------------------------------------------

namespace {

// Header tokens are separated by whitespace; '#' starts a comment to EOL.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok += static_cast<char>(c);
  }
  return tok;
}

std::size_t parse_dim(const std::string& tok, const std::string& what) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
    throw ImageError("bad " + what + " in header: '" + tok + "'");
  return static_cast<std::size_t>(std::stoull(tok));
}

}  // namespace

Image read_image_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open " + path.string());

  char magic[2] = {0, 0};
  in.read(magic, 2);
  std::size_t channels;
  if (magic[0] == 'P' && magic[1] == '5') {
    channels = 1;
  } else if (magic[0] == 'P' && magic[1] == '6') {
    channels = 3;
  } else {
    throw ImageError(path.string() + ": unsupported magic (need binary P5 or P6)");
  }

  std::size_t width = parse_dim(next_token(in), "width");
  std::size_t height = parse_dim(next_token(in), "height");
  std::size_t maxval = parse_dim(next_token(in), "maxval");
  if (maxval != 255)
    throw ImageError(path.string() + ": unsupported maxval " + std::to_string(maxval));
  check_dims(height, width);

  // A single whitespace byte separates the header from the raster; the
  // token reader has already consumed exactly one.
  std::vector<std::uint8_t> pixels(height * width * channels);
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != pixels.size())
    throw ImageError(path.string() + ": truncated pixel data");
  return Image(height, width, channels, std::move(pixels));
}

void write_image_file(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ImageError("cannot open " + path.string() + " for writing");
  out << (img.channels() == 1 ? "P5" : "P6") << '\n'
      << img.width() << ' ' << img.height() << '\n'
      << "255" << '\n';
  out.write(reinterpret_cast<const char*>(img.pixels().data()),
            static_cast<std::streamsize>(img.pixels().size()));
  out.flush();
  if (!out) throw ImageError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

Image resize_nearest(const Image& src, std::size_t width, std::size_t height) {
  check_dims(height, width);
  Image out(height, width, src.channels());
  const double sy = static_cast<double>(src.height()) / static_cast<double>(height);
  const double sx = static_cast<double>(src.width()) / static_cast<double>(width);
  for (std::size_t y = 0; y < height; ++y) {
    // pixel-center mapping, exact identity at scale 1
    std::size_t yi = std::min(src.height() - 1,
                              static_cast<std::size_t>((static_cast<double>(y) + 0.5) * sy));
    for (std::size_t x = 0; x < width; ++x) {
      std::size_t xi = std::min(src.width() - 1,
                                static_cast<std::size_t>((static_cast<double>(x) + 0.5) * sx));
      for (std::size_t c = 0; c < src.channels(); ++c) out.at(y, x, c) = src.at(yi, xi, c);
    }
  }
  return out;
}

Image rgb_to_gray(const Image& src) {
  if (src.channels() != 3) throw ImageError("rgb2gray needs a 3-channel image");
  Image out(src.height(), src.width(), 1);
  for (std::size_t y = 0; y < src.height(); ++y)
    for (std::size_t x = 0; x < src.width(); ++x) {
      double v = 0.299 * src.at(y, x, 0) + 0.587 * src.at(y, x, 1) + 0.114 * src.at(y, x, 2);
      out.at(y, x) = static_cast<std::uint8_t>(std::floor(v + 0.5));  // round half up
    }
  return out;
}

Image crop(const Image& src, std::size_t x, std::size_t y, std::size_t w, std::size_t h) {
  if (x + w > src.width() || y + h > src.height())
    throw ImageError("crop window (" + std::to_string(x) + "," + std::to_string(y) + "," +
                     std::to_string(w) + "," + std::to_string(h) + ") outside " +
                     std::to_string(src.width()) + "x" + std::to_string(src.height()) + " image");
  Image out(h, w, src.channels());
  for (std::size_t yy = 0; yy < h; ++yy)
    for (std::size_t xx = 0; xx < w; ++xx)
      for (std::size_t c = 0; c < src.channels(); ++c)
        out.at(yy, xx, c) = src.at(y + yy, x + xx, c);
  return out;
}

Image flip_lr(const Image& src) {
  Image out(src.height(), src.width(), src.channels());
  for (std::size_t y = 0; y < src.height(); ++y)
    for (std::size_t x = 0; x < src.width(); ++x)
      for (std::size_t c = 0; c < src.channels(); ++c)
        out.at(y, x, c) = src.at(y, src.width() - 1 - x, c);
  return out;
}

Image rotate(const Image& src, double degrees_ccw) {
  const double rad = degrees_ccw * kPi / 180.0;
  const double cs = std::cos(rad), sn = std::sin(rad);
  const double cy = (static_cast<double>(src.height()) - 1.0) / 2.0;
  const double cx = (static_cast<double>(src.width()) - 1.0) / 2.0;
  Image out(src.height(), src.width(), src.channels(), 0);
  for (std::size_t y = 0; y < src.height(); ++y)
    for (std::size_t x = 0; x < src.width(); ++x) {
      // inverse map: where does this output pixel come from
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double sxf = cx + dx * cs - dy * sn;
      const double syf = cy + dx * sn + dy * cs;
      const auto sx = static_cast<std::int64_t>(std::llround(sxf));
      const auto sy = static_cast<std::int64_t>(std::llround(syf));
      if (sx < 0 || sy < 0 || sx >= static_cast<std::int64_t>(src.width()) ||
          sy >= static_cast<std::int64_t>(src.height()))
        continue;  // uncovered pixels stay 0
      for (std::size_t c = 0; c < src.channels(); ++c)
        out.at(y, x, c) = src.at(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx), c);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

namespace {

void want_params(std::span<const double> params, std::size_t n, const char* name) {
  if (params.size() != n)
    throw ImageError(std::string(name) + " expects " + std::to_string(n) + " parameter(s), got " +
                     std::to_string(params.size()));
}

std::size_t as_extent(double v, const char* what) {
  if (!(v >= 0) || v != std::floor(v)) throw ImageError(std::string(what) + " must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

TransformRegistry TransformRegistry::with_builtins() {
  TransformRegistry reg;
  reg.register_transform("identity", [](const Image& im, std::span<const double> p) {
    want_params(p, 0, "identity");
    return im;
  });
  reg.register_transform("resize", [](const Image& im, std::span<const double> p) {
    want_params(p, 2, "resize");
    // parameter order is (width, height)
    return resize_nearest(im, as_extent(p[0], "width"), as_extent(p[1], "height"));
  });
  reg.register_transform("rgb2gray", [](const Image& im, std::span<const double> p) {
    want_params(p, 0, "rgb2gray");
    return rgb_to_gray(im);
  });
  reg.register_transform("crop", [](const Image& im, std::span<const double> p) {
    want_params(p, 4, "crop");
    return crop(im, as_extent(p[0], "x"), as_extent(p[1], "y"), as_extent(p[2], "w"),
                as_extent(p[3], "h"));
  });
  reg.register_transform("fliplr", [](const Image& im, std::span<const double> p) {
    want_params(p, 0, "fliplr");
    return flip_lr(im);
  });
  reg.register_transform("rotate", [](const Image& im, std::span<const double> p) {
    want_params(p, 1, "rotate");
    return rotate(im, p[0]);
  });
  return reg;
}

void TransformRegistry::register_transform(const std::string& name, TransformFn fn) {
  fns_[name] = std::move(fn);  // replacement allowed
}

bool TransformRegistry::has(const std::string& name) const { return fns_.count(name) > 0; }

const TransformFn& TransformRegistry::get(const std::string& name) const {
  auto it = fns_.find(name);
  if (it == fns_.end()) throw ImageError("unknown transform '" + name + "'");
  return it->second;
}

Image TransformRegistry::apply(const TransformSpec& spec, const Image& image) const {
  return get(spec.name)(image, spec.params);
}

std::vector<Image> TransformRegistry::apply_augmentation(std::span<const AugmentSpec> specs,
                                                         std::vector<Image> images,
                                                         Rng& rng) const {
  for (std::size_t i = 1; i < images.size(); ++i) {
    if (images[i].height() != images[0].height() || images[i].width() != images[0].width())
      throw ImageError("synchronized augmentation needs equally sized images");
  }
  for (const AugmentSpec& spec : specs) {
    if (spec.probability < 0.0 || spec.probability > 1.0)
      throw ImageError("augmentation probability must be in [0,1]");
    const TransformFn& fn = get(spec.name);
    for (auto [lo, hi] : spec.ranges)
      if (lo > hi) throw ImageError("augmentation range has lo > hi");
    if (rng.uniform01() >= spec.probability) continue;
    // Parameters are drawn once per spec so all images transform identically.
    std::vector<double> params;
    params.reserve(spec.ranges.size());
    for (auto [lo, hi] : spec.ranges) params.push_back(rng.uniform(lo, hi));
    for (Image& im : images) im = fn(im, params);
  }
  return images;
}

void register_transform(TransformRegistry& registry, const std::string& name, TransformFn fn) {
  registry.register_transform(name, std::move(fn));
}

Image apply_transform(const TransformRegistry& registry, const TransformSpec& spec,
                      const Image& image) {
  return registry.apply(spec, image);
}

std::vector<Image> apply_augmentation(const TransformRegistry& registry,
                                      std::span<const AugmentSpec> specs,
                                      std::vector<Image> images, Rng& rng) {
  return registry.apply_augmentation(specs, std::move(images), rng);
}

}  // namespace flow::img
