#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "flow/core.hpp"
#include "flow/ops.hpp"

namespace testsupport {

// Scratch directory removed when the test block ends.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("flowkit-test-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

// Source of integers 0..n-1 that counts how many times it is pulled,
// including the pull that discovers End.
inline flow::Source counting_source(std::int64_t n, std::shared_ptr<std::atomic<std::int64_t>> pulls) {
  return flow::Source("counting", [n, pulls]() {
    auto i = std::make_shared<std::int64_t>(0);
    return flow::Flow::from_pull([n, pulls, i]() -> flow::PullResult {
      pulls->fetch_add(1);
      if (*i >= n) return flow::End{};
      return flow::Element(flow::Value((*i)++));
    });
  });
}

// Same, but yields 1-column samples (what batch builders expect).
inline flow::Source counting_sample_source(std::int64_t n,
                                           std::shared_ptr<std::atomic<std::int64_t>> pulls) {
  return flow::Source("counting_samples", [n, pulls]() {
    auto i = std::make_shared<std::int64_t>(0);
    return flow::Flow::from_pull([n, pulls, i]() -> flow::PullResult {
      pulls->fetch_add(1);
      if (*i >= n) return flow::End{};
      return flow::Element(flow::row((*i)++));
    });
  });
}

inline std::vector<std::int64_t> as_ints(const std::vector<flow::Element>& xs) {
  std::vector<std::int64_t> out;
  out.reserve(xs.size());
  for (const flow::Element& e : xs) out.push_back(e.value().as_int());
  return out;
}

inline std::vector<double> as_doubles(const std::vector<flow::Element>& xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const flow::Element& e : xs) out.push_back(e.value().as_number());
  return out;
}

inline std::vector<flow::Element> ints(std::vector<std::int64_t> xs) {
  std::vector<flow::Element> out;
  out.reserve(xs.size());
  for (std::int64_t x : xs) out.emplace_back(flow::Value(x));
  return out;
}

}  // namespace testsupport
