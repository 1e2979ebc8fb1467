#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "oracles.hpp"
#include "pscd/map_model.hpp"

namespace testing {

inline pscd::DescriptorMatrix matrix(const oracle::Set& s, std::size_t dim) {
  pscd::DescriptorMatrix m(dim);
  for (const auto& r : s) {
    std::vector<float> f(r.begin(), r.end());
    m.append(f);
  }
  return m;
}

inline pscd::DescriptorMatrix matrix(const oracle::Set& s) { return matrix(s, s.at(0).size()); }

inline oracle::Set rows(const pscd::DescriptorMatrix& m) {
  oracle::Set out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

inline std::vector<float> vec(std::initializer_list<float> v) { return v; }

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("pscd_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing
