#pragma once

#include "hrmsbo/types.hpp"

#include <unistd.h>

#include <filesystem>
#include <initializer_list>
#include <string>
#include <system_error>

namespace hrmsbo::test {

inline Vec vec1(double a) {
  Vec v(1);
  v << a;
  return v;
}

inline Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

inline Dataset dataset_1d(std::initializer_list<double> xs,
                          std::initializer_list<double> ys) {
  Dataset d;
  auto y = ys.begin();
  for (double x : xs) d.add(vec1(x), *y++);
  return d;
}

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("hrmsbo_" + tag + "_" + std::to_string(++counter) + "_" +
             std::to_string(static_cast<unsigned>(::getpid())));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace hrmsbo::test
