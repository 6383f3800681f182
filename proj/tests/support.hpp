#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("flusense-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Random background sentences over w0..w99, plus sentences in which `p` and
/// `q` alternate and nothing else appears, so each is the other's only context.
inline std::vector<std::vector<std::string>> pair_corpus(std::uint64_t seed, const std::string& p = "pp",
                                                         const std::string& q = "qq", std::size_t sentences = 2000) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::string>> corpus;
  for (std::size_t i = 0; i < sentences; ++i) {
    std::vector<std::string> s;
    const auto n = 6 + rng() % 6;
    for (std::size_t j = 0; j < n; ++j) s.push_back("w" + std::to_string(rng() % 100));
    corpus.push_back(std::move(s));
    if (i % 5 == 0) corpus.push_back({p, q, p, q, p, q});
  }
  return corpus;
}

}  // namespace testing
