#pragma once

// Test-only helpers. The oracles here are written independently of the
// engine's code paths and must not include engine headers that they check.

#include <atomic>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <unistd.h>

namespace smr_test {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("smr-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
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

 private:
  std::filesystem::path path_;
};

/// FNV-1a 64 computed with 128-bit intermediates reduced mod 2^64.
inline std::uint64_t fnv_oracle(std::string_view s) {
  unsigned __int128 h = 14695981039346656037ull;
  const unsigned __int128 mod = static_cast<unsigned __int128>(1) << 64;
  for (char c : s) {
    h = h ^ static_cast<unsigned char>(c);
    h = (h * 1099511628211ull) % mod;
  }
  return static_cast<std::uint64_t>(h);
}

/// Single-threaded word counter for ASCII text: maximal [A-Za-z0-9] runs,
/// lowercased.
inline void brute_count(std::string_view text, std::map<std::string, std::uint64_t>& counts) {
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (c < 128 && std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      ++counts[cur];
      cur.clear();
    }
  }
  if (!cur.empty()) ++counts[cur];
}

/// TSV rendering of a sorted count map, matching the documented format.
inline std::string to_tsv(const std::map<std::string, std::uint64_t>& counts) {
  std::string out;
  for (const auto& [w, n] : counts) out += w + "\t" + std::to_string(n) + "\n";
  return out;
}

inline std::string random_ascii_text(std::mt19937_64& rng, std::size_t n) {
  static constexpr std::string_view alphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
      "     \t\n.,;:!?'\"()-_/\\@#$%^&*+=<>[]{}|~`";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string s(n, ' ');
  for (auto& c : s) c = alphabet[pick(rng)];
  return s;
}

}  // namespace smr_test
