#pragma once

// Emulated object storage. All input, intermediate and output files of a job
// live here; tasks never hand data to each other directly.

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <compare>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <utility>
#include <vector>

#include "smr/error.hpp"

namespace smr {

struct ObjectKey {
  std::string bucket;
  std::string key;

  auto operator<=>(const ObjectKey&) const = default;
  bool operator==(const ObjectKey&) const = default;

  std::string str() const { return bucket + "/" + key; }
};

namespace detail {

inline bool is_key_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '/' || c == '-' || c == '_' ||
         c == '.';
}

}  // namespace detail

/// Bucket names: 1-63 characters from [A-Za-z0-9._-], not "." or "..".
inline bool is_valid_bucket(std::string_view bucket) {
  if (bucket.empty() || bucket.size() > 63 || bucket == "." || bucket == "..")
    return false;
  return std::all_of(bucket.begin(), bucket.end(), [](char c) {
    return c != '/' && detail::is_key_char(c);
  });
}

/// Keys: non-empty, characters from [A-Za-z0-9/._-], no leading or trailing
/// slash, no empty / "." / ".." segments. These keep the filesystem layout
/// free of escaping.
inline bool is_valid_key(std::string_view key) {
  if (key.empty() || key.front() == '/' || key.back() == '/') return false;
  if (!std::all_of(key.begin(), key.end(), detail::is_key_char)) return false;
  std::size_t start = 0;
  while (start <= key.size()) {
    auto end = key.find('/', start);
    if (end == std::string_view::npos) end = key.size();
    auto seg = key.substr(start, end - start);
    if (seg.empty() || seg == "." || seg == "..") return false;
    start = end + 1;
  }
  return true;
}

inline bool is_valid(const ObjectKey& k) {
  return is_valid_bucket(k.bucket) && is_valid_key(k.key);
}

inline void require_valid(const ObjectKey& k) {
  if (!is_valid(k)) throw Error(Errc::InvalidKey, "'" + k.str() + "'");
}

struct ObjectRecord {
  ObjectKey key;
  std::string data;
  std::size_t size = 0;
  std::chrono::steady_clock::time_point created_at;
};

/// Store interface shared by every backend. Implementations are safe for
/// concurrent use; operations on one key are linearizable.
class ObjectStore {
 public:
  virtual ~ObjectStore() = default;

  virtual void put(const ObjectKey& key, std::string data) = 0;
  virtual std::string get(const ObjectKey& key) const = 0;
  virtual bool exists(const ObjectKey& key) const = 0;
  /// Keys in `bucket` starting with `prefix`, byte-wise ascending.
  virtual std::vector<ObjectKey> list(std::string_view bucket,
                                      std::string_view prefix) const = 0;
  virtual std::size_t delete_prefix(std::string_view bucket,
                                    std::string_view prefix) = 0;
};

class MemoryStore final : public ObjectStore {
 public:
  void put(const ObjectKey& key, std::string data) override {
    require_valid(key);
    auto rec = std::make_shared<ObjectRecord>();
    rec->key = key;
    rec->size = data.size();
    rec->data = std::move(data);
    rec->created_at = std::chrono::steady_clock::now();
    std::shared_ptr<const ObjectRecord> old;
    {
      std::unique_lock lock(mu_);
      auto& slot = objects_[key];
      old = std::move(slot);
      slot = std::move(rec);
    }
    // `old` is released outside the lock.
  }

  std::string get(const ObjectKey& key) const override {
    return record(key)->data;
  }

  /// Shared handle to the current record; stays valid across overwrites.
  std::shared_ptr<const ObjectRecord> record(const ObjectKey& key) const {
    std::shared_lock lock(mu_);
    auto it = objects_.find(key);
    if (it == objects_.end()) throw Error(Errc::NotFound, key.str());
    return it->second;
  }

  bool exists(const ObjectKey& key) const override {
    std::shared_lock lock(mu_);
    return objects_.count(key) != 0;
  }

  std::vector<ObjectKey> list(std::string_view bucket,
                              std::string_view prefix) const override {
    std::vector<ObjectKey> out;
    std::shared_lock lock(mu_);
    ObjectKey lo{std::string(bucket), std::string(prefix)};
    for (auto it = objects_.lower_bound(lo);
         it != objects_.end() && it->first.bucket == bucket &&
         std::string_view(it->first.key).starts_with(prefix);
         ++it)
      out.push_back(it->first);
    return out;
  }

  std::size_t delete_prefix(std::string_view bucket,
                            std::string_view prefix) override {
    std::unique_lock lock(mu_);
    ObjectKey lo{std::string(bucket), std::string(prefix)};
    auto first = objects_.lower_bound(lo);
    auto last = first;
    std::size_t n = 0;
    while (last != objects_.end() && last->first.bucket == bucket &&
           std::string_view(last->first.key).starts_with(prefix)) {
      ++last;
      ++n;
    }
    objects_.erase(first, last);
    return n;
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return objects_.size();
  }

 private:
  mutable std::shared_mutex mu_;
  std::map<ObjectKey, std::shared_ptr<const ObjectRecord>> objects_;
};

/// One file per object at `<root>/<bucket>/<key>`, bytes verbatim. Overwrites
/// go through a temp file and rename(2), so readers see old or new, never a
/// mix. Temp names contain '~', which no valid key can, so listing skips them.
class FileStore final : public ObjectStore {
 public:
  explicit FileStore(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw Error(Errc::IoError, root_.string() + ": " + ec.message());
  }

  const std::filesystem::path& root() const { return root_; }

  void put(const ObjectKey& key, std::string data) override {
    require_valid(key);
    namespace fs = std::filesystem;
    std::shared_lock lock(mu_);
    fs::path target = path_of(key);
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw io_error(target, ec.value());

    fs::path tmp = target;
    tmp += "~tmp." + std::to_string(seq_.fetch_add(1)) + "." +
           std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
      std::FILE* f = std::fopen(tmp.c_str(), "wb");
      if (!f) throw io_error(tmp, errno);
      bool ok = data.empty() ||
                std::fwrite(data.data(), 1, data.size(), f) == data.size();
      int err = ok ? 0 : errno;
      if (std::fclose(f) != 0 && ok) {
        ok = false;
        err = errno;
      }
      if (!ok) {
        fs::remove(tmp, ec);
        throw io_error(tmp, err);
      }
    }
    fs::rename(tmp, target, ec);
    if (ec) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw io_error(target, ec.value());
    }
  }

  std::string get(const ObjectKey& key) const override {
    require_valid(key);
    std::ifstream in(path_of(key), std::ios::binary);
    if (!in || std::filesystem::is_directory(path_of(key)))
      throw Error(Errc::NotFound, key.str());
    std::string out((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    return out;
  }

  bool exists(const ObjectKey& key) const override {
    if (!is_valid(key)) return false;
    return std::filesystem::is_regular_file(path_of(key));
  }

  std::vector<ObjectKey> list(std::string_view bucket,
                              std::string_view prefix) const override {
    namespace fs = std::filesystem;
    std::vector<ObjectKey> out;
    if (!is_valid_bucket(bucket)) return out;
    fs::path base = root_ / std::string(bucket);
    std::error_code ec;
    if (!fs::is_directory(base, ec)) return out;
    for (auto it = fs::recursive_directory_iterator(base, ec);
         !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
      if (!it->is_regular_file(ec)) continue;
      std::string rel = it->path().lexically_relative(base).generic_string();
      if (!is_valid_key(rel) || !std::string_view(rel).starts_with(prefix))
        continue;
      out.push_back({std::string(bucket), std::move(rel)});
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t delete_prefix(std::string_view bucket,
                            std::string_view prefix) override {
    namespace fs = std::filesystem;
    auto keys = list(bucket, prefix);
    std::unique_lock lock(mu_);
    std::size_t n = 0;
    std::error_code ec;
    for (const auto& k : keys)
      if (fs::remove(path_of(k), ec)) ++n;
    // Prune directories emptied by the removal, deepest first.
    fs::path base = root_ / std::string(bucket);
    for (const auto& k : keys) {
      for (fs::path dir = path_of(k).parent_path();
           dir != base && dir.string().size() > base.string().size();
           dir = dir.parent_path()) {
        if (!fs::is_empty(dir, ec) || ec || !fs::remove(dir, ec)) break;
      }
    }
    return n;
  }

 private:
  std::filesystem::path path_of(const ObjectKey& key) const {
    return root_ / key.bucket / key.key;
  }

  static Error io_error(const std::filesystem::path& p, int err) {
    auto code = err == ENOSPC || err == EDQUOT ? Errc::StorageFull : Errc::IoError;
    return Error(code, p.string() + ": " + std::generic_category().message(err));
  }

  std::filesystem::path root_;
  // Puts share the lock; delete_prefix takes it exclusively so directory
  // pruning cannot race a put's create_directories.
  mutable std::shared_mutex mu_;
  std::atomic<std::uint64_t> seq_{0};
};

}  // namespace smr
