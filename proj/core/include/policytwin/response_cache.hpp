#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace policytwin {

struct CacheEntry {
  std::string key;     // digest of (engine identity, prompt, categories, ...)
  std::string engine;  // engine identity, for audit
  std::string raw;     // raw engine response
  std::vector<std::string> categories;
  std::vector<double> values;  // parsed vector, category order
  std::int64_t timestamp = 0;  // unix seconds at insertion
};

/// Prompt-digest keyed response store. With a file it is backed by
/// line-delimited JSON: existing lines are loaded on open, new entries are
/// appended and flushed one line at a time. A torn or corrupt line is
/// skipped on load. Later lines win over earlier ones with the same key.
///
/// Readers share a lock; writers are serialized.
class ResponseCache {
 public:
  ResponseCache() = default;  // memory only
  explicit ResponseCache(const std::filesystem::path& file);

  ResponseCache(const ResponseCache&) = delete;
  ResponseCache& operator=(const ResponseCache&) = delete;

  std::optional<CacheEntry> get(const std::string& key) const;
  void put(CacheEntry entry);

  std::size_t size() const;
  std::size_t skipped_lines() const { return skipped_; }
  const std::optional<std::filesystem::path>& file() const { return path_; }

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, CacheEntry> entries_;
  std::optional<std::filesystem::path> path_;
  std::ofstream out_;
  std::size_t skipped_ = 0;
};

}  // namespace policytwin
