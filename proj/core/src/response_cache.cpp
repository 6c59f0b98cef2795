#include "policytwin/response_cache.hpp"

#include <chrono>
#include <nlohmann/json.hpp>

#include "policytwin/error.hpp"

namespace policytwin {
namespace {

nlohmann::json to_line(const CacheEntry& e) {
  nlohmann::json vec = nlohmann::json::object();
  for (std::size_t k = 0; k < e.categories.size() && k < e.values.size(); ++k) vec[e.categories[k]] = e.values[k];
  return nlohmann::json{{"key", e.key},     {"engine", e.engine},       {"raw", e.raw},
                        {"vector", vec},    {"categories", e.categories}, {"timestamp", e.timestamp}};
}

CacheEntry from_line(const nlohmann::json& j) {
  CacheEntry e;
  e.key = j.at("key").get<std::string>();
  e.engine = j.value("engine", "");
  e.raw = j.value("raw", "");
  e.categories = j.at("categories").get<std::vector<std::string>>();
  const auto& vec = j.at("vector");
  for (const auto& c : e.categories) e.values.push_back(vec.at(c).get<double>());
  e.timestamp = j.value("timestamp", std::int64_t{0});
  return e;
}

}  // namespace

ResponseCache::ResponseCache(const std::filesystem::path& file) : path_(file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  bool needs_newline = false;
  if (std::ifstream in{file, std::ios::binary}) {
    std::string line;
    while (std::getline(in, line)) {
      needs_newline = in.eof();  // last line had no terminator: a torn append
      if (line.empty()) continue;
      try {
        CacheEntry e = from_line(nlohmann::json::parse(line));
        entries_[e.key] = std::move(e);
      } catch (const nlohmann::json::exception&) {
        ++skipped_;
      }
    }
  }
  out_.open(file, std::ios::binary | std::ios::app);
  if (!out_) throw EngineError("cannot open response cache " + file.string() + " for append");
  if (needs_newline) out_ << '\n' << std::flush;
}

std::optional<CacheEntry> ResponseCache::get(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(CacheEntry entry) {
  if (entry.timestamp == 0) {
    entry.timestamp = std::chrono::duration_cast<std::chrono::seconds>(
                          std::chrono::system_clock::now().time_since_epoch())
                          .count();
  }
  std::unique_lock lock(mutex_);
  if (out_.is_open()) {
    out_ << to_line(entry).dump() << '\n' << std::flush;
    if (!out_) throw EngineError("failed appending to response cache " + path_->string());
  }
  entries_[entry.key] = std::move(entry);
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

}  // namespace policytwin
