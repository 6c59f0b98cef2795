#pragma once

#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace policytwin {

/// Immutable, shared, ordered list of behavior-category keys. Copies are
/// cheap; equality compares contents.
class CategoryKeys {
 public:
  CategoryKeys() = default;
  explicit CategoryKeys(std::vector<std::string> keys);

  std::size_t size() const { return keys_ ? keys_->size() : 0; }
  bool empty() const { return size() == 0; }
  const std::string& operator[](std::size_t k) const { return (*keys_)[k]; }
  std::optional<std::size_t> index_of(std::string_view key) const;
  const std::vector<std::string>& list() const;

  auto begin() const { return list().begin(); }
  auto end() const { return list().end(); }

  friend bool operator==(const CategoryKeys& a, const CategoryKeys& b);

 private:
  std::shared_ptr<const std::vector<std::string>> keys_;
};

/// One behavioral dimension and how it lines up with an observed metric.
struct CategorySpec {
  std::string key;              // engine response field, e.g. "stay_home_prob"
  std::string observed_column;  // column in the observations CSV
  std::string label;            // display name, e.g. "Residential"
  int direction = 0;            // expected response to stricter policy: -1, 0 or +1
  double clip_min = -100.0;
  double clip_max = 200.0;
};

/// Ordered category schema for a domain profile.
class CategorySchema {
 public:
  CategorySchema() = default;
  explicit CategorySchema(std::vector<CategorySpec> specs);

  std::size_t size() const { return specs_.size(); }
  const CategorySpec& operator[](std::size_t k) const { return specs_[k]; }
  const std::vector<CategorySpec>& specs() const { return specs_; }
  const CategoryKeys& keys() const { return keys_; }
  std::optional<std::size_t> index_of(std::string_view key) const { return keys_.index_of(key); }

  /// The six-category pandemic profile with its default column names.
  static CategorySchema pandemic_default();

 private:
  std::vector<CategorySpec> specs_;
  CategoryKeys keys_;
};

void to_json(nlohmann::json& j, const CategorySpec& spec);
void from_json(const nlohmann::json& j, CategorySpec& spec);

}  // namespace policytwin
