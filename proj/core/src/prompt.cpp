#include "policytwin/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "policytwin/csv.hpp"
#include "policytwin/digest.hpp"
#include "policytwin/error.hpp"

namespace policytwin {

void SimContext::validate() const {
  if (!(stringency >= 0.0 && stringency <= 100.0)) {
    throw DataError("stringency " + format_number(stringency) + " outside [0,100] on " + format_date(date));
  }
}

std::string SimContext::digest() const {
  std::string canon = format_date(date) + '\x1f' + format_number(stringency);
  for (const auto& [k, v] : extra) canon += '\x1f' + k + '=' + v;
  return short_digest(canon);
}

namespace {

bool ident_start(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

// Length of the identifier placeholder starting at text[pos] == '{', or 0.
std::size_t placeholder_length(std::string_view text, std::size_t pos) {
  std::size_t i = pos + 1;
  if (i >= text.size() || !ident_start(text[i])) return 0;
  while (i < text.size() && ident_char(text[i])) ++i;
  if (i >= text.size() || text[i] != '}') return 0;
  return i - pos + 1;
}

}  // namespace

std::vector<std::string> template_placeholders(std::string_view tmpl) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] != '{') continue;
    if (std::size_t len = placeholder_length(tmpl, i)) {
      std::string name(tmpl.substr(i + 1, len - 2));
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
      i += len - 1;
    }
  }
  return names;
}

PromptText render_prompt(const Persona& persona, const SimContext& context, std::string_view tmpl,
                         const CategoryKeys* keys) {
  context.validate();
  auto resolve = [&](const std::string& name) -> std::string {
    if (auto it = persona.attributes.find(name); it != persona.attributes.end()) return it->second;
    if (name == "date") return format_date(context.date);
    if (name == "stringency") return format_number(context.stringency);
    if (name == "persona_id") return persona.id;
    if (auto it = context.extra.find(name); it != context.extra.end()) return it->second;
    if (name == "persona_attributes") {
      std::string block;
      for (const auto& [k, v] : persona.attributes) block += "- " + k + ": " + v + "\n";
      if (!block.empty()) block.pop_back();
      return block;
    }
    if (name == "categories" && keys != nullptr) {
      std::string block;
      for (const auto& k : *keys) block += "- \"" + k + "\"\n";
      if (!block.empty()) block.pop_back();
      return block;
    }
    throw ConfigError("prompt placeholder {" + name + "} cannot be resolved for persona " + persona.id +
                      " (missing attribute '" + name + "')");
  };

  std::string out;
  out.reserve(tmpl.size() + 64);
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '{') {
      if (std::size_t len = placeholder_length(tmpl, i)) {
        out += resolve(std::string(tmpl.substr(i + 1, len - 2)));
        i += len - 1;
        continue;
      }
    }
    out.push_back(tmpl[i]);
  }
  return PromptText{std::move(out), persona.id, context.digest()};
}

std::string load_prompt_template(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open prompt template " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string canonical_attributes(const Persona& persona) {
  std::string out;
  for (const auto& [k, v] : persona.attributes) {
    if (!out.empty()) out += '\x1f';
    out += k + '=' + v;
  }
  return out;
}

}  // namespace policytwin
