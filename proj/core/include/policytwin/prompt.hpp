#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "policytwin/categories.hpp"
#include "policytwin/date.hpp"
#include "policytwin/persona.hpp"

namespace policytwin {

/// The situation an agent is asked about.
struct SimContext {
  Date date;
  double stringency = 0.0;  // [0,100]
  std::map<std::string, std::string> extra;

  void validate() const;
  /// Stable digest over date, stringency and extras.
  std::string digest() const;
};

struct PromptText {
  std::string text;
  std::string persona_id;
  std::string context_digest;
};

/// Fills `{name}` placeholders (name = [A-Za-z_][A-Za-z0-9_]*). Braces that do
/// not enclose such a name are copied through, so JSON examples survive.
///
/// Lookup order: persona attributes, then `date`, `stringency`, `persona_id`,
/// then context extras, then the list placeholders `persona_attributes`
/// ("- name: value" lines) and `categories` ("- \"key\"" lines; needs `keys`).
/// Anything unresolved throws ConfigError naming the placeholder.
PromptText render_prompt(const Persona& persona, const SimContext& context,
                         std::string_view prompt_template, const CategoryKeys* keys = nullptr);

/// Placeholder names in order of first appearance.
std::vector<std::string> template_placeholders(std::string_view prompt_template);

std::string load_prompt_template(const std::filesystem::path& path);

/// "name=value" pairs joined in key order; identifies a persona's content.
std::string canonical_attributes(const Persona& persona);

}  // namespace policytwin
