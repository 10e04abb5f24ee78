#pragma once

#include <map>
#include <string>
#include <string_view>

namespace crosscheck {

// Named prompt templates with {PLACEHOLDER} substitution. Built-in defaults
// ship in code; a template directory overrides any of them with files named
// "<name>.txt".
class PromptTemplates {
 public:
  PromptTemplates();
  explicit PromptTemplates(const std::string& directory);

  const std::string& raw(const std::string& name) const;
  std::string render(const std::string& name, const std::map<std::string, std::string>& values) const;

  // Writes the built-in defaults as editable files (one per template name).
  static void write_defaults(const std::string& directory);

 private:
  std::map<std::string, std::string> templates_;
};

}  // namespace crosscheck
