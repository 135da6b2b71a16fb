#pragma once

// Minimal XML well-formedness check for the generated SVG: balanced tags,
// a single <svg> root with a viewBox, quoted attributes.

#include <regex>
#include <string>
#include <vector>

namespace svgcheck {

struct Result {
  bool ok = false;
  std::string error;
};

inline Result well_formed(const std::string& doc) {
  std::vector<std::string> stack;
  std::size_t roots = 0;
  bool root_has_viewbox = false;
  std::size_t i = 0;
  const std::regex attr_re(R"re(\s+[A-Za-z_:][-A-Za-z0-9_:.]*="[^"<]*")re");
  while (true) {
    const auto lt = doc.find('<', i);
    if (lt == std::string::npos) break;
    const auto gt = doc.find('>', lt);
    if (gt == std::string::npos) return {false, "unterminated tag"};
    std::string tag = doc.substr(lt + 1, gt - lt - 1);
    i = gt + 1;
    if (tag.starts_with("?")) continue;
    if (tag.starts_with("/")) {
      const std::string name = tag.substr(1);
      if (stack.empty() || stack.back() != name) return {false, "mismatched </" + name + ">"};
      stack.pop_back();
      continue;
    }
    const bool self_closing = tag.ends_with("/");
    if (self_closing) tag.pop_back();
    const auto name_end = tag.find_first_of(" \t\n");
    const std::string name = tag.substr(0, name_end);
    const std::string attrs = name_end == std::string::npos ? "" : tag.substr(name_end);
    if (!std::regex_replace(attrs, attr_re, "").empty() &&
        std::regex_replace(attrs, attr_re, "").find_first_not_of(" \t\n") != std::string::npos) {
      return {false, "bad attributes in <" + name + ">"};
    }
    if (stack.empty()) {
      ++roots;
      if (name != "svg") return {false, "root is not svg"};
      root_has_viewbox = attrs.find("viewBox=\"") != std::string::npos;
    }
    if (!self_closing) stack.push_back(name);
  }
  if (!stack.empty()) return {false, "unclosed <" + stack.back() + ">"};
  if (roots != 1) return {false, "expected a single root"};
  if (!root_has_viewbox) return {false, "missing viewBox"};
  return {true, ""};
}

inline std::size_t count(const std::string& doc, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = doc.find(needle); p != std::string::npos; p = doc.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace svgcheck
