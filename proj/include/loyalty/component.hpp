#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace loyalty {

enum class Component { Recency, Frequency, Monetary };

inline constexpr std::array<Component, 3> kComponents = {Component::Recency, Component::Frequency,
                                                         Component::Monetary};

constexpr char component_code(Component c) {
  switch (c) {
    case Component::Recency: return 'R';
    case Component::Frequency: return 'F';
    case Component::Monetary: return 'M';
  }
  return '?';
}

constexpr std::optional<Component> component_from_code(std::string_view code) {
  if (code == "R") return Component::Recency;
  if (code == "F") return Component::Frequency;
  if (code == "M") return Component::Monetary;
  return std::nullopt;
}

}  // namespace loyalty
