#pragma once

#include <string>
#include <string_view>

namespace forge::graph {

/// Normalizes a surface mention to a lowercase snake_case entity name: lowercases, turns
/// whitespace and punctuation runs into single underscores, strips leading articles and
/// singularizes the head noun through a fixed plural table. Idempotent.
/// Throws forge::Error when nothing is left.
std::string canonicalize_entity(std::string_view surface);

}  // namespace forge::graph
