#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "forge/graph/scene_graph.hpp"

namespace forge::graph {

/// Parses `Verb(key=value, ...)`. Throws forge::ParseError with the byte offset of the
/// problem, including duplicate keys.
Predicate parse_predicate(std::string_view text);

/// Canonical text of a predicate: role args in role order, then extra attrs sorted by key.
std::string render_predicate(const Predicate& p);

/// Parses a structured caption (predicate, attribute, rel and deg lines; `#` comments)
/// into a graph. Entities are created on first mention; motion predicates get a
/// temporal_index by line order.
SceneGraph parse_caption_to_graph(std::string_view caption, Modality modality, std::int64_t frame_ref = 0);

/// Writes a graph back out in the line grammar.
std::string render_caption(const SceneGraph& g);

/// True when `s` matches [a-z][a-z0-9_]*.
bool is_ident(std::string_view s);
/// True when `s` is a valid value token.
bool is_token(std::string_view s);

}  // namespace forge::graph
