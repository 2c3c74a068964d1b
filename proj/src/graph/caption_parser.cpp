#include "forge/graph/caption_parser.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "forge/common/error.hpp"
#include "forge/graph/canonical.hpp"

namespace forge::graph {

namespace {

bool lower_alpha(char c) { return c >= 'a' && c <= 'z'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

// Cursor over one line; errors carry the line number and the column of the cursor.
class Cursor {
 public:
  Cursor(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) {
      fail(std::string("expected '") + c + "'" +
           (pos_ < text_.size() ? std::string(", found '") + text_[pos_] + "'" : std::string(" at end of line")));
    }
    ++pos_;
  }

  std::string ident(const char* what) {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ >= text_.size() || !lower_alpha(text_[pos_])) fail(std::string("expected ") + what);
    while (pos_ < text_.size() && (lower_alpha(text_[pos_]) || digit(text_[pos_]) || text_[pos_] == '_')) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string verb() {
    skip_ws();
    const std::size_t start = pos_;
    auto alpha = [](char c) { return lower_alpha(c) || (c >= 'A' && c <= 'Z'); };
    if (pos_ >= text_.size() || !alpha(text_[pos_])) fail("expected predicate name");
    while (pos_ < text_.size() && (alpha(text_[pos_]) || digit(text_[pos_]) || text_[pos_] == '_')) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string token() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ >= text_.size() || !(lower_alpha(text_[pos_]) || digit(text_[pos_]))) fail("expected value token");
    while (pos_ < text_.size() &&
           (lower_alpha(text_[pos_]) || digit(text_[pos_]) || text_[pos_] == '_' || text_[pos_] == '.'))
      ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::size_t pos() const { return pos_; }
  void set_pos(std::size_t p) { pos_ = p; }

 private:
  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

Predicate parse_predicate_at(Cursor& cur) {
  Predicate p;
  p.verb = cur.verb();
  cur.expect('(');
  std::set<std::string> seen;
  do {
    const std::size_t key_at = cur.pos();
    std::string key = cur.ident("argument key");
    cur.expect('=');
    std::string value = cur.token();
    if (!seen.insert(key).second) {
      cur.set_pos(key_at);
      cur.skip_ws();
      cur.fail("duplicate argument key '" + key + "'");
    }
    (is_arg_role(key) ? p.args : p.attrs).emplace(std::move(key), std::move(value));
  } while (cur.peek(',') && (cur.expect(','), true));
  cur.expect(')');
  if (!cur.at_end()) cur.fail("unexpected trailing input");
  if (!p.args.contains("subject")) cur.fail("predicate '" + p.verb + "' has no subject argument");
  return p;
}

struct PendingRelation {
  RelationEdge edge;
  std::size_t line;
};

class GraphBuilder {
 public:
  EntityNode& entity(const std::string& name) {
    auto [it, inserted] = entities_.try_emplace(name);
    if (inserted) {
      it->second.id = name;
      it->second.canonical_name = name;
    }
    return it->second;
  }

  bool has(const std::string& name) const { return entities_.contains(name); }

  std::vector<EntityNode> take_entities() {
    std::vector<EntityNode> out;
    for (auto& [_, e] : entities_) out.push_back(std::move(e));
    return out;
  }

 private:
  std::map<std::string, EntityNode> entities_;
};

std::string canonical_or_fail(Cursor& cur, const std::string& name) {
  try {
    return canonicalize_entity(name);
  } catch (const Error& e) {
    cur.fail(e.what());
  }
}

void set_attribute(Cursor& cur, EntityNode& e, const std::string& key, std::string value) {
  auto conflict = [&](const std::string& old) {
    cur.fail("conflicting values for " + e.canonical_name + "." + key + ": '" + old + "' vs '" + value + "'");
  };
  if (key == "category") {
    if (!e.category.empty() && e.category != value) conflict(e.category);
    e.category = std::move(value);
  } else if (key == "place") {
    if (e.place && *e.place != value) conflict(*e.place);
    e.place = std::move(value);
  } else {
    auto [it, inserted] = e.attributes.try_emplace(key, value);
    if (!inserted && it->second != value) conflict(it->second);
  }
}

}  // namespace

bool is_ident(std::string_view s) {
  if (s.empty() || !lower_alpha(s.front())) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return lower_alpha(c) || digit(c) || c == '_'; });
}

bool is_token(std::string_view s) {
  if (s.empty() || !(lower_alpha(s.front()) || digit(s.front()))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return lower_alpha(c) || digit(c) || c == '_' || c == '.'; });
}

Predicate parse_predicate(std::string_view text) {
  Cursor cur(text, 1);
  return parse_predicate_at(cur);
}

std::string render_predicate(const Predicate& p) {
  std::string out = p.verb + "(";
  bool first = true;
  auto emit = [&](const std::string& k, const std::string& v) {
    if (!first) out += ", ";
    first = false;
    out += k;
    out += '=';
    out += v;
  };
  for (auto role : kArgRoles)
    if (auto it = p.args.find(std::string(role)); it != p.args.end()) emit(it->first, it->second);
  for (const auto& [k, v] : p.attrs) emit(k, v);
  out += ')';
  return out;
}

SceneGraph parse_caption_to_graph(std::string_view caption, Modality modality, std::int64_t frame_ref) {
  GraphBuilder builder;
  std::vector<Predicate> predicates;
  std::vector<PendingRelation> relations;
  std::int64_t next_temporal = 0;

  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= caption.size()) {
    std::size_t eol = caption.find('\n', pos);
    if (eol == std::string_view::npos) eol = caption.size();
    std::string_view line = caption.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    ++line_no;

    Cursor cur(line, line_no);
    if (cur.at_end()) continue;
    if (cur.peek('#')) continue;

    const std::size_t start = cur.pos();
    const std::string head = line.substr(start).starts_with("rel(")   ? "rel"
                             : line.substr(start).starts_with("deg(") ? "deg"
                                                                      : "";
    if (head == "rel") {
      cur.set_pos(start + 3);
      cur.expect('(');
      std::string from = canonical_or_fail(cur, cur.ident("entity"));
      cur.expect(',');
      const std::size_t kind_at = cur.pos();
      std::string kind_tok = cur.ident("relation kind");
      auto kind = parse_relation_kind(kind_tok);
      if (!kind) {
        cur.set_pos(kind_at);
        cur.skip_ws();
        cur.fail("unknown relation kind '" + kind_tok + "'");
      }
      cur.expect(',');
      std::string to = canonical_or_fail(cur, cur.ident("entity"));
      cur.expect(')');
      if (!cur.at_end()) cur.fail("unexpected trailing input");
      relations.push_back({RelationEdge{from, to, *kind, kind_tok, {}}, line_no});
    } else if (head == "deg") {
      cur.set_pos(start + 3);
      cur.expect('(');
      std::string name = canonical_or_fail(cur, cur.ident("entity"));
      cur.expect(',');
      std::string kind = cur.ident("degradation kind");
      cur.expect(',');
      const std::size_t sev_at = cur.pos();
      std::string sev_tok = cur.ident("severity");
      auto sev = parse_severity(sev_tok);
      if (!sev) {
        cur.set_pos(sev_at);
        cur.skip_ws();
        cur.fail("severity must be mild or severe, got '" + sev_tok + "'");
      }
      cur.expect(')');
      if (!cur.at_end()) cur.fail("unexpected trailing input");
      auto label = DegradationLabel::from_token(kind, *sev);
      auto& degs = builder.entity(name).degradations;
      if (std::find(degs.begin(), degs.end(), label) == degs.end()) degs.push_back(std::move(label));
    } else {
      // attribute line if an identifier is followed by '.', otherwise a predicate
      std::size_t p = start;
      while (p < line.size() && (lower_alpha(line[p]) || digit(line[p]) || line[p] == '_')) ++p;
      if (p > start && p < line.size() && line[p] == '.') {
        std::string name = canonical_or_fail(cur, cur.ident("entity"));
        cur.expect('.');
        std::string key = cur.ident("attribute key");
        cur.expect('=');
        std::string value = cur.token();
        if (!cur.at_end()) cur.fail("unexpected trailing input");
        set_attribute(cur, builder.entity(name), key, std::move(value));
      } else {
        Predicate pred = parse_predicate_at(cur);
        for (const char* role : {"subject", "target"}) {
          if (auto it = pred.args.find(role); it != pred.args.end()) {
            it->second = canonical_or_fail(cur, it->second);
            builder.entity(it->second);
          }
        }
        if (pred.args.contains("motion")) pred.temporal_index = next_temporal++;
        predicates.push_back(std::move(pred));
      }
    }
    if (eol == caption.size()) break;
  }

  std::vector<RelationEdge> edges;
  for (auto& rel : relations) {
    for (const auto* end : {&rel.edge.from_id, &rel.edge.to_id}) {
      if (!builder.has(*end)) {
        throw ParseError("relation endpoint '" + *end + "' is never defined as an entity or predicate subject",
                         rel.line, 0);
      }
    }
    edges.push_back(std::move(rel.edge));
  }
  return SceneGraph::create(modality, builder.take_entities(), std::move(predicates), std::move(edges), frame_ref);
}

std::string render_caption(const SceneGraph& g) {
  std::string out;
  for (const auto& p : g.predicates()) out += render_predicate(p) + "\n";
  for (const auto& e : g.entities()) {
    if (!e.category.empty()) out += e.canonical_name + ".category=" + e.category + "\n";
    if (e.place) out += e.canonical_name + ".place=" + *e.place + "\n";
    for (const auto& [k, v] : e.attributes) out += e.canonical_name + "." + k + "=" + v + "\n";
    for (const auto& d : e.degradations)
      out += "deg(" + e.canonical_name + ", " + d.token() + ", " + std::string(to_string(d.severity)) + ")\n";
  }
  for (const auto& r : g.edges())
    out += "rel(" + r.from_id + ", " + std::string(to_string(r.kind)) + ", " + r.to_id + ")\n";
  return out;
}

}  // namespace forge::graph
