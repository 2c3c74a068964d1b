#include "forge/synth/synthesis.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <set>

#include "forge/fusion/fused_json.hpp"
#include "forge/gateway/gateway.hpp"

namespace forge::synth {

using fusion::AttributeFact;
using fusion::Confidence;
using fusion::FusedFact;
using graph::Predicate;
using graph::RelationEdge;

std::string_view to_string(Generator g) { return g == Generator::template_path ? "template" : "external"; }

Generator parse_generator(std::string_view s) {
  if (s == "template") return Generator::template_path;
  if (s == "external") return Generator::external;
  throw std::invalid_argument("unknown generator '" + std::string(s) + "'");
}

std::string words_of(std::string_view token) {
  std::string out(token);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

std::string conjugate(std::string_view verb) {
  std::string lower;
  for (char c : verb) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const auto cut = lower.find('_');
  std::string head = lower.substr(0, cut);
  const std::string tail = cut == std::string::npos ? "" : words_of(lower.substr(cut));
  auto ends = [&](std::string_view s) { return head.size() >= s.size() && head.ends_with(s); };
  auto vowel = [](char c) { return std::string_view("aeiou").find(c) != std::string_view::npos; };
  if (head.empty()) return head + tail;
  if (ends("s") || ends("sh") || ends("ch") || ends("x") || ends("z") || ends("o")) head += "es";
  else if (head.size() >= 2 && head.back() == 'y' && !vowel(head[head.size() - 2])) head = head.substr(0, head.size() - 1) + "ies";
  else head += "s";
  return head + tail;
}

namespace {

std::string slot_of(const FusedFact& f) { return f.id.substr(0, f.id.rfind('@')); }

std::string article_for(std::string_view next_word) {
  return !next_word.empty() && std::string_view("aeiou").find(next_word[0]) != std::string_view::npos ? "an" : "a";
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string hedge(const FusedFact& f) { return f.confidence == Confidence::low ? std::string(kHedges[0]) + " " : ""; }

/// Subject phrase for an attribute sentence; a scene-level `x_count` reads as "x count".
std::string attribute_subject(const AttributeFact& a) {
  if (a.entity == graph::kSceneEntity && a.key.ends_with("_count")) return words_of(a.key);
  return words_of(a.entity) + " " + words_of(a.key);
}

std::int64_t order_key(const Predicate& p) { return p.temporal_index.value_or(std::numeric_limits<std::int64_t>::max()); }

class CaptionBuilder {
 public:
  explicit CaptionBuilder(const FusedGraph& g) : g_(g) {
    for (const auto& f : g.facts)
      if (f.confidence == Confidence::high) high_slots_.insert(slot_of(f));
  }

  CaptionItem build() {
    std::vector<const FusedFact*> preds;
    std::map<std::string, std::vector<const FusedFact*>> attrs;
    for (const auto& f : g_.facts) {
      if (!visible(f)) continue;
      if (std::holds_alternative<Predicate>(f.body)) preds.push_back(&f);
      else if (const auto* a = std::get_if<AttributeFact>(&f.body)) {
        if (a->key != "category") attrs[a->entity].push_back(&f);
      }
    }
    std::stable_sort(preds.begin(), preds.end(), [](const FusedFact* a, const FusedFact* b) {
      return order_key(std::get<Predicate>(a->body)) < order_key(std::get<Predicate>(b->body));
    });

    for (const auto* f : preds) predicate_sentence(*f, attrs);

    for (auto& [entity, list] : attrs) {
      if (entity != graph::kSceneEntity && !mentioned_.count(entity)) existence_sentence(entity, list);
      for (const auto* f : list) {
        if (used_.count(f)) continue;
        const auto& a = std::get<AttributeFact>(f->body);
        sentence(capitalize("the " + attribute_subject(a) + " is " + hedge(*f) + words_of(a.value)), {f});
      }
    }

    CaptionItem item;
    item.generator = Generator::template_path;
    if (sentences_.empty()) {
      item.text = std::string(kNoContent);
      return item;
    }
    for (std::size_t i = 0; i < sentences_.size(); ++i) item.text += (i ? " " : "") + sentences_[i];
    item.supporting_facts = std::move(cited_);
    return item;
  }

 private:
  bool visible(const FusedFact& f) const {
    return f.confidence == Confidence::high || !high_slots_.count(slot_of(f));
  }

  const FusedFact* take_attr(std::vector<const FusedFact*>& list, std::string_view key) {
    for (const auto* f : list)
      if (!used_.count(f) && std::get<AttributeFact>(f->body).key == key) {
        used_.insert(f);
        return f;
      }
    return nullptr;
  }

  std::string noun_phrase(const std::string& entity, std::map<std::string, std::vector<const FusedFact*>>& attrs,
                          std::vector<const FusedFact*>& support) {
    if (mentioned_.count(entity)) return "the " + words_of(entity);
    mentioned_.insert(entity);
    std::string adjective;
    if (auto it = attrs.find(entity); it != attrs.end()) {
      if (const auto* color = take_attr(it->second, "color")) {
        adjective = hedge(*color) + words_of(std::get<AttributeFact>(color->body).value) + " ";
        support.push_back(color);
      }
    }
    const std::string rest = adjective + words_of(entity);
    return article_for(rest) + " " + rest;
  }

  void predicate_sentence(const FusedFact& f, std::map<std::string, std::vector<const FusedFact*>>& attrs) {
    const auto& p = std::get<Predicate>(f.body);
    std::vector<const FusedFact*> support{&f};
    std::string s = noun_phrase(p.subject(), attrs, support);
    if (f.confidence == Confidence::low) s += " " + std::string(kHedges[0]);
    s += " " + conjugate(p.verb);
    if (auto m = p.arg("motion")) s += " " + words_of(*m);
    if (auto d = p.arg("direction")) s += " " + words_of(*d);
    if (auto t = p.arg("target")) {
      s += " toward the " + words_of(*t);
      mentioned_.insert(std::string(*t));
    }
    if (auto pl = p.arg("place")) s += " in the " + words_of(*pl);
    sentence(capitalize(s), support);
  }

  void existence_sentence(const std::string& entity, std::vector<const FusedFact*>& list) {
    mentioned_.insert(entity);
    std::vector<const FusedFact*> support;
    std::string rest = words_of(entity);
    if (const auto* color = take_attr(list, "color")) {
      rest = hedge(*color) + words_of(std::get<AttributeFact>(color->body).value) + " " + rest;
      support.push_back(color);
    }
    std::string s = "there is " + article_for(rest) + " " + rest;
    if (const auto* place = take_attr(list, "place")) {
      s += " " + hedge(*place) + "in the " + words_of(std::get<AttributeFact>(place->body).value);
      support.push_back(place);
    }
    if (!support.empty()) sentence(capitalize(s), support);
  }

  void sentence(std::string text, const std::vector<const FusedFact*>& support) {
    sentences_.push_back(std::move(text) + ".");
    for (const auto* f : support) {
      used_.insert(f);
      if (std::find(cited_.begin(), cited_.end(), f->id) == cited_.end()) cited_.push_back(f->id);
    }
  }

  const FusedGraph& g_;
  std::set<std::string> high_slots_;
  std::set<std::string> mentioned_;
  std::set<const FusedFact*> used_;
  std::vector<std::string> sentences_;
  std::vector<std::string> cited_;
};

std::optional<QAItem> motion_item(const FusedFact& f) {
  if (const auto* p = std::get_if<Predicate>(&f.body)) {
    auto m = p->arg("motion");
    if (!m) return std::nullopt;
    QAItem q;
    const std::string subj = words_of(p->subject());
    q.question = "How is the " + subj + " moving?";
    q.answer = "The " + subj + " " + conjugate(p->verb) + " " + words_of(*m);
    q.attributes["motion"] = std::string(*m);
    if (auto d = p->arg("direction")) {
      q.answer += " " + words_of(*d);
      q.attributes["direction"] = std::string(*d);
    }
    q.answer += ".";
    return q;
  }
  if (const auto* e = std::get_if<RelationEdge>(&f.body)) {
    QAItem q;
    q.question = "How is the " + words_of(e->from_id) + " related to the " + words_of(e->to_id) + "?";
    q.answer = "The " + words_of(e->from_id) + " is related to the " + words_of(e->to_id) + " by " +
               words_of(e->label) + ".";
    q.attributes["relation"] = e->label;
    return q;
  }
  return std::nullopt;
}

std::optional<QAItem> appearance_item(const FusedFact& f) {
  if (const auto* a = std::get_if<AttributeFact>(&f.body)) {
    QAItem q;
    if (a->key == "category") {
      q.question = "What kind of object is the " + words_of(a->entity) + "?";
      q.answer = "The " + words_of(a->entity) + " is " + article_for(a->value) + " " + words_of(a->value) + ".";
    } else {
      q.question = "What is the " + words_of(a->key) + " of the " + words_of(a->entity) + "?";
      q.answer = "The " + attribute_subject(*a) + " is " + words_of(a->value) + ".";
    }
    q.attributes[a->key] = a->value;
    return q;
  }
  if (const auto* p = std::get_if<Predicate>(&f.body)) {
    QAItem q;
    const std::string action = conjugate(p->verb);
    q.question = "What is the " + words_of(p->subject()) + " doing?";
    q.answer = "The " + words_of(p->subject()) + " " + action + ".";
    q.attributes["action"] = action;
    return q;
  }
  return std::nullopt;
}

std::optional<QAItem> geometry_item(const FusedFact& f) {
  if (const auto* a = std::get_if<AttributeFact>(&f.body)) {
    QAItem q;
    if (a->key == "place" || a->key == "position") {
      q.question = "Where is the " + words_of(a->entity) + "?";
      q.answer = "The " + words_of(a->entity) + " is in the " + words_of(a->value) + ".";
    } else {
      const std::string subject = attribute_subject(*a);
      q.question = "What is the " + subject + "?";
      q.answer = "The " + subject + " is " + words_of(a->value) + ".";
    }
    q.attributes[a->key] = a->value;
    return q;
  }
  if (const auto* p = std::get_if<Predicate>(&f.body)) {
    auto pl = p->arg("place");
    if (!pl) return std::nullopt;
    QAItem q;
    std::string base;
    for (char c : p->verb) base += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    q.question = "Where does the " + words_of(p->subject()) + " " + words_of(base) + "?";
    q.answer = "The " + words_of(p->subject()) + " " + conjugate(p->verb) + " in the " + words_of(*pl) + ".";
    q.attributes["place"] = std::string(*pl);
    return q;
  }
  return std::nullopt;
}

}  // namespace

CaptionItem synthesize_caption(const FusedGraph& g) { return CaptionBuilder(g).build(); }

std::vector<QAItem> synthesize_vqa(const FusedGraph& g, std::size_t max_items) {
  std::vector<QAItem> items;
  // Attribute facts are preferred over predicates within a class, and edges come last.
  // Motion prefers predicates.
  auto rank = [](const FusedFact& f) {
    if (std::holds_alternative<RelationEdge>(f.body)) return 2;
    const bool attr = std::holds_alternative<AttributeFact>(f.body);
    return (f.field == FieldClass::motion) == attr ? 1 : 0;
  };
  std::vector<const FusedFact*> ordered;
  for (const auto& f : g.facts)
    if (f.confidence == Confidence::high) ordered.push_back(&f);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [&](const FusedFact* a, const FusedFact* b) { return rank(*a) < rank(*b); });

  for (FieldClass cls : {FieldClass::motion, FieldClass::appearance, FieldClass::geometry}) {
    if (items.size() >= max_items) break;
    for (const auto* f : ordered) {
      if (f->field != cls) continue;
      std::optional<QAItem> q = cls == FieldClass::motion       ? motion_item(*f)
                                : cls == FieldClass::appearance ? appearance_item(*f)
                                                                : geometry_item(*f);
      if (!q) continue;
      q->field_class = cls;
      q->supporting_facts = {f->id};
      items.push_back(std::move(*q));
      break;
    }
  }
  return items;
}

namespace {

std::set<std::string> lower_words(std::string_view text) {
  std::set<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!cur.empty()) out.insert(std::exchange(cur, {}));
  }
  if (!cur.empty()) out.insert(cur);
  return out;
}

std::vector<std::string> gold_values(const FusedGraph& g, const std::vector<std::string>& ids) {
  std::vector<std::string> out;
  for (const auto& id : ids) {
    const auto* f = g.find_fact(id);
    if (!f || f->confidence != Confidence::high) continue;
    if (const auto* a = std::get_if<AttributeFact>(&f->body)) out.push_back(a->value);
    else if (const auto* p = std::get_if<Predicate>(&f->body)) {
      for (const char* role : {"motion", "direction", "place", "target"})
        if (auto v = p->arg(role)) out.emplace_back(*v);
    }
  }
  return out;
}

bool preserves(std::string_view paraphrase, const std::vector<std::string>& values) {
  const auto have = lower_words(paraphrase);
  for (const auto& v : values)
    for (const auto& w : lower_words(v))
      if (!have.count(w)) return false;
  return true;
}

std::string paraphrase_prompt(std::string_view text, const FusedGraph& g) {
  std::string facts;
  for (const auto& f : g.facts)
    facts += f.id + " [" + std::string(fusion::to_string(f.source)) + ", " +
             std::string(fusion::to_string(f.confidence)) + "] " + fusion::describe(f.body) + "\n";
  std::string p = "Rewrite the text fluently. Keep every fact; add none. Keep hedges on low-confidence facts.\n";
  p += gateway::prompt_block("text", text);
  p += gateway::prompt_block("facts", facts);
  p += gateway::prompt_block("policy_trace", fusion::trace_to_json(g).dump());
  return p;
}

}  // namespace

CaptionItem paraphrase_caption(const CaptionItem& item, const FusedGraph& g, gateway::Gateway& gw) {
  if (item.supporting_facts.empty()) return item;
  const std::string text = gw.complete({gateway::Task::paraphrase, paraphrase_prompt(item.text, g), {}});
  if (text.empty() || !preserves(text, gold_values(g, item.supporting_facts))) return item;
  CaptionItem out = item;
  out.text = text;
  out.generator = Generator::external;
  return out;
}

QAItem paraphrase_question(const QAItem& item, const FusedGraph& g, gateway::Gateway& gw) {
  const std::string text = gw.complete({gateway::Task::paraphrase, paraphrase_prompt(item.question, g), {}});
  // The question must keep naming what the answer describes; the answer and key stay fixed.
  std::vector<std::string> anchors;
  for (const auto& id : item.supporting_facts) {
    if (const auto* f = g.find_fact(id)) {
      if (const auto* a = std::get_if<AttributeFact>(&f->body)) anchors.push_back(a->entity);
      else if (const auto* p = std::get_if<Predicate>(&f->body)) anchors.push_back(p->subject());
      else anchors.push_back(std::get<RelationEdge>(f->body).from_id);
    }
  }
  if (text.empty() || !preserves(text, anchors)) return item;
  QAItem out = item;
  out.question = text;
  out.generator = Generator::external;
  return out;
}

namespace {

nlohmann::json provenance(const FusedGraph& g, const std::vector<std::string>& ids) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& id : ids) {
    const auto* f = g.find_fact(id);
    if (!f) continue;
    arr.push_back({{"fact_id", f->id},
                   {"source", std::string(fusion::to_string(f->source))},
                   {"confidence", std::string(fusion::to_string(f->confidence))},
                   {"field", std::string(fusion::to_string(f->field))},
                   {"rule", f->rule}});
  }
  return arr;
}

}  // namespace

std::vector<nlohmann::json> synthesize_records(const FusedGraph& g, Generator mode, gateway::Gateway* gw,
                                               std::string_view item_id) {
  if (mode == Generator::external && !gw) throw std::invalid_argument("external synthesis needs a gateway");
  std::vector<nlohmann::json> out;

  CaptionItem caption = synthesize_caption(g);
  if (mode == Generator::external) caption = paraphrase_caption(caption, g, *gw);
  out.push_back({{"kind", "caption"},
                 {"item_id", std::string(item_id)},
                 {"caption", {{"text", caption.text}, {"supporting_facts", caption.supporting_facts}}},
                 {"provenance", provenance(g, caption.supporting_facts)},
                 {"generator", std::string(to_string(caption.generator))},
                 {"template_version", std::string(kTemplateVersion)}});

  for (QAItem q : synthesize_vqa(g)) {
    if (mode == Generator::external) q = paraphrase_question(q, g, *gw);
    out.push_back({{"kind", "qa"},
                   {"item_id", std::string(item_id)},
                   {"qa",
                    {{"question", q.question},
                     {"answer", q.answer},
                     {"attributes", q.attributes},
                     {"field_class", std::string(fusion::to_string(q.field_class))},
                     {"supporting_facts", q.supporting_facts}}},
                   {"provenance", provenance(g, q.supporting_facts)},
                   {"generator", std::string(to_string(q.generator))},
                   {"template_version", std::string(kTemplateVersion)}});
  }
  return out;
}

}  // namespace forge::synth
