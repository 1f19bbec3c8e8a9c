#include "xcoref/corpus.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "xcoref/error.hpp"

namespace xcoref {

using nlohmann::json;

std::string_view to_string(MentionKind kind) {
  return kind == MentionKind::entity ? "entity" : "event";
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::arg0: return "Arg0";
    case Role::arg1: return "Arg1";
    case Role::loc: return "Loc";
    case Role::time: return "Time";
  }
  return "?";
}

std::string_view to_string(LinkSource source) {
  return source == LinkSource::srl ? "srl" : "heuristic";
}

MentionKind parse_kind(std::string_view s) {
  if (s == "entity") return MentionKind::entity;
  if (s == "event") return MentionKind::event;
  throw ParseError("unknown mention kind '" + std::string(s) + "'");
}

Role parse_role(std::string_view s) {
  for (Role r : kRoles) {
    if (to_string(r) == s) return r;
  }
  throw ParseError("unknown role '" + std::string(s) + "' (expected Arg0|Arg1|Loc|Time)");
}

Corpus::Corpus(std::vector<Document> docs, std::vector<std::string>* warnings)
    : docs_(std::move(docs)) {
  validate_and_index(warnings);
}

void Corpus::validate_and_index(std::vector<std::string>* warnings) {
  sent_offsets_.clear();
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    Document& doc = docs_[d];
    if (!doc_index_.emplace(doc.doc_id, d).second) {
      throw InvariantError("duplicate doc_id '" + doc.doc_id + "'");
    }
    std::vector<int> offsets;
    int total = 0;
    for (const auto& sent : doc.sentences) {
      offsets.push_back(total);
      total += static_cast<int>(sent.size());
    }
    sent_offsets_.push_back(std::move(offsets));

    for (std::size_t i = 0; i < doc.mentions.size(); ++i) {
      Mention& m = doc.mentions[i];
      m.doc_id = doc.doc_id;
      if (m.sent_idx < 0 || m.sent_idx >= static_cast<int>(doc.sentences.size())) {
        throw InvariantError("mention '" + m.mention_id + "' references missing sentence");
      }
      const int len = static_cast<int>(doc.sentences[m.sent_idx].size());
      if (m.start < 0 || m.end >= len || m.start > m.end) {
        throw InvariantError("mention '" + m.mention_id + "' has an invalid token span");
      }
      if (m.head_idx < m.start || m.head_idx > m.end) {
        throw InvariantError("mention '" + m.mention_id + "' head is outside its span");
      }
      if (!mention_index_.emplace(m.mention_id, MentionLoc{d, i}).second) {
        throw InvariantError("duplicate mention_id '" + m.mention_id + "'");
      }
    }
  }

  for (Document& doc : docs_) {
    for (const ArgumentLink& link : doc.argument_links) {
      for (const auto& [id, kind] : {std::pair{link.event, MentionKind::event},
                                     std::pair{link.entity, MentionKind::entity}}) {
        auto it = mention_index_.find(id);
        if (it == mention_index_.end()) {
          throw InvariantError("argument link references unknown mention '" + id + "'");
        }
        const Mention& m = docs_[it->second.doc].mentions[it->second.idx];
        if (m.kind != kind || m.doc_id != doc.doc_id) {
          throw InvariantError("argument link mention '" + id + "' has the wrong kind or document");
        }
      }
    }

    // One filler per (event, role): nearest head, then earlier mention.
    std::vector<ArgumentLink> kept;
    for (const ArgumentLink& link : doc.argument_links) {
      auto same = std::find_if(kept.begin(), kept.end(), [&](const ArgumentLink& k) {
        return k.event == link.event && k.role == link.role;
      });
      if (same == kept.end()) {
        kept.push_back(link);
        continue;
      }
      if (same->entity == link.entity) continue;
      const Mention& ev = mention(link.event);
      const Mention& a = mention(same->entity);
      const Mention& b = mention(link.entity);
      const int ev_pos = doc_offset(doc.doc_id, ev.sent_idx, ev.head_idx);
      const int da = std::abs(doc_offset(doc.doc_id, a.sent_idx, a.head_idx) - ev_pos);
      const int db = std::abs(doc_offset(doc.doc_id, b.sent_idx, b.head_idx) - ev_pos);
      const auto pos = [&](const Mention& m) {
        return std::tuple(doc_offset(doc.doc_id, m.sent_idx, m.start), m.mention_id);
      };
      const bool replace = db < da || (db == da && pos(b) < pos(a));
      if (warnings) {
        warnings->push_back("event '" + link.event + "' has several " +
                            std::string(to_string(link.role)) + " fillers; keeping '" +
                            (replace ? link.entity : same->entity) + "'");
      }
      if (replace) *same = link;
    }
    doc.argument_links = std::move(kept);

    if (doc.wd_entity_clusters) {
      std::vector<std::string> entity_ids;
      for (const Mention& m : doc.mentions) {
        if (m.kind == MentionKind::entity) entity_ids.push_back(m.mention_id);
      }
      try {
        check_partition(*doc.wd_entity_clusters, entity_ids);
      } catch (const InvariantError& e) {
        throw InvariantError("document '" + doc.doc_id + "' wd_entity_clusters: " + e.what());
      }
    }
  }
}

const Document& Corpus::document(std::string_view doc_id) const {
  auto it = doc_index_.find(std::string(doc_id));
  if (it == doc_index_.end()) throw InvariantError("unknown document '" + std::string(doc_id) + "'");
  return docs_[it->second];
}

bool Corpus::has_mention(std::string_view mention_id) const {
  return mention_index_.count(std::string(mention_id)) != 0;
}

const Mention& Corpus::mention(std::string_view mention_id) const {
  auto it = mention_index_.find(std::string(mention_id));
  if (it == mention_index_.end()) {
    throw InvariantError("unknown mention '" + std::string(mention_id) + "'");
  }
  return docs_[it->second.doc].mentions[it->second.idx];
}

const Token& Corpus::token(const TokenKey& key) const {
  const Document& doc = document(key.doc_id);
  if (key.sent_idx < 0 || key.sent_idx >= static_cast<int>(doc.sentences.size()) ||
      key.tok_idx < 0 || key.tok_idx >= static_cast<int>(doc.sentences[key.sent_idx].size())) {
    throw InvariantError("token out of range in document '" + key.doc_id + "'");
  }
  return doc.sentences[key.sent_idx][key.tok_idx];
}

const Token& Corpus::token(const Mention& m, int tok_idx) const {
  return token(TokenKey{m.doc_id, m.sent_idx, tok_idx});
}

std::vector<std::string> Corpus::span_words(const Mention& m) const {
  std::vector<std::string> words;
  for (int t = m.start; t <= m.end; ++t) words.push_back(token(m, t).surface);
  return words;
}

std::string Corpus::span_text(const Mention& m) const {
  std::string text;
  for (const std::string& w : span_words(m)) {
    if (!text.empty()) text += ' ';
    text += w;
  }
  return text;
}

int Corpus::doc_offset(const std::string& doc_id, int sent_idx, int tok_idx) const {
  auto it = doc_index_.find(doc_id);
  if (it == doc_index_.end()) throw InvariantError("unknown document '" + doc_id + "'");
  return sent_offsets_[it->second][sent_idx] + tok_idx;
}

std::vector<const Mention*> Corpus::all_mentions() const {
  std::vector<const Mention*> out;
  for (const Document& doc : docs_) {
    for (const Mention& m : doc.mentions) out.push_back(&m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON-lines serialization

namespace {

template <typename T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  return j.at(key).get<T>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

std::optional<int> optional_int(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<int>();
}

Document document_from_json(const json& j) {
  Document doc;
  doc.doc_id = required<std::string>(j, "doc_id");
  doc.gold_topic_id = optional_string(j, "gold_topic_id");
  doc.gold_subtopic_id = optional_string(j, "gold_subtopic_id");
  for (const json& sent : j.value("sentences", json::array())) {
    std::vector<Token>& tokens = doc.sentences.emplace_back();
    for (const json& t : sent) {
      Token tok;
      tok.surface = required<std::string>(t, "surface");
      tok.lemma = t.value("lemma", tok.surface);
      tok.possessor_of = optional_int(t, "possessor_of");
      tok.subj_of = optional_int(t, "subj_of");
      tok.obj_of = optional_int(t, "obj_of");
      tokens.push_back(std::move(tok));
    }
  }
  for (const json& jm : j.value("mentions", json::array())) {
    Mention m;
    m.mention_id = required<std::string>(jm, "mention_id");
    m.kind = parse_kind(required<std::string>(jm, "kind"));
    m.doc_id = doc.doc_id;
    m.sent_idx = required<int>(jm, "sent_idx");
    m.start = required<int>(jm, "start");
    m.end = required<int>(jm, "end");
    m.head_idx = required<int>(jm, "head_idx");
    m.gold_cluster_id = optional_string(jm, "gold_cluster_id");
    doc.mentions.push_back(std::move(m));
  }
  for (const json& jl : j.value("argument_links", json::array())) {
    ArgumentLink link;
    link.event = required<std::string>(jl, "event");
    link.entity = required<std::string>(jl, "entity");
    link.role = parse_role(required<std::string>(jl, "role"));
    link.source = jl.value("source", "srl") == "heuristic" ? LinkSource::heuristic : LinkSource::srl;
    doc.argument_links.push_back(std::move(link));
  }
  if (j.contains("wd_entity_clusters") && !j.at("wd_entity_clusters").is_null()) {
    doc.wd_entity_clusters = j.at("wd_entity_clusters").get<Partition>();
  }
  return doc;
}

json document_to_json(const Document& doc) {
  json j;
  j["doc_id"] = doc.doc_id;
  if (doc.gold_topic_id) j["gold_topic_id"] = *doc.gold_topic_id;
  if (doc.gold_subtopic_id) j["gold_subtopic_id"] = *doc.gold_subtopic_id;
  json sentences = json::array();
  for (const auto& sent : doc.sentences) {
    json tokens = json::array();
    for (const Token& t : sent) {
      json jt = {{"surface", t.surface}, {"lemma", t.lemma}};
      if (t.possessor_of) jt["possessor_of"] = *t.possessor_of;
      if (t.subj_of) jt["subj_of"] = *t.subj_of;
      if (t.obj_of) jt["obj_of"] = *t.obj_of;
      tokens.push_back(std::move(jt));
    }
    sentences.push_back(std::move(tokens));
  }
  j["sentences"] = std::move(sentences);
  json mentions = json::array();
  for (const Mention& m : doc.mentions) {
    json jm = {{"mention_id", m.mention_id}, {"kind", to_string(m.kind)},
               {"sent_idx", m.sent_idx},     {"start", m.start},
               {"end", m.end},               {"head_idx", m.head_idx}};
    if (m.gold_cluster_id) jm["gold_cluster_id"] = *m.gold_cluster_id;
    mentions.push_back(std::move(jm));
  }
  j["mentions"] = std::move(mentions);
  json links = json::array();
  for (const ArgumentLink& l : doc.argument_links) {
    json jl = {{"event", l.event}, {"entity", l.entity}, {"role", to_string(l.role)}};
    if (l.source == LinkSource::heuristic) jl["source"] = "heuristic";
    links.push_back(std::move(jl));
  }
  j["argument_links"] = std::move(links);
  if (doc.wd_entity_clusters) j["wd_entity_clusters"] = *doc.wd_entity_clusters;
  return j;
}

}  // namespace

Corpus parse_corpus(std::istream& in, std::vector<std::string>* warnings) {
  std::vector<Document> docs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      docs.push_back(document_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return Corpus(std::move(docs), warnings);
}

Corpus load_corpus(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file '" + path + "'");
  try {
    return parse_corpus(in, warnings);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const Document& doc : corpus.documents()) out << document_to_json(doc).dump() << '\n';
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus file '" + path + "'");
  write_corpus(corpus, out);
}

// ---------------------------------------------------------------------------
// Topics and configurations

std::vector<Topic> gold_topics(const Corpus& corpus) {
  std::map<std::string, Topic> by_id;
  for (const Document& doc : corpus.documents()) {
    if (!doc.gold_topic_id) {
      throw InvariantError("document '" + doc.doc_id + "' has no gold_topic_id");
    }
    Topic& t = by_id[*doc.gold_topic_id];
    t.topic_id = *doc.gold_topic_id;
    t.doc_ids.push_back(doc.doc_id);
  }
  std::vector<Topic> out;
  for (auto& [id, t] : by_id) out.push_back(std::move(t));
  return out;
}

std::vector<Topic> topics_from_assignment(const Corpus& corpus,
                                          const std::map<std::string, int>& assignment) {
  std::map<int, Topic> by_id;
  for (const Document& doc : corpus.documents()) {
    auto it = assignment.find(doc.doc_id);
    if (it == assignment.end()) {
      throw InvariantError("document '" + doc.doc_id + "' missing from topic assignment");
    }
    Topic& t = by_id[it->second];
    t.topic_id = std::to_string(it->second);
    t.doc_ids.push_back(doc.doc_id);
  }
  std::vector<Topic> out;
  for (auto& [id, t] : by_id) out.push_back(std::move(t));
  return out;
}

std::vector<std::string> topic_mentions(const Corpus& corpus, const Topic& topic,
                                        MentionKind kind) {
  std::vector<std::string> ids;
  for (const std::string& doc_id : topic.doc_ids) {
    for (const Mention& m : corpus.document(doc_id).mentions) {
      if (m.kind == kind) ids.push_back(m.mention_id);
    }
  }
  return ids;
}

void canonicalize(Partition& partition) {
  for (Cluster& c : partition) std::sort(c.begin(), c.end());
  std::sort(partition.begin(), partition.end(),
            [](const Cluster& a, const Cluster& b) { return a.front() < b.front(); });
}

void check_partition(const Partition& partition, const std::vector<std::string>& mentions) {
  std::set<std::string> expected(mentions.begin(), mentions.end());
  std::set<std::string> seen;
  for (const Cluster& c : partition) {
    if (c.empty()) throw InvariantError("empty cluster");
    for (const std::string& id : c) {
      if (!expected.count(id)) throw InvariantError("cluster contains foreign mention '" + id + "'");
      if (!seen.insert(id).second) throw InvariantError("mention '" + id + "' in two clusters");
    }
  }
  if (seen.size() != expected.size()) {
    for (const std::string& id : expected) {
      if (!seen.count(id)) throw InvariantError("mention '" + id + "' is not clustered");
    }
  }
}

void check_configuration(const Corpus& corpus, const Topic& topic, const Configuration& config) {
  check_partition(config.entity_clusters, topic_mentions(corpus, topic, MentionKind::entity));
  check_partition(config.event_clusters, topic_mentions(corpus, topic, MentionKind::event));
}

Partition singleton_events(const Corpus& corpus, const Topic& topic) {
  Partition out;
  for (std::string& id : topic_mentions(corpus, topic, MentionKind::event)) {
    out.push_back({std::move(id)});
  }
  return out;
}

Partition init_entities(const Corpus& corpus, const Topic& topic, EntityInit mode) {
  Partition out;
  for (const std::string& doc_id : topic.doc_ids) {
    const Document& doc = corpus.document(doc_id);
    if (mode == EntityInit::wd_system) {
      if (!doc.wd_entity_clusters) {
        throw InvariantError("document '" + doc_id + "' has no wd_entity_clusters");
      }
      for (const Cluster& c : *doc.wd_entity_clusters) out.push_back(c);
      continue;
    }
    std::map<std::string, Cluster> chains;
    for (const Mention& m : doc.mentions) {
      if (m.kind != MentionKind::entity) continue;
      if (!m.gold_cluster_id) {
        throw InvariantError("entity mention '" + m.mention_id + "' has no gold_cluster_id");
      }
      chains[*m.gold_cluster_id].push_back(m.mention_id);
    }
    for (auto& [id, c] : chains) out.push_back(std::move(c));
  }
  canonicalize(out);
  return out;
}

namespace {

Partition gold_partition_of(const std::vector<const Mention*>& mentions, MentionKind kind) {
  std::map<std::string, Cluster> chains;
  for (const Mention* m : mentions) {
    if (m->kind != kind) continue;
    if (!m->gold_cluster_id) {
      throw InvariantError("mention '" + m->mention_id + "' has no gold_cluster_id");
    }
    chains[*m->gold_cluster_id].push_back(m->mention_id);
  }
  Partition out;
  for (auto& [id, c] : chains) out.push_back(std::move(c));
  canonicalize(out);
  return out;
}

}  // namespace

Partition gold_partition(const Corpus& corpus, MentionKind kind) {
  return gold_partition_of(corpus.all_mentions(), kind);
}

Partition gold_partition(const Corpus& corpus, const Topic& topic, MentionKind kind) {
  std::vector<const Mention*> mentions;
  for (const std::string& id : topic_mentions(corpus, topic, kind)) {
    mentions.push_back(&corpus.mention(id));
  }
  return gold_partition_of(mentions, kind);
}

}  // namespace xcoref
