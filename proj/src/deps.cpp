#include "xcoref/deps.hpp"

#include <cstdlib>
#include <limits>
#include <tuple>

#include "xcoref/error.hpp"

namespace xcoref {

namespace {

bool role_filled(const std::vector<ArgumentLink>& links, const std::string& event, Role role) {
  for (const ArgumentLink& l : links) {
    if (l.event == event && l.role == role) return true;
  }
  return false;
}

// Entity mention of the sentence owning token `tok`: head match first, then the
// shortest covering span.
const Mention* entity_at(const Document& doc, int sent, int tok) {
  const Mention* best = nullptr;
  for (const Mention& m : doc.mentions) {
    if (m.kind != MentionKind::entity || m.sent_idx != sent) continue;
    if (m.head_idx == tok) return &m;
    if (m.start <= tok && tok <= m.end && (!best || m.end - m.start < best->end - best->start)) {
      best = &m;
    }
  }
  return best;
}

void add_link(std::vector<ArgumentLink>& links, const Mention& event, const Mention* entity,
              Role role) {
  if (!entity || role_filled(links, event.mention_id, role)) return;
  links.push_back({event.mention_id, entity->mention_id, role, LinkSource::heuristic});
}

}  // namespace

Corpus augment_links(const Corpus& corpus) {
  std::vector<Document> docs = corpus.documents();
  for (Document& doc : docs) {
    std::vector<ArgumentLink>& links = doc.argument_links;
    const auto events_with_head = [&](int sent, int head) {
      std::vector<const Mention*> out;
      for (const Mention& m : doc.mentions) {
        if (m.kind == MentionKind::event && m.sent_idx == sent && m.head_idx == head) {
          out.push_back(&m);
        }
      }
      return out;
    };

    // Possessors of nominal event heads.
    for (int s = 0; s < static_cast<int>(doc.sentences.size()); ++s) {
      for (int t = 0; t < static_cast<int>(doc.sentences[s].size()); ++t) {
        const Token& tok = doc.sentences[s][t];
        if (!tok.possessor_of) continue;
        for (const Mention* ev : events_with_head(s, *tok.possessor_of)) {
          add_link(links, *ev, entity_at(doc, s, t), Role::arg0);
        }
      }
    }
    // Dependency subjects and objects.
    for (int s = 0; s < static_cast<int>(doc.sentences.size()); ++s) {
      for (int t = 0; t < static_cast<int>(doc.sentences[s].size()); ++t) {
        const Token& tok = doc.sentences[s][t];
        if (tok.subj_of) {
          for (const Mention* ev : events_with_head(s, *tok.subj_of)) {
            add_link(links, *ev, entity_at(doc, s, t), Role::arg0);
          }
        }
        if (tok.obj_of) {
          for (const Mention* ev : events_with_head(s, *tok.obj_of)) {
            add_link(links, *ev, entity_at(doc, s, t), Role::arg1);
          }
        }
      }
    }
    // Nearest entity to the left / right of the event head.
    for (const Mention& ev : doc.mentions) {
      if (ev.kind != MentionKind::event) continue;
      const Mention* left = nullptr;
      const Mention* right = nullptr;
      for (const Mention& en : doc.mentions) {
        if (en.kind != MentionKind::entity || en.sent_idx != ev.sent_idx) continue;
        if (en.start <= ev.head_idx && ev.head_idx <= en.end) continue;
        if (en.head_idx < ev.head_idx) {
          if (!left || en.head_idx > left->head_idx) left = &en;
        } else if (en.head_idx > ev.head_idx) {
          if (!right || en.head_idx < right->head_idx) right = &en;
        }
      }
      add_link(links, ev, left, Role::arg0);
      add_link(links, ev, right, Role::arg1);
    }
  }
  return Corpus(std::move(docs));
}

RoleIndex::RoleIndex(const Corpus& corpus) {
  // Entity side: nearest event head per role, ties to the earlier event.
  std::unordered_map<std::string, std::array<std::tuple<int, int, std::string>, kNumRoles>> best;
  for (const Document& doc : corpus.documents()) {
    for (const ArgumentLink& link : doc.argument_links) {
      const auto r = static_cast<std::size_t>(link.role);
      slots_[link.event][r] = link.entity;

      const Mention& ev = corpus.mention(link.event);
      const Mention& en = corpus.mention(link.entity);
      const int ev_pos = corpus.doc_offset(doc.doc_id, ev.sent_idx, ev.head_idx);
      const int dist = std::abs(corpus.doc_offset(doc.doc_id, en.sent_idx, en.head_idx) - ev_pos);
      auto [it, inserted] = best.try_emplace(link.entity);
      if (inserted) {
        for (auto& b : it->second) b = {std::numeric_limits<int>::max(), 0, std::string()};
      }
      const std::tuple<int, int, std::string> key{
          dist, corpus.doc_offset(doc.doc_id, ev.sent_idx, ev.start), ev.mention_id};
      if (key < it->second[r]) {
        it->second[r] = key;
        slots_[link.entity][r] = link.event;
      }
    }
  }
}

const RoleSlots& RoleIndex::slots(const std::string& mention_id) const {
  auto it = slots_.find(mention_id);
  return it == slots_.end() ? empty_ : it->second;
}

PartitionIndex::PartitionIndex(const Partition& partition) : clusters_(partition) {
  canonicalize(clusters_);
  for (std::size_t c = 0; c < clusters_.size(); ++c) {
    for (const std::string& id : clusters_[c]) index_[id] = static_cast<int>(c);
  }
}

int PartitionIndex::cluster_of(const std::string& mention_id) const {
  auto it = index_.find(mention_id);
  return it == index_.end() ? -1 : it->second;
}

PairFeatures pair_features(const Mention& a, const Mention& b, const RoleIndex& roles,
                           const PartitionIndex& filler_clusters) {
  if (a.kind != b.kind) {
    throw InvariantError("pair features requested for mentions of different kinds ('" +
                         a.mention_id + "', '" + b.mention_id + "')");
  }
  const RoleSlots& sa = roles.slots(a.mention_id);
  const RoleSlots& sb = roles.slots(b.mention_id);
  PairFeatures f;
  for (std::size_t r = 0; r < kNumRoles; ++r) {
    if (!sa[r] || !sb[r]) continue;
    const int ca = filler_clusters.cluster_of(*sa[r]);
    f[r] = ca >= 0 && ca == filler_clusters.cluster_of(*sb[r]);
  }
  return f;
}

}  // namespace xcoref
