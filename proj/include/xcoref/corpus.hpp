#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xcoref {

enum class MentionKind { entity, event };

enum class Role { arg0 = 0, arg1 = 1, loc = 2, time = 3 };
inline constexpr std::size_t kNumRoles = 4;
inline constexpr std::array<Role, kNumRoles> kRoles = {Role::arg0, Role::arg1, Role::loc,
                                                       Role::time};

enum class LinkSource { srl, heuristic };

std::string_view to_string(MentionKind kind);
std::string_view to_string(Role role);
std::string_view to_string(LinkSource source);
MentionKind parse_kind(std::string_view s);
Role parse_role(std::string_view s);

// A pre-tokenized token. Optional dependency annotations name the token index
// (same sentence) of the head this token is possessor / subject / object of.
struct Token {
  std::string surface;
  std::string lemma;
  std::optional<int> possessor_of;
  std::optional<int> subj_of;
  std::optional<int> obj_of;
};

struct TokenKey {
  std::string doc_id;
  int sent_idx = 0;
  int tok_idx = 0;

  auto operator<=>(const TokenKey&) const = default;
};

struct Mention {
  std::string mention_id;
  MentionKind kind = MentionKind::entity;
  std::string doc_id;
  int sent_idx = 0;
  int start = 0;  // inclusive
  int end = 0;    // inclusive
  int head_idx = 0;
  std::optional<std::string> gold_cluster_id;

  TokenKey head_key() const { return {doc_id, sent_idx, head_idx}; }
};

struct ArgumentLink {
  std::string event;
  std::string entity;
  Role role = Role::arg0;
  LinkSource source = LinkSource::srl;

  bool operator==(const ArgumentLink&) const = default;
};

using Cluster = std::vector<std::string>;
using Partition = std::vector<Cluster>;

struct Document {
  std::string doc_id;
  std::optional<std::string> gold_topic_id;
  std::optional<std::string> gold_subtopic_id;
  std::vector<std::vector<Token>> sentences;
  std::vector<Mention> mentions;
  std::vector<ArgumentLink> argument_links;
  std::optional<Partition> wd_entity_clusters;
};

// Immutable-after-construction document collection with id indices.
class Corpus {
 public:
  Corpus() = default;
  // Validates every invariant and normalizes argument links to one filler per
  // (event, role). Normalization messages are appended to `warnings`.
  explicit Corpus(std::vector<Document> docs, std::vector<std::string>* warnings = nullptr);

  const std::vector<Document>& documents() const { return docs_; }
  std::size_t num_mentions() const { return mention_index_.size(); }

  const Document& document(std::string_view doc_id) const;
  const Mention& mention(std::string_view mention_id) const;
  bool has_mention(std::string_view mention_id) const;
  const Token& token(const TokenKey& key) const;
  const Token& token(const Mention& m, int tok_idx) const;

  // Tokens of the mention span joined by a single space.
  std::string span_text(const Mention& m) const;
  std::vector<std::string> span_words(const Mention& m) const;

  // Position of a token within its document, counting from the first token of
  // the first sentence.
  int doc_offset(const std::string& doc_id, int sent_idx, int tok_idx) const;

  // All mentions in document order.
  std::vector<const Mention*> all_mentions() const;

 private:
  struct MentionLoc {
    std::size_t doc = 0;
    std::size_t idx = 0;
  };
  void validate_and_index(std::vector<std::string>* warnings);

  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> doc_index_;
  std::unordered_map<std::string, MentionLoc> mention_index_;
  std::vector<std::vector<int>> sent_offsets_;
};

// JSON-lines corpus file, one document per line. Empty lines are skipped.
Corpus load_corpus(const std::string& path, std::vector<std::string>* warnings = nullptr);
Corpus parse_corpus(std::istream& in, std::vector<std::string>* warnings = nullptr);
void save_corpus(const Corpus& corpus, const std::string& path);
void write_corpus(const Corpus& corpus, std::ostream& out);

// Group of documents processed together by the clustering engine.
struct Topic {
  std::string topic_id;
  std::vector<std::string> doc_ids;
};

std::vector<Topic> gold_topics(const Corpus& corpus);
// Topics from a doc_id -> topic index assignment (the doc-cluster output).
std::vector<Topic> topics_from_assignment(const Corpus& corpus,
                                          const std::map<std::string, int>& assignment);

// Mention ids of the given kind inside a topic, in document order.
std::vector<std::string> topic_mentions(const Corpus& corpus, const Topic& topic, MentionKind kind);

struct Configuration {
  std::string topic_id;
  Partition entity_clusters;
  Partition event_clusters;

  Partition& side(MentionKind kind) {
    return kind == MentionKind::entity ? entity_clusters : event_clusters;
  }
  const Partition& side(MentionKind kind) const {
    return kind == MentionKind::entity ? entity_clusters : event_clusters;
  }
};

// Sorts members of each cluster and the clusters by their first member.
void canonicalize(Partition& partition);

// Throws InvariantError unless `partition` is a disjoint cover of `mentions`
// with non-empty clusters.
void check_partition(const Partition& partition, const std::vector<std::string>& mentions);
void check_configuration(const Corpus& corpus, const Topic& topic, const Configuration& config);

Partition singleton_events(const Corpus& corpus, const Topic& topic);

enum class EntityInit { wd_system, gold_wd };
Partition init_entities(const Corpus& corpus, const Topic& topic, EntityInit mode);

// Gold partition of all mentions of one kind in the corpus (or one topic).
Partition gold_partition(const Corpus& corpus, MentionKind kind);
Partition gold_partition(const Corpus& corpus, const Topic& topic, MentionKind kind);

}  // namespace xcoref
