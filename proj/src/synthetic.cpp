#include "xcoref/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace xcoref {

namespace {

struct Generator {
  const SyntheticSpec& spec;
  std::mt19937_64 rng;
  std::map<std::string, Eigen::VectorXd> words;

  Eigen::VectorXd gaussian(double scale) {
    std::normal_distribution<double> n(0.0, scale / std::sqrt(static_cast<double>(spec.word_dim)));
    Eigen::VectorXd v(spec.word_dim);
    for (int i = 0; i < spec.word_dim; ++i) v(i) = n(rng);
    return v;
  }

  void add_word(const std::string& w, const Eigen::VectorXd& centre) {
    words.emplace(w, centre + gaussian(spec.word_noise));
  }

  bool coin(double p) { return std::bernoulli_distribution(p)(rng); }
};

struct EntityChain {
  std::string gold_id;
  std::string head;
  std::string first;
};

struct PlannedSentence {
  int event_chain = 0;
  int order = 0;
};

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  Generator gen{spec, std::mt19937_64(spec.seed), {}};
  std::vector<Document> docs;
  gen.words.emplace("the", gen.gaussian(1.0));

  for (int t = 0; t < spec.topics; ++t) {
    const std::string tp = "t" + std::to_string(t);

    // Predicate concepts: one per chain pair when ambiguous, else one per chain.
    std::vector<std::pair<std::string, std::string>> predicate(spec.event_chains);
    for (int c = 0; c < spec.event_chains; ++c) {
      const int concept_id = spec.ambiguous_pairs ? c / 2 : c;
      const std::string primary = tp + "p" + std::to_string(concept_id);
      predicate[c] = {primary, primary + "s"};
      if (!gen.words.count(primary)) {
        const Eigen::VectorXd centre = gen.gaussian(1.0);
        gen.add_word(primary, centre);
        gen.add_word(primary + "s", centre);
      }
    }
    // Arg0 chain 2c, Arg1 chain 2c+1.
    std::vector<EntityChain> entities;
    for (int e = 0; e < 2 * spec.event_chains; ++e) {
      EntityChain ch{tp + "_e" + std::to_string(e), tp + "n" + std::to_string(e),
                     tp + "f" + std::to_string(e)};
      const Eigen::VectorXd centre = gen.gaussian(1.0);
      gen.add_word(ch.head, centre);
      gen.add_word(ch.first, centre);
      entities.push_back(std::move(ch));
    }
    std::vector<std::string> fillers;
    for (int k = 0; k < 12; ++k) {
      fillers.push_back(tp + "x" + std::to_string(k));
      gen.words.emplace(fillers.back(), gen.gaussian(1.0));
    }

    std::vector<std::vector<PlannedSentence>> plan(spec.docs_per_topic);
    for (int c = 0; c < spec.event_chains; ++c) {
      for (int k = 0; k < spec.mentions_per_event_chain; ++k) {
        plan[(c + k) % spec.docs_per_topic].push_back({c, k});
      }
    }

    for (int d = 0; d < spec.docs_per_topic; ++d) {
      Document doc;
      doc.doc_id = tp + "_d" + std::to_string(d);
      doc.gold_topic_id = tp;
      doc.gold_subtopic_id = tp;
      std::shuffle(plan[d].begin(), plan[d].end(), gen.rng);
      int next_mention = 0;
      const auto new_id = [&] { return doc.doc_id + "_m" + std::to_string(next_mention++); };
      std::map<std::string, Cluster> wd;

      for (const PlannedSentence& ps : plan[d]) {
        const int sent = static_cast<int>(doc.sentences.size());
        std::vector<Token> tokens;
        const auto add_entity = [&](const EntityChain& ch) {
          Mention m;
          m.mention_id = new_id();
          m.kind = MentionKind::entity;
          m.sent_idx = sent;
          m.start = static_cast<int>(tokens.size());
          if (gen.coin(0.5)) tokens.push_back({ch.first, ch.first, {}, {}, {}});
          tokens.push_back({ch.head, ch.head, {}, {}, {}});
          m.end = m.head_idx = static_cast<int>(tokens.size()) - 1;
          m.gold_cluster_id = ch.gold_id;
          wd[ch.gold_id].push_back(m.mention_id);
          doc.mentions.push_back(m);
          return m.mention_id;
        };

        const std::string arg0 = add_entity(entities[2 * ps.event_chain]);
        Mention ev;
        ev.mention_id = new_id();
        ev.kind = MentionKind::event;
        ev.sent_idx = sent;
        ev.start = ev.end = ev.head_idx = static_cast<int>(tokens.size());
        ev.gold_cluster_id = tp + "_v" + std::to_string(ps.event_chain);
        const auto& [primary, synonym] = predicate[ps.event_chain];
        const std::string& word = gen.coin(spec.same_lemma_prob) ? primary : synonym;
        tokens.push_back({word, word, {}, {}, {}});
        doc.mentions.push_back(ev);
        tokens.push_back({"the", "the", {}, {}, {}});

        if (gen.coin(spec.srl_coverage)) {
          doc.argument_links.push_back({ev.mention_id, arg0, Role::arg0, LinkSource::srl});
        }
        if (gen.coin(spec.arg1_prob)) {
          const std::string arg1 = add_entity(entities[2 * ps.event_chain + 1]);
          if (gen.coin(spec.srl_coverage)) {
            doc.argument_links.push_back({ev.mention_id, arg1, Role::arg1, LinkSource::srl});
          }
        }
        std::uniform_int_distribution<std::size_t> pick(0, fillers.size() - 1);
        for (int k = 0; k < 2; ++k) {
          const std::string& f = fillers[pick(gen.rng)];
          tokens.push_back({f, f, {}, {}, {}});
        }
        doc.sentences.push_back(std::move(tokens));
      }
      Partition wd_clusters;
      for (auto& [id, c] : wd) wd_clusters.push_back(std::move(c));
      doc.wd_entity_clusters = std::move(wd_clusters);
      docs.push_back(std::move(doc));
    }
  }
  return {Corpus(std::move(docs)), std::move(gen.words)};
}

Corpus subset_by_topic(const Corpus& corpus, const std::vector<std::string>& topic_ids) {
  const std::set<std::string> keep(topic_ids.begin(), topic_ids.end());
  std::vector<Document> docs;
  for (const Document& doc : corpus.documents()) {
    if (doc.gold_topic_id && keep.count(*doc.gold_topic_id)) docs.push_back(doc);
  }
  return Corpus(std::move(docs));
}

}  // namespace xcoref
