#pragma once

#include <array>
#include <bitset>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "xcoref/corpus.hpp"
#include "xcoref/params.hpp"

namespace xcoref {

// Applies the argument-coverage heuristics in order: possessor of a nominal
// event head -> Arg0; dependency subject / object -> Arg0 / Arg1; nearest entity
// left / right of the event head in the same sentence -> Arg0 / Arg1. Each only
// fills a role that is still empty, so corpus (SRL) links always take
// precedence. Added links carry source=heuristic.
Corpus augment_links(const Corpus& corpus);

// Filler per role for one mention. Events are filled by entities; an entity's
// slot holds the nearest event for which it fills that role.
using RoleSlots = std::array<std::optional<std::string>, kNumRoles>;

class RoleIndex {
 public:
  explicit RoleIndex(const Corpus& corpus);
  const RoleSlots& slots(const std::string& mention_id) const;

 private:
  std::unordered_map<std::string, RoleSlots> slots_;
  RoleSlots empty_;
};

// Cluster membership lookup for one side of a configuration. Members of each
// cluster are kept sorted by mention id.
class PartitionIndex {
 public:
  PartitionIndex() = default;
  explicit PartitionIndex(const Partition& partition);

  // -1 when the mention is not in the partition.
  int cluster_of(const std::string& mention_id) const;
  const Cluster& members(int cluster) const { return clusters_[cluster]; }
  std::size_t size() const { return clusters_.size(); }

 private:
  Partition clusters_;
  std::unordered_map<std::string, int> index_;
};

template <typename Scalar>
using SpanTable = std::unordered_map<std::string, Vector<Scalar>>;

// d(m): per role, mean span vector of the current cluster of the filler, or
// zeros when the slot is empty; blocks ordered Arg0, Arg1, Loc, Time.
template <typename Scalar>
Vector<Scalar> dep_vector(const RoleSlots& slots, const PartitionIndex& filler_clusters,
                          const SpanTable<Scalar>& spans, int span_dim) {
  Vector<Scalar> d = Vector<Scalar>::Zero(static_cast<Eigen::Index>(kNumRoles) * span_dim);
  for (std::size_t r = 0; r < kNumRoles; ++r) {
    if (!slots[r]) continue;
    const int c = filler_clusters.cluster_of(*slots[r]);
    if (c < 0) continue;
    auto block = d.segment(static_cast<Eigen::Index>(r) * span_dim, span_dim);
    const Cluster& members = filler_clusters.members(c);
    for (const std::string& id : members) block += spans.at(id);
    block /= static_cast<Scalar>(members.size());
  }
  return d;
}

using PairFeatures = std::bitset<kNumRoles>;

// Per role: both slots filled and both fillers currently in the same cluster.
// Throws InvariantError when the mentions differ in kind.
PairFeatures pair_features(const Mention& a, const Mention& b, const RoleIndex& roles,
                           const PartitionIndex& filler_clusters);

}  // namespace xcoref
