#pragma once

#include <vector>

namespace sbm {

// Node-to-group labels over {0, ..., B-1}; labels are always contiguous and
// every group nonempty (the partition prior forbids empty groups). When a
// move empties a group, the last label is swapped into the hole and the
// relabel is reported through MoveEvent.
class Partition {
  public:
    struct MoveEvent {
        int node = -1;
        int from = -1;
        int to = -1;             // final label of the node after the move
        bool created_group = false;
        bool removed_group = false;
        int relabeled_from = -1; // old label that was renamed to 'from' (-1 if none)
    };

    Partition() = default;
    explicit Partition(std::vector<int> labels);
    static Partition trivial(int n_items);    // all items in group 0
    static Partition singletons(int n_items); // item i in group i

    int num_items() const { return static_cast<int>(labels_.size()); }
    int num_groups() const { return static_cast<int>(sizes_.size()); }
    int operator[](int i) const { return labels_[i]; }
    int group_size(int r) const { return sizes_[r]; }
    const std::vector<int>& labels() const { return labels_; }
    const std::vector<int>& sizes() const { return sizes_; }

    // Moves item i to group 'to'; to == num_groups() creates a new group.
    // Handles contiguity relabeling on group death.
    MoveEvent move(int i, int to);

    // Canonical relabeling by first appearance; used to compare partitions
    // up to label permutations.
    std::vector<int> canonical() const;

    bool operator==(const Partition& o) const { return labels_ == o.labels_; }

  private:
    std::vector<int> labels_;
    std::vector<int> sizes_;
};

// Stacked partitions: level 0 partitions the nodes, level l > 0 partitions
// the groups of level l-1; the top level has exactly one group.
class HierarchicalPartition {
  public:
    HierarchicalPartition() = default;
    explicit HierarchicalPartition(std::vector<Partition> levels);

    // b_0 = base, plus a single trivial level on top.
    static HierarchicalPartition from_flat(Partition base);

    int depth() const { return static_cast<int>(levels_.size()); } // excludes level 0
    const Partition& level(int l) const { return levels_[l]; }
    Partition& level(int l) { return levels_[l]; }
    int num_levels() const { return static_cast<int>(levels_.size()); }

    // Composite label of node i at level l (its group when all levels up to
    // l are composed).
    int label_at(int node, int l) const;

    void validate() const;

  private:
    std::vector<Partition> levels_;
};

} // namespace sbm
