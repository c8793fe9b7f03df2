#include "sbm/partition.hpp"

#include <stdexcept>

namespace sbm {

Partition::Partition(std::vector<int> labels) : labels_(std::move(labels)) {
    int b = 0;
    for (int r : labels_) {
        if (r < 0)
            throw std::invalid_argument("Partition: negative label");
        b = std::max(b, r + 1);
    }
    sizes_.assign(b, 0);
    for (int r : labels_)
        ++sizes_[r];
    for (int r = 0; r < b; ++r)
        if (sizes_[r] == 0)
            throw std::invalid_argument("Partition: empty group (labels not contiguous)");
}

Partition Partition::trivial(int n_items) {
    return Partition(std::vector<int>(n_items, 0));
}

Partition Partition::singletons(int n_items) {
    std::vector<int> l(n_items);
    for (int i = 0; i < n_items; ++i)
        l[i] = i;
    return Partition(std::move(l));
}

Partition::MoveEvent Partition::move(int i, int to) {
    MoveEvent ev;
    ev.node = i;
    ev.from = labels_[i];
    int b = num_groups();
    if (to < 0 || to > b)
        throw std::invalid_argument("Partition::move: label out of range");
    if (to == ev.from) {
        ev.to = to;
        return ev;
    }
    if (to == b) {
        sizes_.push_back(0);
        ev.created_group = true;
    }
    --sizes_[ev.from];
    ++sizes_[to];
    labels_[i] = to;
    ev.to = to;
    if (sizes_[ev.from] == 0) {
        ev.removed_group = true;
        int last = num_groups() - 1;
        if (ev.from != last) {
            // rename group 'last' to 'from'
            for (int& l : labels_)
                if (l == last)
                    l = ev.from;
            sizes_[ev.from] = sizes_[last];
            ev.relabeled_from = last;
            if (labels_[i] == last) // the node itself was in 'last'
                ev.to = ev.from;
        }
        sizes_.pop_back();
    }
    return ev;
}

std::vector<int> Partition::canonical() const {
    std::vector<int> map(num_groups(), -1);
    std::vector<int> out(labels_.size());
    int next = 0;
    for (size_t i = 0; i < labels_.size(); ++i) {
        int& m = map[labels_[i]];
        if (m < 0)
            m = next++;
        out[i] = m;
    }
    return out;
}

HierarchicalPartition::HierarchicalPartition(std::vector<Partition> levels)
    : levels_(std::move(levels)) {
    validate();
}

HierarchicalPartition HierarchicalPartition::from_flat(Partition base) {
    std::vector<Partition> lv;
    int b = base.num_groups();
    lv.push_back(std::move(base));
    lv.push_back(Partition::trivial(b));
    return HierarchicalPartition(std::move(lv));
}

int HierarchicalPartition::label_at(int node, int l) const {
    int r = levels_[0][node];
    for (int m = 1; m <= l; ++m)
        r = levels_[m][r];
    return r;
}

void HierarchicalPartition::validate() const {
    if (levels_.empty())
        throw std::invalid_argument("HierarchicalPartition: no levels");
    for (size_t l = 1; l < levels_.size(); ++l)
        if (levels_[l].num_items() != levels_[l - 1].num_groups())
            throw std::invalid_argument(
                "HierarchicalPartition: level domain mismatch at level " +
                std::to_string(l));
    if (levels_.back().num_groups() != 1)
        throw std::invalid_argument("HierarchicalPartition: top level must have one group");
}

} // namespace sbm
