#include "sbm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sbm {

namespace {

std::vector<std::vector<int64_t>> contingency(const Partition& a,
                                              const Partition& b) {
    std::vector<std::vector<int64_t>> c(a.num_groups(),
                                        std::vector<int64_t>(b.num_groups(), 0));
    for (int i = 0; i < a.num_items(); ++i)
        ++c[a[i]][b[i]];
    return c;
}

// Max-weight assignment on an n x n matrix (Jonker-Volgenant style shortest
// augmenting paths on the negated costs). Returns row -> column.
std::vector<int> max_weight_assignment(const std::vector<std::vector<int64_t>>& w) {
    int n = static_cast<int>(w.size());
    const double INF = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, n), way(n + 1, n);
    for (int i = 0; i < n; ++i) {
        p[n] = i;
        int j0 = n;
        std::vector<double> minv(n + 1, INF);
        std::vector<char> used(n + 1, false);
        do {
            used[j0] = true;
            int i0 = p[j0], j1 = -1;
            double delta = INF;
            for (int j = 0; j < n; ++j) {
                if (used[j])
                    continue;
                double cur = -static_cast<double>(w[i0][j]) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != n);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != n);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 0; j < n; ++j)
        if (p[j] != n)
            row_to_col[p[j]] = j;
    return row_to_col;
}

} // namespace

Partition align_partition(const Partition& sample, const Partition& reference) {
    if (sample.num_items() != reference.num_items())
        throw std::invalid_argument("align_partition: size mismatch");
    int bs = sample.num_groups(), br = reference.num_groups();
    int n = std::max(bs, br);
    std::vector<std::vector<int64_t>> w(n, std::vector<int64_t>(n, 0));
    auto c = contingency(sample, reference);
    for (int r = 0; r < bs; ++r)
        for (int s = 0; s < br; ++s)
            w[r][s] = c[r][s];
    auto match = max_weight_assignment(w);
    // sample group r -> reference label match[r]; groups matched to padding
    // columns get fresh labels starting at br
    std::vector<int> map(bs, -1);
    int next_fresh = br;
    for (int r = 0; r < bs; ++r)
        map[r] = match[r] < br ? match[r] : next_fresh++;
    std::vector<int> labels(sample.num_items());
    for (int i = 0; i < sample.num_items(); ++i)
        labels[i] = map[sample[i]];
    // contiguity: unused reference labels may leave holes; compress while
    // keeping matched labels stable is impossible in general, so only strip
    // holes above the used range
    std::vector<char> used(next_fresh, 0);
    for (int l : labels)
        used[l] = 1;
    std::vector<int> compress(next_fresh, -1);
    int k = 0;
    for (int l = 0; l < next_fresh; ++l)
        if (used[l])
            compress[l] = k++;
    for (int& l : labels)
        l = compress[l];
    return Partition(std::move(labels));
}

double partition_overlap(const Partition& a, const Partition& b) {
    if (a.num_items() != b.num_items())
        throw std::invalid_argument("partition_overlap: size mismatch");
    int n = std::max(a.num_groups(), b.num_groups());
    std::vector<std::vector<int64_t>> w(n, std::vector<int64_t>(n, 0));
    auto c = contingency(a, b);
    for (int r = 0; r < a.num_groups(); ++r)
        for (int s = 0; s < b.num_groups(); ++s)
            w[r][s] = c[r][s];
    auto match = max_weight_assignment(w);
    int64_t agree = 0;
    for (int r = 0; r < n; ++r)
        if (match[r] >= 0 && r < a.num_groups() && match[r] < b.num_groups())
            agree += c[r][match[r]];
    return static_cast<double>(agree) / a.num_items();
}

double nmi(const Partition& a, const Partition& b) {
    if (a.num_items() != b.num_items())
        throw std::invalid_argument("nmi: size mismatch");
    double n = a.num_items();
    auto c = contingency(a, b);
    double ha = 0.0, hb = 0.0, mi = 0.0;
    for (int r = 0; r < a.num_groups(); ++r) {
        double pr = a.group_size(r) / n;
        ha -= pr * std::log(pr);
    }
    for (int s = 0; s < b.num_groups(); ++s) {
        double ps = b.group_size(s) / n;
        hb -= ps * std::log(ps);
    }
    for (int r = 0; r < a.num_groups(); ++r)
        for (int s = 0; s < b.num_groups(); ++s)
            if (c[r][s] > 0) {
                double prs = c[r][s] / n;
                mi += prs * std::log(prs / (a.group_size(r) / n * b.group_size(s) / n));
            }
    if (ha + hb == 0.0)
        return 1.0; // both trivial
    return 2.0 * mi / (ha + hb);
}

void MarginalTable::add_sample(const Partition& b) {
    if (b.num_items() != n_)
        throw std::invalid_argument("MarginalTable: sample size mismatch");
    Partition aligned = have_ref_ ? align_partition(b, ref_) : b;
    if (!have_ref_) {
        ref_ = b;
        have_ref_ = true;
    }
    if (aligned.num_groups() > cols_) {
        cols_ = aligned.num_groups();
        for (auto& row : counts_)
            row.resize(cols_, 0);
        if (counts_.empty())
            counts_.assign(n_, std::vector<int64_t>(cols_, 0));
    }
    if (counts_.empty())
        counts_.assign(n_, std::vector<int64_t>(cols_, 0));
    for (int i = 0; i < n_; ++i)
        ++counts_[i][aligned[i]];
    ++samples_;
    ++b_hist_[b.num_groups()];
}

void MarginalTable::merge(const MarginalTable& other) {
    if (other.samples_ == 0)
        return;
    if (samples_ == 0) {
        *this = other;
        return;
    }
    // align the other table's reference onto ours and remap its columns
    Partition aligned_ref = align_partition(other.ref_, ref_);
    // recover the column map other-label -> aligned label
    std::vector<int> col_map(other.cols_, -1);
    for (int i = 0; i < n_; ++i)
        col_map[other.ref_[i]] = aligned_ref[i];
    int next = std::max(cols_, other.cols_);
    for (int& m : col_map)
        if (m < 0)
            m = next++; // columns unused by the reference keep fresh slots
    int need = std::max(cols_, *std::max_element(col_map.begin(), col_map.end()) + 1);
    if (need > cols_) {
        cols_ = need;
        for (auto& row : counts_)
            row.resize(cols_, 0);
    }
    for (int i = 0; i < n_; ++i)
        for (int c = 0; c < other.cols_; ++c)
            counts_[i][col_map[c]] += other.counts_[i][c];
    samples_ += other.samples_;
    for (const auto& [k, v] : other.b_hist_)
        b_hist_[k] += v;
}

std::vector<double> MarginalTable::row(int i) const {
    std::vector<double> r(cols_, 0.0);
    if (samples_ == 0)
        return r;
    for (int c = 0; c < cols_; ++c)
        r[c] = static_cast<double>(counts_[i][c]) / samples_;
    return r;
}

Partition MarginalTable::argmax_partition() const {
    if (samples_ == 0)
        throw std::logic_error("MarginalTable: no samples");
    std::vector<int> labels(n_, 0);
    for (int i = 0; i < n_; ++i) {
        int64_t best = -1;
        int arg = 0;
        for (int c = 0; c < cols_; ++c)
            if (counts_[i][c] > best) {
                best = counts_[i][c];
                arg = c;
            }
        labels[i] = arg;
    }
    // compress to contiguous labels
    std::vector<int> remap(cols_, -1);
    int next = 0;
    for (int& l : labels) {
        if (remap[l] < 0)
            remap[l] = next++;
        l = remap[l];
    }
    return Partition(std::move(labels));
}

SelectionReport posterior_odds(const std::string& label_1, double sigma_1,
                               const std::string& label_2, double sigma_2) {
    SelectionReport rep;
    rep.label_1 = label_1;
    rep.label_2 = label_2;
    rep.sigma_1 = sigma_1;
    rep.sigma_2 = sigma_2;
    rep.delta_sigma = sigma_1 - sigma_2;
    rep.log2_odds = sigma_2 - sigma_1; // Lambda = 2^{-(S1 - S2)}
    rep.odds = std::exp2(rep.log2_odds);
    std::ostringstream os;
    if (std::abs(rep.log2_odds) < 2)
        os << "inconclusive (odds close to 1)";
    else if (rep.log2_odds > 0)
        os << label_1 << " favored, log2 odds " << rep.log2_odds;
    else
        os << label_2 << " favored, log2 odds " << -rep.log2_odds;
    rep.interpretation = os.str();
    return rep;
}

} // namespace sbm
