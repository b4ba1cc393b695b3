#include "brokerage/dyadic_partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "brokerage/error.hpp"
#include "brokerage/rng.hpp"

namespace brokerage {

namespace {

inline constexpr std::size_t kMaxDim = 16;

void check_point(std::span<const double> x, std::size_t dim) {
    if (x.size() != dim) {
        throw DomainError("context has dimension " + std::to_string(x.size()) + ", expected " +
                          std::to_string(dim));
    }
    for (double v : x) {
        if (!(v >= 0.0 && v < 1.0)) {
            throw DomainError("context coordinate " + std::to_string(v) + " outside [0,1)");
        }
    }
}

// floor(x * 2^level); ldexp is exact so no rounding happens before the floor.
inline std::uint64_t dyadic_index(double x, int level) {
    return static_cast<std::uint64_t>(std::floor(std::ldexp(x, level)));
}

}  // namespace

DyadicCell DyadicCell::containing(std::span<const double> x, int level) {
    check_point(x, x.size());
    DyadicCell c{level, std::vector<std::uint64_t>(x.size())};
    for (std::size_t j = 0; j < x.size(); ++j) c.coords[j] = dyadic_index(x[j], level);
    return c;
}

double DyadicCell::side_length() const { return std::ldexp(1.0, -level); }

DyadicCell DyadicCell::parent() const {
    if (level == 0) return *this;
    DyadicCell p{level - 1, coords};
    for (auto& k : p.coords) k >>= 1;
    return p;
}

DyadicCell DyadicCell::child(std::uint64_t mask) const {
    DyadicCell c{level + 1, coords};
    for (std::size_t j = 0; j < c.coords.size(); ++j) c.coords[j] = 2 * c.coords[j] + ((mask >> j) & 1U);
    return c;
}

bool DyadicCell::contains(std::span<const double> x) const {
    if (x.size() != coords.size()) return false;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!(x[j] >= 0.0 && x[j] < 1.0)) return false;
        if (dyadic_index(x[j], level) != coords[j]) return false;
    }
    return true;
}

bool DyadicCell::is_ancestor_of(const DyadicCell& other) const {
    if (other.dim() != dim() || other.level < level) return false;
    const int shift = other.level - level;
    for (std::size_t j = 0; j < coords.size(); ++j) {
        if ((other.coords[j] >> shift) != coords[j]) return false;
    }
    return true;
}

std::strong_ordering operator<=>(const DyadicCell& a, const DyadicCell& b) {
    if (auto c = a.level <=> b.level; c != 0) return c;
    return std::lexicographical_compare_three_way(a.coords.begin(), a.coords.end(), b.coords.begin(),
                                                  b.coords.end());
}

CellTree::CellTree(std::size_t dim) : dim_(dim) {
    if (dim == 0 || dim > kMaxDim) {
        throw DomainError("cell tree dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    }
    nodes_.push_back(Node{DyadicCell::root(dim), {}, kNone, -1, false});
}

std::optional<CellTree::NodeId> CellTree::try_locate(std::span<const double> x) const {
    NodeId id = kRoot;
    while (true) {
        const Node& n = nodes_[id];
        if (n.erased) return std::nullopt;
        if (n.first_child == kNone) return id;
        const int level = n.cell.level + 1;
        std::uint64_t mask = 0;
        for (std::size_t j = 0; j < dim_; ++j) mask |= (dyadic_index(x[j], level) & 1U) << j;
        id = n.first_child + mask;
    }
}

CellTree::NodeId CellTree::locate(std::span<const double> x) const {
    check_point(x, dim_);
    auto id = try_locate(x);
    if (!id) throw StateError("point falls into a cell missing from the partition");
    return *id;
}

DyadicCell CellTree::locate_terminal(std::span<const double> x) const { return nodes_[locate(x)].cell; }

std::optional<CellTree::NodeId> CellTree::find(const DyadicCell& cell) const {
    if (cell.dim() != dim_ || cell.level < 0) return std::nullopt;
    NodeId id = kRoot;
    for (int level = 1; level <= cell.level; ++level) {
        const Node& n = nodes_[id];
        if (n.first_child == kNone) return std::nullopt;
        const int shift = cell.level - level;
        std::uint64_t mask = 0;
        for (std::size_t j = 0; j < dim_; ++j) mask |= ((cell.coords[j] >> shift) & 1U) << j;
        id = n.first_child + mask;
    }
    if (nodes_[id].erased) return std::nullopt;
    return id;
}

CellTree::NodeId CellTree::bisect_node(NodeId id, std::int64_t time, SnapshotSource source) {
    if (nodes_[id].erased || nodes_[id].first_child != kNone) {
        throw StateError("only terminal cells can be bisected");
    }
    if (nodes_[id].cell.level >= kMaxLevel) {
        throw ResourceError("cannot bisect below level " + std::to_string(kMaxLevel));
    }
    const NodeId first = nodes_.size();
    const std::size_t k = child_count();
    nodes_.reserve(nodes_.size() + k);
    CellStats seed;
    const CellStats& ps = nodes_[id].stats;
    seed.frozen_parent_count = source == SnapshotSource::Contexts ? ps.count : ps.explore_count;
    seed.frozen_parent_sum = ps.valuation_sum;
    for (std::uint64_t mask = 0; mask < k; ++mask) {
        nodes_.push_back(Node{nodes_[id].cell.child(mask), seed, kNone, -1, false});
    }
    nodes_[id].first_child = first;
    nodes_[id].bisected_at = time;
    return first;
}

std::vector<DyadicCell> CellTree::bisect(const DyadicCell& cell, std::int64_t time, SnapshotSource source) {
    auto id = find(cell);
    if (!id) throw StateError("cell is not part of the tree");
    const NodeId first = bisect_node(*id, time, source);
    std::vector<DyadicCell> out;
    out.reserve(child_count());
    for (std::size_t m = 0; m < child_count(); ++m) out.push_back(nodes_[first + m].cell);
    return out;
}

std::vector<CellTree::NodeId> CellTree::terminal_ids() const {
    std::vector<NodeId> ids;
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        if (!nodes_[id].erased && nodes_[id].first_child == kNone) ids.push_back(id);
    }
    return ids;
}

std::vector<DyadicCell> CellTree::terminal_cells() const {
    std::vector<DyadicCell> out;
    for (NodeId id : terminal_ids()) out.push_back(nodes_[id].cell);
    return out;
}

void CellTree::erase_terminal(const DyadicCell& cell) {
    auto id = find(cell);
    if (!id || !is_terminal(*id)) throw StateError("only existing terminal cells can be erased");
    nodes_[*id].erased = true;
}

void CellTree::dump(std::ostream& os) const {
    std::vector<NodeId> order;
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        if (!nodes_[id].erased) order.push_back(id);
    }
    std::sort(order.begin(), order.end(),
              [&](NodeId a, NodeId b) { return nodes_[a].cell < nodes_[b].cell; });
    const auto old_precision = os.precision(17);
    for (NodeId id : order) {
        const Node& n = nodes_[id];
        os << n.cell.level;
        for (auto k : n.cell.coords) os << ' ' << k;
        os << (n.first_child == kNone ? " terminal " : " internal ") << n.stats.count << ' '
           << n.stats.valuation_sum << ' ' << n.stats.exploit_count << ' ' << n.stats.explore_count << ' '
           << n.stats.frozen_parent_count << ' ' << n.stats.frozen_parent_sum << ' ' << n.bisected_at << '\n';
    }
    os.precision(old_precision);
}

bool partition_check(const CellTree& tree, std::size_t samples, std::uint64_t seed) {
    const std::size_t d = tree.dim();
    const auto terminals = tree.terminal_cells();

    // Sum of 2^{-d*level} in exact binary: fold counts level by level from the bottom.
    int max_level = 0;
    for (const auto& c : terminals) max_level = std::max(max_level, c.level);
    std::vector<std::uint64_t> per_level(static_cast<std::size_t>(max_level) + 1, 0);
    for (const auto& c : terminals) ++per_level[static_cast<std::size_t>(c.level)];
    const std::uint64_t fanout_mask = (std::uint64_t{1} << d) - 1;
    for (int level = max_level; level > 0; --level) {
        const auto cnt = per_level[static_cast<std::size_t>(level)];
        if ((cnt & fanout_mask) != 0) return false;
        per_level[static_cast<std::size_t>(level) - 1] += cnt >> d;
    }
    if (per_level[0] != 1) return false;

    RngStream rng(seed);
    std::vector<double> x(d);
    for (std::size_t s = 0; s < samples; ++s) {
        for (auto& v : x) v = rng.uniform();
        std::size_t hits = 0;
        for (const auto& c : terminals) hits += c.contains(x) ? 1 : 0;
        if (hits != 1) return false;
        auto id = tree.try_locate(x);
        if (!id || !tree.cell(*id).contains(x)) return false;
    }
    return true;
}

}  // namespace brokerage
