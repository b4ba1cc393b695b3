#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace brokerage {

// Deepest level a cell may have. Beyond 52 bits floor(x * 2^level) stops
// being injective on doubles in [0, 1).
inline constexpr int kMaxLevel = 52;

// Half-open dyadic hypercube prod_j [k_j 2^-level, (k_j + 1) 2^-level).
struct DyadicCell {
    int level = 0;
    std::vector<std::uint64_t> coords;

    static DyadicCell root(std::size_t dim) { return {0, std::vector<std::uint64_t>(dim, 0)}; }

    // Cell of the given level containing x; x must lie in [0,1)^d.
    static DyadicCell containing(std::span<const double> x, int level);

    [[nodiscard]] std::size_t dim() const { return coords.size(); }
    [[nodiscard]] double side_length() const;
    [[nodiscard]] DyadicCell parent() const;
    // Children in the order of the bitmask a, bit j set iff the child takes the upper half along axis j.
    [[nodiscard]] DyadicCell child(std::uint64_t mask) const;
    [[nodiscard]] bool contains(std::span<const double> x) const;
    [[nodiscard]] bool is_ancestor_of(const DyadicCell& other) const;

    friend bool operator==(const DyadicCell&, const DyadicCell&) = default;
    friend std::strong_ordering operator<=>(const DyadicCell& a, const DyadicCell& b);
};

struct CellStats {
    std::uint64_t count = 0;           // contexts seen while terminal
    double valuation_sum = 0.0;        // sum of V+W (or indicator sums for limited feedback)
    std::uint64_t exploit_count = 0;
    std::uint64_t explore_count = 0;
    std::uint64_t frozen_parent_count = 0;
    double frozen_parent_sum = 0.0;
};

// Which counter of the bisected cell is frozen into its children.
enum class SnapshotSource { Contexts, Explorations };

// Growing family of dyadic cells whose terminal members partition [0,1)^d.
class CellTree {
public:
    using NodeId = std::size_t;
    static constexpr NodeId kRoot = 0;

    explicit CellTree(std::size_t dim);

    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }

    // Throws DomainError when a coordinate is outside [0,1), StateError when the
    // descent runs into an erased cell.
    [[nodiscard]] NodeId locate(std::span<const double> x) const;
    [[nodiscard]] DyadicCell locate_terminal(std::span<const double> x) const;
    // Non-throwing descent for integrity checks; nullopt if the containing cell is missing.
    [[nodiscard]] std::optional<NodeId> try_locate(std::span<const double> x) const;

    [[nodiscard]] std::optional<NodeId> find(const DyadicCell& cell) const;

    // Bisects a terminal cell; children start with zeroed counters and a frozen
    // copy of this cell's (count or explorations, valuation_sum). `time` is the
    // round at which the bisection happens and is kept for transcripts.
    std::vector<DyadicCell> bisect(const DyadicCell& cell, std::int64_t time = -1,
                                   SnapshotSource source = SnapshotSource::Contexts);
    // Returns the id of the first child; children occupy [first, first + 2^d).
    NodeId bisect_node(NodeId id, std::int64_t time = -1,
                       SnapshotSource source = SnapshotSource::Contexts);

    [[nodiscard]] bool is_terminal(NodeId id) const { return nodes_[id].first_child == kNone; }
    [[nodiscard]] bool is_erased(NodeId id) const { return nodes_[id].erased; }
    [[nodiscard]] const DyadicCell& cell(NodeId id) const { return nodes_[id].cell; }
    [[nodiscard]] const CellStats& stats(NodeId id) const { return nodes_[id].stats; }
    CellStats& stats(NodeId id) { return nodes_[id].stats; }
    [[nodiscard]] std::int64_t bisected_at(NodeId id) const { return nodes_[id].bisected_at; }
    [[nodiscard]] NodeId first_child(NodeId id) const { return nodes_[id].first_child; }
    [[nodiscard]] std::size_t child_count() const { return std::size_t{1} << dim_; }

    [[nodiscard]] std::vector<NodeId> terminal_ids() const;
    [[nodiscard]] std::vector<DyadicCell> terminal_cells() const;

    // Drops a terminal cell from the family, leaving a hole in the partition.
    // Exists to exercise integrity checks.
    void erase_terminal(const DyadicCell& cell);

    // One line per cell sorted by (level, coords):
    //   <level> <k_1> ... <k_d> <terminal|internal> count sum exploit explore frozen_count frozen_sum bisected_at
    void dump(std::ostream& os) const;

private:
    static constexpr NodeId kNone = static_cast<NodeId>(-1);

    struct Node {
        DyadicCell cell;
        CellStats stats;
        NodeId first_child = kNone;
        std::int64_t bisected_at = -1;
        bool erased = false;
    };

    std::size_t dim_;
    std::vector<Node> nodes_;
};

// True iff terminal volumes sum to exactly 1 and each sampled point is
// contained in exactly one terminal cell (checked by brute force and by descent).
bool partition_check(const CellTree& tree, std::size_t samples = 256, std::uint64_t seed = 0x5eed);

}  // namespace brokerage
