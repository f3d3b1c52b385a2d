#pragma once

#include "topic/dataset.hpp"
#include "topic/feature_model.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <vector>

namespace topic {

inline constexpr double kDefaultVarianceFloor = 1e-6;

/// One vertex of the supervised neural gas.
struct NGNode {
    Vector centroid;      // m, feature space
    Vector variance;      // diagonal of Lambda, every entry >= the variance floor
    Vector pseudo_input;  // z, input space; empty until assigned
    Label label = 0;
    int origin_session = 1;
};

/// Node set plus a symmetric edge/age structure. Ages are kept only for live
/// edges; a removed edge reads as age 0.
class NGGraph {
public:
    explicit NGGraph(std::uint32_t lifetime = 200);

    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }
    std::uint32_t lifetime() const { return lifetime_; }

    const NGNode& node(std::size_t i) const { return nodes_.at(i); }
    NGNode& node(std::size_t i) { return nodes_.at(i); }
    const std::vector<NGNode>& nodes() const { return nodes_; }

    /// Appends a node with no edges; returns its index.
    std::size_t add_node(NGNode node);

    bool connected(std::size_t i, std::size_t j) const;
    std::uint32_t age(std::size_t i, std::size_t j) const;
    void connect(std::size_t i, std::size_t j, std::uint32_t age);
    void disconnect(std::size_t i, std::size_t j);
    std::vector<std::size_t> neighbors(std::size_t i) const;
    std::size_t edge_count() const;

    /// Symmetry, empty diagonal and the lifetime bound.
    bool invariants_hold() const;

private:
    std::size_t slot(std::size_t i, std::size_t j) const;
    void check_pair(std::size_t i, std::size_t j) const;

    std::uint32_t lifetime_;
    std::vector<NGNode> nodes_;
    std::vector<std::uint8_t> edge_;
    std::vector<std::uint32_t> age_;
};

struct Ranking {
    std::vector<std::size_t> order;   // order[0] is the winner
    std::vector<double> distances;    // distances[i] = d(f, m_{order[i]})
};

using NodePredicate = std::function<bool(std::size_t)>;
using FeatureFn = std::function<Vector(const Vector&)>;

double euclidean(const Vector& a, const Vector& b);

/// Nodes sorted by Euclidean distance to f, ties to the lower index.
Ranking rank_nodes(const NGGraph& graph, const Vector& f);

std::size_t winner(const NGGraph& graph, const Vector& f);

/// Moves the node at rank position i (1-based) by eta * exp(-i/alpha) * (f - m)
/// for i = 1 .. N-1; the farthest node is left alone. The winner is always
/// eligible, so a single-node graph still learns. Nodes rejected by
/// `updatable` keep their centroid. Returns the ranking taken before the move.
Ranking hebbian_update(NGGraph& graph, const Vector& f, double eta, double alpha,
                       const NodePredicate& updatable = {});

/// Competitive Hebbian edge rule for winner r1 and runner-up r2: every live
/// edge of r1 other than (r1, r2) ages by one and dies past the lifetime, then
/// (r1, r2) is set to age 1.
void edge_update(NGGraph& graph, std::size_t r1, std::size_t r2);

/// node_count centroids sampled from the features without replacement. Labels
/// are copied from the sampled features; pseudo inputs stay empty.
NGGraph init_graph(const std::vector<Vector>& features, const std::vector<Label>& labels,
                   std::size_t node_count, std::uint64_t seed, std::uint32_t lifetime = 200,
                   double variance_floor = kDefaultVarianceFloor);

/// `passes` shuffled sweeps of rank / Hebbian move / edge update. Returns the
/// quantization error after training.
double train_on_features(NGGraph& graph, const std::vector<Vector>& features, double eta,
                         double alpha, std::size_t passes, std::uint64_t seed);

/// z_j and c_j from the training sample whose feature is nearest m_j.
void assign_pseudo_exemplars(NGGraph& graph, const LabeledSet& data, const FeatureFn& feature_fn);
void assign_pseudo_exemplars(NGGraph& graph, const LabeledSet& data,
                             const std::vector<Vector>& features);

/// Per-dimension population variance of the features each node wins, plus the
/// floor. Nodes winning at most one feature get floor * ones. Only nodes
/// accepted by `which` are rewritten; winners are taken over all nodes.
void estimate_variances(NGGraph& graph, const std::vector<Vector>& features,
                        double variance_floor = kDefaultVarianceFloor,
                        const NodePredicate& which = {});

/// Appends k nodes per class present in `shots`. k = 1 uses the shot mean; k > 1
/// runs 10 seeded Lloyd iterations. Each node's z is the shot nearest its
/// centroid.
void grow(NGGraph& graph, const LabeledSet& shots, const std::vector<Vector>& shot_features,
          std::size_t k, int session, std::uint64_t seed,
          double variance_floor = kDefaultVarianceFloor);

std::vector<std::size_t> old_subgraph(const NGGraph& graph, const std::set<Label>& old_labels);

/// m_j <- feature_fn(z_j) for every node.
void refresh_anchors(NGGraph& graph, const FeatureFn& feature_fn);

/// Mean distance from each feature to its winner centroid.
double quantization_error(const NGGraph& graph, const std::vector<Vector>& features);

}  // namespace topic
