#include "topic/neural_gas.hpp"

#include "topic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>

namespace topic {

NGGraph::NGGraph(std::uint32_t lifetime) : lifetime_(lifetime) {
    if (lifetime == 0) throw InputError("edge lifetime must be positive");
}

std::size_t NGGraph::slot(std::size_t i, std::size_t j) const { return i * nodes_.size() + j; }

void NGGraph::check_pair(std::size_t i, std::size_t j) const {
    if (i >= nodes_.size() || j >= nodes_.size()) throw InputError("node index out of range");
}

std::size_t NGGraph::add_node(NGNode node) {
    const std::size_t n = nodes_.size();
    std::vector<std::uint8_t> edge((n + 1) * (n + 1), 0);
    std::vector<std::uint32_t> age((n + 1) * (n + 1), 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            edge[i * (n + 1) + j] = edge_[i * n + j];
            age[i * (n + 1) + j] = age_[i * n + j];
        }
    }
    edge_ = std::move(edge);
    age_ = std::move(age);
    nodes_.push_back(std::move(node));
    return n;
}

bool NGGraph::connected(std::size_t i, std::size_t j) const {
    check_pair(i, j);
    return edge_[slot(i, j)] != 0;
}

std::uint32_t NGGraph::age(std::size_t i, std::size_t j) const {
    check_pair(i, j);
    return age_[slot(i, j)];
}

void NGGraph::connect(std::size_t i, std::size_t j, std::uint32_t a) {
    check_pair(i, j);
    if (i == j) throw InputError("self edges are not allowed");
    if (a > lifetime_) throw InputError("edge age exceeds the lifetime");
    edge_[slot(i, j)] = edge_[slot(j, i)] = 1;
    age_[slot(i, j)] = age_[slot(j, i)] = a;
}

void NGGraph::disconnect(std::size_t i, std::size_t j) {
    check_pair(i, j);
    edge_[slot(i, j)] = edge_[slot(j, i)] = 0;
    age_[slot(i, j)] = age_[slot(j, i)] = 0;
}

std::vector<std::size_t> NGGraph::neighbors(std::size_t i) const {
    check_pair(i, i);
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
        if (edge_[slot(i, j)]) out.push_back(j);
    }
    return out;
}

std::size_t NGGraph::edge_count() const {
    std::size_t count = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        for (std::size_t j = i + 1; j < nodes_.size(); ++j) count += edge_[slot(i, j)];
    }
    return count;
}

bool NGGraph::invariants_hold() const {
    const std::size_t n = nodes_.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (edge_[slot(i, i)] || age_[slot(i, i)]) return false;
        for (std::size_t j = 0; j < n; ++j) {
            if (edge_[slot(i, j)] != edge_[slot(j, i)] || age_[slot(i, j)] != age_[slot(j, i)]) {
                return false;
            }
            if (edge_[slot(i, j)] && age_[slot(i, j)] > lifetime_) return false;
            if (!edge_[slot(i, j)] && age_[slot(i, j)] != 0) return false;
        }
    }
    return true;
}

double euclidean(const Vector& a, const Vector& b) { return (a - b).norm(); }

Ranking rank_nodes(const NGGraph& graph, const Vector& f) {
    if (graph.empty()) throw StateError("rank_nodes: graph has no nodes");
    const std::size_t n = graph.size();
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vector& m = graph.node(i).centroid;
        if (m.size() != f.size()) throw InputError("rank_nodes: feature dimension mismatch");
        dist[i] = euclidean(f, m);
    }
    Ranking r;
    r.order.resize(n);
    std::iota(r.order.begin(), r.order.end(), std::size_t{0});
    std::stable_sort(r.order.begin(), r.order.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    r.distances.reserve(n);
    for (std::size_t idx : r.order) r.distances.push_back(dist[idx]);
    return r;
}

std::size_t winner(const NGGraph& graph, const Vector& f) {
    if (graph.empty()) throw StateError("winner: graph has no nodes");
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < graph.size(); ++i) {
        const double d = euclidean(f, graph.node(i).centroid);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

Ranking hebbian_update(NGGraph& graph, const Vector& f, double eta, double alpha,
                       const NodePredicate& updatable) {
    if (eta < 0.0 || eta > 1.0) throw InputError("hebbian_update: eta must lie in [0, 1]");
    if (!(alpha > 0.0)) throw InputError("hebbian_update: alpha must be positive");
    Ranking r = rank_nodes(graph, f);
    const std::size_t last = std::max<std::size_t>(r.order.size() - 1, 1);
    for (std::size_t pos = 0; pos < last; ++pos) {
        const std::size_t idx = r.order[pos];
        if (updatable && !updatable(idx)) continue;
        const double rate = eta * std::exp(-static_cast<double>(pos + 1) / alpha);
        Vector& m = graph.node(idx).centroid;
        m += rate * (f - m);
    }
    return r;
}

void edge_update(NGGraph& graph, std::size_t r1, std::size_t r2) {
    if (r1 == r2) throw InputError("edge_update: winner and runner-up must differ");
    if (r1 >= graph.size() || r2 >= graph.size()) {
        throw InputError("edge_update: node index out of range");
    }
    for (std::size_t j = 0; j < graph.size(); ++j) {
        if (j == r2 || j == r1 || !graph.connected(r1, j)) continue;
        const std::uint32_t aged = graph.age(r1, j) + 1;
        if (aged > graph.lifetime()) {
            graph.disconnect(r1, j);
        } else {
            graph.connect(r1, j, aged);
        }
    }
    graph.connect(r1, r2, 1);
}

NGGraph init_graph(const std::vector<Vector>& features, const std::vector<Label>& labels,
                   std::size_t node_count, std::uint64_t seed, std::uint32_t lifetime,
                   double variance_floor) {
    if (labels.size() != features.size()) {
        throw InputError("init_graph: features and labels differ in length");
    }
    if (node_count > features.size()) {
        throw InputError("init_graph: requested " + std::to_string(node_count) +
                         " nodes from only " + std::to_string(features.size()) + " features");
    }
    std::vector<std::size_t> pool(features.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first node_count slots are a uniform sample.
    for (std::size_t i = 0; i < node_count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    NGGraph graph(lifetime);
    for (std::size_t i = 0; i < node_count; ++i) {
        const Vector& f = features[pool[i]];
        NGNode node;
        node.centroid = f;
        node.variance = Vector::Constant(f.size(), variance_floor);
        node.label = labels[pool[i]];
        node.origin_session = 1;
        graph.add_node(std::move(node));
    }
    return graph;
}

double train_on_features(NGGraph& graph, const std::vector<Vector>& features, double eta,
                         double alpha, std::size_t passes, std::uint64_t seed) {
    if (passes == 0) throw InputError("train_on_features: passes must be at least 1");
    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t pass = 0; pass < passes; ++pass) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t idx : order) {
            const Ranking r = hebbian_update(graph, features[idx], eta, alpha);
            if (r.order.size() >= 2) edge_update(graph, r.order[0], r.order[1]);
        }
    }
    return features.empty() ? 0.0 : quantization_error(graph, features);
}

void assign_pseudo_exemplars(NGGraph& graph, const LabeledSet& data,
                             const std::vector<Vector>& features) {
    if (data.empty()) throw InputError("assign_pseudo_exemplars: dataset is empty");
    if (features.size() != data.size()) {
        throw InputError("assign_pseudo_exemplars: feature count differs from dataset size");
    }
    for (std::size_t j = 0; j < graph.size(); ++j) {
        NGNode& node = graph.node(j);
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < features.size(); ++s) {
            const double d = euclidean(features[s], node.centroid);
            if (d < best_d) {
                best_d = d;
                best = s;
            }
        }
        node.pseudo_input = data.inputs[best];
        node.label = data.labels[best];
    }
}

void assign_pseudo_exemplars(NGGraph& graph, const LabeledSet& data, const FeatureFn& feature_fn) {
    std::vector<Vector> features;
    features.reserve(data.size());
    for (const auto& x : data.inputs) features.push_back(feature_fn(x));
    assign_pseudo_exemplars(graph, data, features);
}

void estimate_variances(NGGraph& graph, const std::vector<Vector>& features,
                        double variance_floor, const NodePredicate& which) {
    if (!(variance_floor > 0.0)) throw InputError("variance floor must be positive");
    const std::size_t n = graph.size();
    std::vector<std::vector<std::size_t>> wins(n);
    if (n > 0) {
        for (std::size_t s = 0; s < features.size(); ++s) wins[winner(graph, features[s])].push_back(s);
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (which && !which(j)) continue;
        NGNode& node = graph.node(j);
        const auto dim = node.centroid.size();
        if (wins[j].size() <= 1) {
            node.variance = Vector::Constant(dim, variance_floor);
            continue;
        }
        Vector mean = Vector::Zero(dim);
        for (std::size_t s : wins[j]) mean += features[s];
        mean /= static_cast<double>(wins[j].size());
        Vector var = Vector::Zero(dim);
        for (std::size_t s : wins[j]) var += (features[s] - mean).cwiseAbs2();
        var /= static_cast<double>(wins[j].size());
        node.variance = var.array() + variance_floor;
    }
}

namespace {

std::vector<Vector> kmeans(const std::vector<Vector>& points, std::size_t k, std::mt19937_64& rng) {
    std::vector<std::size_t> pool(points.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<Vector> centers;
    for (std::size_t c = 0; c < k; ++c) centers.push_back(points[pool[c]]);

    std::vector<std::size_t> assign(points.size(), 0);
    for (int iter = 0; iter < 10; ++iter) {
        for (std::size_t p = 0; p < points.size(); ++p) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = euclidean(points[p], centers[c]);
                if (d < best) {
                    best = d;
                    assign[p] = c;
                }
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            Vector sum = Vector::Zero(centers[c].size());
            std::size_t count = 0;
            for (std::size_t p = 0; p < points.size(); ++p) {
                if (assign[p] == c) {
                    sum += points[p];
                    ++count;
                }
            }
            // An emptied cluster keeps its previous center.
            if (count > 0) centers[c] = sum / static_cast<double>(count);
        }
    }
    return centers;
}

}  // namespace

void grow(NGGraph& graph, const LabeledSet& shots, const std::vector<Vector>& shot_features,
          std::size_t k, int session, std::uint64_t seed, double variance_floor) {
    if (shot_features.size() != shots.size()) {
        throw InputError("grow: feature count differs from shot count");
    }
    if (k == 0) throw InputError("grow: k must be at least 1");

    std::map<Label, std::vector<std::size_t>> by_class;
    for (std::size_t s = 0; s < shots.size(); ++s) by_class[shots.labels[s]].push_back(s);

    for (const auto& node : graph.nodes()) {
        if (by_class.count(node.label)) {
            throw InputError("grow: class " + std::to_string(node.label) + " already has nodes");
        }
    }
    for (const auto& [label, members] : by_class) {
        if (k >= members.size()) {
            throw InputError("grow: k must be smaller than the shot count of class " +
                             std::to_string(label));
        }
    }

    std::mt19937_64 rng(seed);
    for (const auto& [label, members] : by_class) {
        std::vector<Vector> points;
        for (std::size_t s : members) points.push_back(shot_features[s]);

        std::vector<Vector> centers;
        if (k == 1) {
            Vector mean = Vector::Zero(points.front().size());
            for (const auto& p : points) mean += p;
            centers.push_back(mean / static_cast<double>(points.size()));
        } else {
            centers = kmeans(points, k, rng);
        }

        for (auto& c : centers) {
            std::size_t nearest = 0;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t p = 0; p < points.size(); ++p) {
                const double d = euclidean(points[p], c);
                if (d < best) {
                    best = d;
                    nearest = p;
                }
            }
            NGNode node;
            node.variance = Vector::Constant(c.size(), variance_floor);
            node.centroid = std::move(c);
            node.pseudo_input = shots.inputs[members[nearest]];
            node.label = label;
            node.origin_session = session;
            graph.add_node(std::move(node));
        }
    }
}

std::vector<std::size_t> old_subgraph(const NGGraph& graph, const std::set<Label>& old_labels) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < graph.size(); ++j) {
        if (old_labels.count(graph.node(j).label)) out.push_back(j);
    }
    return out;
}

void refresh_anchors(NGGraph& graph, const FeatureFn& feature_fn) {
    for (std::size_t j = 0; j < graph.size(); ++j) {
        NGNode& node = graph.node(j);
        node.centroid = feature_fn(node.pseudo_input);
    }
}

double quantization_error(const NGGraph& graph, const std::vector<Vector>& features) {
    if (features.empty()) throw InputError("quantization_error: no features given");
    if (graph.empty()) throw StateError("quantization_error: graph has no nodes");
    double total = 0.0;
    for (const auto& f : features) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& node : graph.nodes()) best = std::min(best, euclidean(f, node.centroid));
        total += best;
    }
    return total / static_cast<double>(features.size());
}

}  // namespace topic
