#pragma once

// Small randomized problem instances shared by the loss tests and the
// acceptance gradient suite.

#include "oracles.hpp"

#include "topic/losses.hpp"

#include <random>

namespace instances {

inline constexpr std::size_t kInput = 4;
inline constexpr std::size_t kHidden = 5;
inline constexpr std::size_t kFeature = 3;
inline constexpr std::size_t kOldClasses = 3;
inline constexpr std::size_t kNewClasses = 2;
inline constexpr int kSession = 2;

struct LossInstance {
    topic::ModelParams params;
    topic::ModelParams snapshot;
    topic::NGGraph graph;
    std::vector<std::size_t> old_nodes;
    topic::LabeledSet batch;      // new-class samples
    topic::ExemplarSet exemplars;  // old-class samples
    std::vector<topic::Anchor> exemplar_anchors;
    double xi = 0.0;
};

inline topic::ModelParams perturbed(topic::ModelParams p, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> noise(0.0, scale);
    for (auto block : p.blocks()) {
        for (double& v : block) v += noise(rng);
    }
    return p;
}

// Two old nodes per old class anchored near their current features, one new
// node per new class wired to a couple of old nodes of other classes.
inline LossInstance make(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    LossInstance inst;
    const std::size_t classes = kOldClasses + kNewClasses;
    inst.params = topic::init_params({kInput, kHidden, kFeature, classes}, seed);
    inst.params.b1 = oracle::random_vector(kHidden, rng, 0.3);
    inst.params.phi = topic::Matrix::Random(kFeature, classes) * 0.8;
    inst.snapshot = perturbed(inst.params, rng, 0.2);

    std::uniform_real_distribution<double> var(0.3, 2.0);
    for (topic::Label y = 0; y < kOldClasses; ++y) {
        for (int rep = 0; rep < 2; ++rep) {
            topic::NGNode node;
            node.pseudo_input = oracle::random_vector(kInput, rng);
            node.centroid = topic::extract_feature(node.pseudo_input, inst.params) +
                            oracle::random_vector(kFeature, rng, 0.3);
            node.variance.resize(kFeature);
            for (Eigen::Index d = 0; d < node.variance.size(); ++d) node.variance(d) = var(rng);
            node.label = y;
            node.origin_session = 1;
            inst.old_nodes.push_back(inst.graph.add_node(node));
        }
    }
    std::uniform_int_distribution<std::size_t> pick_old(0, inst.old_nodes.size() - 1);
    for (topic::Label y = kOldClasses; y < classes; ++y) {
        topic::NGNode node;
        node.pseudo_input = oracle::random_vector(kInput, rng);
        node.centroid = topic::extract_feature(node.pseudo_input, inst.params);
        node.variance = topic::Vector::Constant(kFeature, topic::kDefaultVarianceFloor);
        node.label = y;
        node.origin_session = kSession;
        const std::size_t j = inst.graph.add_node(node);
        for (int e = 0; e < 2; ++e) inst.graph.connect(j, inst.old_nodes[pick_old(rng)], 1);
        for (int s = 0; s < 3; ++s) {
            inst.batch.push_back(node.pseudo_input + oracle::random_vector(kInput, rng, 0.5), y);
        }
    }
    for (topic::Label y = 0; y < kOldClasses; ++y) {
        inst.exemplars.push_back(oracle::random_vector(kInput, rng), y);
    }
    for (std::size_t s = 0; s < inst.exemplars.size(); ++s) {
        const topic::Vector& x = inst.exemplars.inputs[s];
        inst.exemplar_anchors.push_back({x, topic::extract_feature(x, inst.params) +
                                                oracle::random_vector(kFeature, rng, 0.2),
                                         topic::Vector::Ones(kFeature)});
    }
    // Margin above every current pairwise distance so each wired pair is active.
    inst.xi = topic::xi_heuristic(inst.graph) + 1.0;
    return inst;
}

inline topic::ObjectiveContext context(const LossInstance& inst) {
    topic::ObjectiveContext ctx;
    ctx.graph = &inst.graph;
    ctx.old_nodes = inst.old_nodes;
    ctx.xi = inst.xi;
    ctx.session = kSession;
    ctx.snapshot = &inst.snapshot;
    ctx.n_old = kOldClasses;
    ctx.exemplars = &inst.exemplars;
    ctx.exemplar_anchors = inst.exemplar_anchors;
    return ctx;
}

}  // namespace instances
