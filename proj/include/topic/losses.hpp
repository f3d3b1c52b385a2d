#pragma once

#include "topic/dataset.hpp"
#include "topic/feature_model.hpp"
#include "topic/neural_gas.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace topic {

struct HyperParams {
    // Neural gas.
    double eta = 0.02;
    double alpha = 1.0;
    std::uint32_t lifetime = 200;
    std::size_t node_budget = 40;
    std::size_t growth_k = 1;
    std::size_t ng_passes = 10;
    double variance_floor = kDefaultVarianceFloor;

    // Objective weights.
    double lambda1 = 0.5;
    double lambda2 = 0.005;
    std::optional<double> xi;  // unset: max pairwise centroid distance at session start
    double gamma = 1.0;
    double temperature = 2.0;

    // Optimisation.
    double base_lr = 0.1;
    double inc_lr = 0.1;
    std::size_t base_epochs = 50;
    std::size_t inc_epochs = 100;
    std::size_t batch_size = 128;
    std::size_t exemplars_per_class = 2;
    double clip_norm = 1.0;  // global gradient-norm cap for few-shot steps; 0 disables
};

enum class Method {
    ft,
    distill,
    exemplar_anchor,
    topic_al,
    topic_al_mml,
    topic_al_mml_dl,
    joint,  // upper bound: retrains on every sample seen so far
};

std::string_view to_string(Method method);
/// Throws InputError for unknown tags.
Method parse_method(std::string_view tag);
bool uses_graph(Method method);
bool uses_exemplars(Method method);

/// Stored old-class inputs (P).
using ExemplarSet = LabeledSet;

/// One anchored input: the loss penalises (f(input) - target) weighted by
/// 1 / variance.
struct Anchor {
    Vector input;
    Vector target;
    Vector variance;
};

/// Sum of softmax cross-entropy over the batch.
LossResult cross_entropy_loss(const LabeledSet& batch, const ModelParams& params);

LossResult anchor_loss(std::span<const Anchor> anchors, const ModelParams& params);

/// Anchor loss over the given graph nodes: m_hat = f(z), stored m is constant.
LossResult anchor_loss(const NGGraph& graph, std::span<const std::size_t> old_nodes,
                       const ModelParams& params);

/// Maximum pairwise centroid distance.
double xi_heuristic(const NGGraph& graph);

struct MinMaxTerms {
    bool min_term = true;
    bool max_term = true;
};

/// For each (x, y): distance from f(x) to the nearest node labelled y, plus
/// max(0, xi - d(m_i, m_j)) over that node's differently labelled neighbours.
/// Inside the max term, nodes created in `session` are evaluated as f(z; theta)
/// so the push reaches the extractor; older centroids are constants.
LossResult min_max_loss(const LabeledSet& batch, const NGGraph& graph, const ModelParams& params,
                        double xi, int session, MinMaxTerms terms = {});

/// -sum_k tau_k(x; snapshot) log tau_k(x; params) over the first n_old logits at
/// the given temperature, summed over the samples.
LossResult distillation_loss(const LabeledSet& samples, const ModelParams& snapshot,
                             const ModelParams& params, double temperature, std::size_t n_old);

/// Everything the composed objective may need besides the batch.
struct ObjectiveContext {
    const NGGraph* graph = nullptr;
    std::vector<std::size_t> old_nodes;
    double xi = 0.0;
    int session = 1;
    const ModelParams* snapshot = nullptr;
    std::size_t n_old = 0;
    const ExemplarSet* exemplars = nullptr;
    std::span<const Anchor> exemplar_anchors;
};

struct TotalLoss {
    LossResult total;
    double ce = 0.0;
    double al = 0.0;
    double mml = 0.0;
    double dl = 0.0;
};

/// Composes the terms selected by `method`:
///   ft, joint         CE
///   distill           CE + gamma DL, both over batch and exemplars
///   exemplar_anchor   CE + lambda1 AL over exemplar anchors (unit variance)
///   topic_al          CE + lambda1 AL
///   topic_al_mml      CE + lambda1 AL + lambda2 MML
///   topic_al_mml_dl   CE + lambda1 AL + lambda2 MML + gamma DL
TotalLoss total_loss(const LabeledSet& batch, const ModelParams& params, const HyperParams& hp,
                     Method method, const ObjectiveContext& ctx);

}  // namespace topic
