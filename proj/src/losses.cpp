#include "topic/losses.hpp"

#include "topic/errors.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace topic {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 7> kMethodTags = {{
    {Method::ft, "ft"},
    {Method::distill, "distill"},
    {Method::exemplar_anchor, "exemplar_anchor"},
    {Method::topic_al, "topic_al"},
    {Method::topic_al_mml, "topic_al_mml"},
    {Method::topic_al_mml_dl, "topic_al_mml_dl"},
    {Method::joint, "joint"},
}};

LabeledSet with_exemplars(const LabeledSet& batch, const ExemplarSet* exemplars) {
    LabeledSet all = batch;
    if (exemplars) all.append(*exemplars);
    return all;
}

}  // namespace

std::string_view to_string(Method method) {
    for (const auto& [m, tag] : kMethodTags) {
        if (m == method) return tag;
    }
    return "unknown";
}

Method parse_method(std::string_view tag) {
    for (const auto& [m, name] : kMethodTags) {
        if (name == tag) return m;
    }
    throw InputError("unknown method '" + std::string(tag) + "'");
}

bool uses_graph(Method method) {
    return method == Method::topic_al || method == Method::topic_al_mml ||
           method == Method::topic_al_mml_dl;
}

bool uses_exemplars(Method method) {
    return method == Method::distill || method == Method::exemplar_anchor;
}

LossResult cross_entropy_loss(const LabeledSet& batch, const ModelParams& params) {
    LossResult out{0.0, zeros_like(params)};
    const Vector no_feature_grad = Vector::Zero(static_cast<Eigen::Index>(params.feature_dim()));
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const ForwardCache cache = forward(batch.inputs[s], params);
        const ScalarGrad ce = softmax_cross_entropy(cache.logits, batch.labels[s]);
        out.loss += ce.loss;
        backward(cache, ce.grad, no_feature_grad, params, out.grads);
    }
    return out;
}

LossResult anchor_loss(std::span<const Anchor> anchors, const ModelParams& params) {
    LossResult out{0.0, zeros_like(params)};
    const Vector no_logit_grad = Vector::Zero(static_cast<Eigen::Index>(params.class_count()));
    for (const Anchor& a : anchors) {
        const Vector inv = a.variance.cwiseInverse();
        if (!inv.allFinite()) {
            throw StateError("anchor_loss: non-finite inverse variance (variance floor violated)");
        }
        const ForwardCache cache = forward(a.input, params);
        const Vector diff = cache.feature - a.target;
        out.loss += diff.dot(inv.cwiseProduct(diff));
        backward(cache, no_logit_grad, 2.0 * inv.cwiseProduct(diff), params, out.grads);
    }
    return out;
}

LossResult anchor_loss(const NGGraph& graph, std::span<const std::size_t> old_nodes,
                       const ModelParams& params) {
    std::vector<Anchor> anchors;
    anchors.reserve(old_nodes.size());
    for (std::size_t j : old_nodes) {
        const NGNode& node = graph.node(j);
        anchors.push_back({node.pseudo_input, node.centroid, node.variance});
    }
    return anchor_loss(anchors, params);
}

double xi_heuristic(const NGGraph& graph) {
    if (graph.size() < 2) throw StateError("xi_heuristic: need at least two nodes");
    double best = 0.0;
    for (std::size_t i = 0; i < graph.size(); ++i) {
        for (std::size_t j = i + 1; j < graph.size(); ++j) {
            best = std::max(best, euclidean(graph.node(i).centroid, graph.node(j).centroid));
        }
    }
    return best;
}

LossResult min_max_loss(const LabeledSet& batch, const NGGraph& graph, const ModelParams& params,
                        double xi, int session, MinMaxTerms terms) {
    LossResult out{0.0, zeros_like(params)};
    const Vector no_logit_grad = Vector::Zero(static_cast<Eigen::Index>(params.class_count()));

    // Current-session nodes are seen through the extractor; forward once each.
    std::map<std::size_t, ForwardCache> live;
    auto position = [&](std::size_t idx) -> const Vector& {
        const NGNode& node = graph.node(idx);
        if (node.origin_session != session) return node.centroid;
        auto it = live.find(idx);
        if (it == live.end()) it = live.emplace(idx, forward(node.pseudo_input, params)).first;
        return it->second.feature;
    };
    std::map<std::size_t, Vector> live_grad;
    auto push_grad = [&](std::size_t idx, const Vector& g) {
        if (graph.node(idx).origin_session != session) return;
        auto it = live_grad.find(idx);
        if (it == live_grad.end()) {
            live_grad.emplace(idx, g);
        } else {
            it->second += g;
        }
    };

    for (std::size_t s = 0; s < batch.size(); ++s) {
        const Label y = batch.labels[s];
        const ForwardCache cache = forward(batch.inputs[s], params);

        std::size_t j = graph.size();
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t n = 0; n < graph.size(); ++n) {
            if (graph.node(n).label != y) continue;
            const double d = euclidean(cache.feature, graph.node(n).centroid);
            if (!std::isfinite(d)) {
                throw DivergenceError("min_max_loss: non-finite distance to node " + std::to_string(n));
            }
            if (d < best) {
                best = d;
                j = n;
            }
        }
        if (j == graph.size()) {
            throw StateError("min_max_loss: no node carries label " + std::to_string(y));
        }

        if (terms.min_term) {
            out.loss += best;
            if (best > 0.0) {
                const Vector g = (cache.feature - graph.node(j).centroid) / best;
                backward(cache, no_logit_grad, g, params, out.grads);
            }
        }

        if (terms.max_term) {
            for (std::size_t i : graph.neighbors(j)) {
                if (graph.node(i).label == y) continue;
                const Vector& pj = position(j);
                const Vector& pi = position(i);
                const double d = euclidean(pi, pj);
                if (d >= xi) continue;
                out.loss += xi - d;
                if (d > 0.0) {
                    const Vector unit = (pj - pi) / d;
                    push_grad(j, -unit);
                    push_grad(i, unit);
                }
            }
        }
    }

    for (const auto& [idx, g] : live_grad) {
        backward(live.at(idx), no_logit_grad, g, params, out.grads);
    }
    return out;
}

LossResult distillation_loss(const LabeledSet& samples, const ModelParams& snapshot,
                             const ModelParams& params, double temperature, std::size_t n_old) {
    if (n_old == 0) throw InputError("distillation_loss: there are no old classes");
    if (n_old > snapshot.class_count() || n_old > params.class_count()) {
        throw InputError("distillation_loss: n_old exceeds the classifier width");
    }
    if (!(temperature > 0.0)) throw InputError("distillation_loss: temperature must be positive");
    LossResult out{0.0, zeros_like(params)};
    const auto old = static_cast<Eigen::Index>(n_old);
    const Vector no_feature_grad = Vector::Zero(static_cast<Eigen::Index>(params.feature_dim()));
    for (const Vector& x : samples.inputs) {
        const Vector target = softmax(logits(x, snapshot).head(old), temperature);
        const ForwardCache cache = forward(x, params);
        const Vector scaled = cache.logits.head(old) / temperature;
        const double top = scaled.maxCoeff();
        const double log_sum = top + std::log((scaled.array() - top).exp().sum());
        const Vector log_tau = scaled.array() - log_sum;
        out.loss -= target.dot(log_tau);
        Vector grad_o = Vector::Zero(cache.logits.size());
        grad_o.head(old) = (log_tau.array().exp().matrix() - target) / temperature;
        backward(cache, grad_o, no_feature_grad, params, out.grads);
    }
    return out;
}

TotalLoss total_loss(const LabeledSet& batch, const ModelParams& params, const HyperParams& hp,
                     Method method, const ObjectiveContext& ctx) {
    if (uses_graph(method) && ctx.graph == nullptr) {
        throw StateError("method " + std::string(to_string(method)) + " needs a neural gas graph");
    }
    TotalLoss out;
    const bool replay = method == Method::distill;
    const LabeledSet ce_set = replay ? with_exemplars(batch, ctx.exemplars) : batch;
    out.total = cross_entropy_loss(ce_set, params);
    out.ce = out.total.loss;

    auto add = [&](double weight, const LossResult& term) {
        out.total.loss += weight * term.loss;
        axpy(weight, term.grads, out.total.grads);
    };

    switch (method) {
        case Method::ft:
        case Method::joint:
            break;
        case Method::distill:
        case Method::topic_al_mml_dl: {
            if (ctx.snapshot == nullptr) {
                throw StateError("distillation needs a frozen parameter snapshot");
            }
            if (method == Method::topic_al_mml_dl) {
                const LossResult al = anchor_loss(*ctx.graph, ctx.old_nodes, params);
                out.al = al.loss;
                add(hp.lambda1, al);
                const LossResult mml = min_max_loss(batch, *ctx.graph, params, ctx.xi, ctx.session);
                out.mml = mml.loss;
                add(hp.lambda2, mml);
            }
            const LossResult dl = distillation_loss(with_exemplars(batch, ctx.exemplars),
                                                    *ctx.snapshot, params, hp.temperature,
                                                    ctx.n_old);
            out.dl = dl.loss;
            add(hp.gamma, dl);
            break;
        }
        case Method::exemplar_anchor: {
            const LossResult al = anchor_loss(ctx.exemplar_anchors, params);
            out.al = al.loss;
            add(hp.lambda1, al);
            break;
        }
        case Method::topic_al:
        case Method::topic_al_mml: {
            const LossResult al = anchor_loss(*ctx.graph, ctx.old_nodes, params);
            out.al = al.loss;
            add(hp.lambda1, al);
            if (method == Method::topic_al_mml) {
                const LossResult mml = min_max_loss(batch, *ctx.graph, params, ctx.xi, ctx.session);
                out.mml = mml.loss;
                add(hp.lambda2, mml);
            }
            break;
        }
    }
    return out;
}

}  // namespace topic
