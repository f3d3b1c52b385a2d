#include "topic/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>

namespace topic {

namespace {

// Seed streams for the independent random choices of one run.
enum SeedStream : std::uint64_t {
    kStream = 1,
    kModelInit = 2,
    kBaseShuffle = 3,
    kGraphInit = 4,
    kGraphTrain = 5,
    kExpand = 100,
    kGrow = 200,
    kMemory = 300,
    kJointShuffle = 400,
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void require_finite(double loss, int session, const char* stage) {
    if (!std::isfinite(loss)) {
        throw SessionDivergence(session, std::string("non-finite loss during ") + stage +
                                             " in session " + std::to_string(session));
    }
}

void require_finite(const ModelParams& p, int session, const char* stage) {
    for (auto block : p.blocks()) {
        for (double v : block) {
            if (!std::isfinite(v)) {
                throw SessionDivergence(session, std::string("non-finite parameters after ") + stage +
                                                     " in session " + std::to_string(session));
            }
        }
    }
}

// k samples per label, drawn uniformly without replacement.
ExemplarSet sample_per_class(const LabeledSet& data, const std::vector<Label>& labels,
                             std::size_t per_class, std::mt19937_64& rng) {
    ExemplarSet out;
    for (Label y : labels) {
        std::vector<std::size_t> members;
        for (std::size_t s = 0; s < data.size(); ++s) {
            if (data.labels[s] == y) members.push_back(s);
        }
        std::shuffle(members.begin(), members.end(), rng);
        members.resize(std::min(per_class, members.size()));
        std::sort(members.begin(), members.end());
        for (std::size_t s : members) out.push_back(data.inputs[s], y);
    }
    return out;
}

ExemplarSet sample_uniform(const LabeledSet& data, std::size_t count, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min(count, idx.size()));
    std::sort(idx.begin(), idx.end());
    ExemplarSet out;
    for (std::size_t s : idx) out.push_back(data.inputs[s], data.labels[s]);
    return out;
}

// The objective is written as sums over samples; steps use the per-sample
// average so the learning rate does not depend on the batch size.
ModelParams averaged_step(ModelParams params, Gradients grads, double lr, std::size_t samples,
                          double clip_norm = 0.0) {
    const double scale = 1.0 / static_cast<double>(std::max<std::size_t>(samples, 1));
    double sq = 0.0;
    for (auto block : grads.blocks()) {
        for (double g : block) sq += g * g;
    }
    const double norm = std::sqrt(sq) * scale;
    const double clip = clip_norm > 0.0 && norm > clip_norm ? clip_norm / norm : 1.0;
    return sgd_step(std::move(params), grads, lr * scale * clip);
}

// Shuffled mini-batch SGD on the averaged cross-entropy.
ModelParams minibatch_sgd(ModelParams params, const LabeledSet& data, std::size_t epochs,
                          std::size_t batch_size, const std::function<double(std::size_t)>& lr_at,
                          std::mt19937_64& rng, int session) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch = std::max<std::size_t>(batch_size, 1);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        const double lr = lr_at(epoch);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            LabeledSet mb;
            for (std::size_t s = start; s < std::min(start + batch, order.size()); ++s) {
                mb.push_back(data.inputs[order[s]], data.labels[order[s]]);
            }
            const LossResult ce = cross_entropy_loss(mb, params);
            require_finite(ce.loss, session, "mini-batch training");
            params = averaged_step(std::move(params), ce.grads, lr, mb.size());
        }
    }
    return params;
}

// base_lr with 10x drops at 60% and 80% of the base epochs.
std::function<double(std::size_t)> base_schedule(const HyperParams& hp) {
    const auto drop1 = static_cast<std::size_t>(std::ceil(0.6 * static_cast<double>(hp.base_epochs)));
    const auto drop2 = static_cast<std::size_t>(std::ceil(0.8 * static_cast<double>(hp.base_epochs)));
    return [=](std::size_t epoch) {
        double lr = hp.base_lr;
        if (epoch >= drop1) lr *= 0.1;
        if (epoch >= drop2) lr *= 0.1;
        return lr;
    };
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL));
}

std::size_t SessionStream::classes_through(int upto) const {
    std::size_t total = 0;
    for (const auto& s : sessions) {
        if (s.index <= upto) total += s.labels.size();
    }
    return total;
}

bool SessionStream::labels_disjoint() const {
    std::set<Label> seen;
    for (const auto& s : sessions) {
        for (Label y : s.labels) {
            if (!seen.insert(y).second) return false;
        }
        std::set<Label> own(s.labels.begin(), s.labels.end());
        for (Label y : s.train.labels) {
            if (!own.count(y)) return false;
        }
    }
    return true;
}

SessionStream make_synthetic_stream(const StreamSpec& spec, std::uint64_t seed) {
    if (spec.base_classes == 0) throw InputError("stream: base_classes must be positive");
    if (spec.ways == 0 || spec.new_classes % spec.ways != 0) {
        throw InputError("stream: new_classes (" + std::to_string(spec.new_classes) +
                         ") must be a multiple of ways (" + std::to_string(spec.ways) + ")");
    }
    if (spec.shots == 0) throw InputError("stream: shots must be at least 1");
    if (spec.input_dim == 0 || spec.train_per_base == 0 || spec.test_per_class == 0) {
        throw InputError("stream: dimensions and sample counts must be positive");
    }
    if (!(spec.cluster_spread > 0.0) || !(spec.class_separation > 0.0)) {
        throw InputError("stream: cluster_spread and class_separation must be positive");
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> mean_dist(0.0, spec.class_separation);
    std::normal_distribution<double> noise(0.0, spec.cluster_spread);
    const auto dim = static_cast<Eigen::Index>(spec.input_dim);
    const std::size_t total = spec.base_classes + spec.new_classes;

    std::vector<Vector> means;
    for (std::size_t c = 0; c < total; ++c) {
        Vector m(dim);
        for (Eigen::Index d = 0; d < dim; ++d) m(d) = mean_dist(rng);
        means.push_back(std::move(m));
    }
    auto draw = [&](Label y) {
        Vector x(dim);
        for (Eigen::Index d = 0; d < dim; ++d) x(d) = means[y](d) + noise(rng);
        return x;
    };

    SessionStream stream;
    stream.input_dim = spec.input_dim;
    const std::size_t count = 1 + spec.new_classes / spec.ways;
    Label next = 0;
    for (std::size_t t = 0; t < count; ++t) {
        Session s;
        s.index = static_cast<int>(t + 1);
        const std::size_t classes = t == 0 ? spec.base_classes : spec.ways;
        const std::size_t per_class = t == 0 ? spec.train_per_base : spec.shots;
        for (std::size_t c = 0; c < classes; ++c) s.labels.push_back(next++);
        for (Label y : s.labels) {
            for (std::size_t i = 0; i < per_class; ++i) s.train.push_back(draw(y), y);
        }
        for (Label y : s.labels) {
            for (std::size_t i = 0; i < spec.test_per_class; ++i) s.test.push_back(draw(y), y);
        }
        stream.sessions.push_back(std::move(s));
    }
    return stream;
}

double SessionMetrics::diagonal_mass() const {
    double sum = 0.0;
    std::size_t rows = 0;
    for (Eigen::Index r = 0; r < confusion.rows(); ++r) {
        if (confusion.row(r).sum() > 0.0) {
            sum += confusion(r, r);
            ++rows;
        }
    }
    return rows == 0 ? 0.0 : sum / static_cast<double>(rows);
}

Learner train_base_session(const SessionStream& stream, const ModelSpec& model,
                           const HyperParams& hp, std::uint64_t seed) {
    if (stream.sessions.empty()) throw InputError("train_base_session: stream has no sessions");
    const Session& base = stream.sessions.front();
    ModelShape shape{stream.input_dim, model.hidden_dim, model.feature_dim, base.labels.size()};
    ModelParams params = init_params(shape, derive_seed(seed, kModelInit));

    std::mt19937_64 rng(derive_seed(seed, kBaseShuffle));
    params = minibatch_sgd(std::move(params), base.train, hp.base_epochs, hp.batch_size,
                           base_schedule(hp), rng, 1);

    const std::vector<Vector> features = extract_features(base.train.inputs, params);
    const std::size_t nodes = std::min(hp.node_budget, features.size());
    NGGraph graph = init_graph(features, base.train.labels, nodes, derive_seed(seed, kGraphInit),
                               hp.lifetime, hp.variance_floor);
    if (hp.ng_passes > 0) {
        train_on_features(graph, features, hp.eta, hp.alpha, hp.ng_passes,
                          derive_seed(seed, kGraphTrain));
    }
    assign_pseudo_exemplars(graph, base.train, features);
    estimate_variances(graph, features, hp.variance_floor);
    refresh_anchors(graph, [&](const Vector& x) { return extract_feature(x, params); });
    return {std::move(params), std::move(graph)};
}

Learner train_incremental_session(Learner learner, const Session& session, const HyperParams& hp,
                                  Method method, const SessionMemory& memory,
                                  std::uint64_t seed) {
    const int t = session.index;
    if (t <= 1) throw InputError("train_incremental_session: session index must exceed 1");
    ModelParams& params = learner.params;
    NGGraph& graph = learner.graph;

    const std::size_t n_old = params.class_count();
    std::set<Label> old_labels;
    for (Label y = 0; y < n_old; ++y) old_labels.insert(y);
    for (Label y : session.labels) {
        if (y < n_old) throw InputError("session labels overlap classes already learned");
    }

    params = expand_output_layer(std::move(params), session.labels.size(),
                                 derive_seed(seed, kExpand + static_cast<std::uint64_t>(t)));
    const ModelParams snapshot = params;
    auto feature_fn = [&](const Vector& x) { return extract_feature(x, params); };

    ObjectiveContext ctx;
    ctx.session = t;
    ctx.snapshot = &snapshot;
    ctx.n_old = n_old;

    const bool graph_method = uses_graph(method);
    if (graph_method) {
        grow(graph, session.train, extract_features(session.train.inputs, params), hp.growth_k, t,
             derive_seed(seed, kGrow + static_cast<std::uint64_t>(t)), hp.variance_floor);
        ctx.graph = &graph;
        ctx.old_nodes = old_subgraph(graph, old_labels);
        ctx.xi = hp.xi.value_or(xi_heuristic(graph));
    }

    if (method == Method::joint) {
        LabeledSet all = memory.exemplars;
        all.append(session.train);
        std::mt19937_64 rng(derive_seed(seed, kJointShuffle + static_cast<std::uint64_t>(t)));
        params = minibatch_sgd(std::move(params), all, hp.inc_epochs, hp.batch_size,
                               [&](std::size_t) { return hp.inc_lr; }, rng, t);
        return learner;
    }

    LabeledSet batch = session.train;
    std::vector<Anchor> anchors;
    switch (method) {
        case Method::distill:
            ctx.exemplars = &memory.exemplars;
            break;
        case Method::exemplar_anchor:
            for (std::size_t s = 0; s < memory.exemplars.size(); ++s) {
                const Vector& x = memory.exemplars.inputs[s];
                anchors.push_back({x, extract_feature(x, params),
                                   Vector::Ones(static_cast<Eigen::Index>(params.feature_dim()))});
            }
            ctx.exemplar_anchors = anchors;
            break;
        default:
            break;
    }
    const std::size_t step_samples =
        method == Method::distill ? batch.size() + memory.exemplars.size() : batch.size();

    auto updatable = [&](std::size_t idx) { return graph.node(idx).origin_session == t; };
    for (std::size_t it = 0; it < hp.inc_epochs; ++it) {
        const TotalLoss loss = total_loss(batch, params, hp, method, ctx);
        require_finite(loss.total.loss, t, "incremental training");
        params = averaged_step(std::move(params), loss.total.grads, hp.inc_lr, step_samples,
                               hp.clip_norm);
        require_finite(params, t, "incremental step");
        if (!graph_method) continue;
        for (const Vector& x : session.train.inputs) {
            const Ranking r = hebbian_update(graph, feature_fn(x), hp.eta, hp.alpha, updatable);
            if (r.order.size() >= 2) edge_update(graph, r.order[0], r.order[1]);
        }
    }

    if (graph_method) {
        refresh_anchors(graph, feature_fn);
        estimate_variances(graph, extract_features(session.train.inputs, params), hp.variance_floor,
                           updatable);
    }
    return learner;
}

SessionMetrics evaluate_joint(const ModelParams& params, const SessionStream& stream, int upto) {
    if (upto < 1 || static_cast<std::size_t>(upto) > stream.session_count()) {
        throw InputError("evaluate_joint: session " + std::to_string(upto) + " is out of range");
    }
    const std::size_t classes = stream.classes_through(upto);
    if (params.class_count() < classes) {
        throw InputError("evaluate_joint: classifier is narrower than the classes seen");
    }
    const std::set<Label> latest(stream.session(upto).labels.begin(),
                                 stream.session(upto).labels.end());

    Matrix counts = Matrix::Zero(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(classes));
    std::size_t correct = 0, total = 0, old_correct = 0, old_total = 0, new_correct = 0,
                new_total = 0;
    for (int t = 1; t <= upto; ++t) {
        const LabeledSet& test = stream.session(t).test;
        for (std::size_t s = 0; s < test.size(); ++s) {
            const Vector o = logits(test.inputs[s], params).head(static_cast<Eigen::Index>(classes));
            Eigen::Index pred = 0;
            o.maxCoeff(&pred);
            const Label y = test.labels[s];
            const bool hit = static_cast<Label>(pred) == y;
            counts(static_cast<Eigen::Index>(y), pred) += 1.0;
            ++total;
            correct += hit;
            if (latest.count(y)) {
                ++new_total;
                new_correct += hit;
            } else {
                ++old_total;
                old_correct += hit;
            }
        }
    }

    SessionMetrics m;
    m.session = upto;
    auto ratio = [](std::size_t a, std::size_t b) {
        return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
    };
    m.joint_acc = ratio(correct, total);
    m.new_acc = ratio(new_correct, new_total);
    m.old_acc = upto == 1 ? m.joint_acc : ratio(old_correct, old_total);
    m.confusion = counts;
    for (Eigen::Index r = 0; r < counts.rows(); ++r) {
        const double row = counts.row(r).sum();
        if (row > 0.0) m.confusion.row(r) /= row;
    }
    return m;
}

std::vector<SessionMetrics> run_method(const SessionStream& stream, Method method,
                                       const HyperParams& hp, const ModelSpec& model,
                                       std::uint64_t seed, const SessionObserver& observer) {
    std::vector<SessionMetrics> out;
    Learner learner = train_base_session(stream, model, hp, seed);
    out.push_back(evaluate_joint(learner.params, stream, 1));
    if (observer) observer(out.back(), learner);

    SessionMemory memory;
    auto remember = [&](const Session& s) {
        std::mt19937_64 rng(derive_seed(seed, kMemory + static_cast<std::uint64_t>(s.index)));
        switch (method) {
            case Method::distill:
                memory.exemplars.append(sample_per_class(s.train, s.labels, hp.exemplars_per_class, rng));
                break;
            case Method::exemplar_anchor:
                // Same memory budget as the graph: node_budget at base, k per new class after.
                memory.exemplars.append(
                    s.index == 1 ? sample_uniform(s.train, hp.node_budget, rng)
                                 : sample_per_class(s.train, s.labels, hp.growth_k, rng));
                break;
            case Method::joint:
                memory.exemplars.append(s.train);
                break;
            default:
                break;
        }
    };
    remember(stream.sessions.front());

    for (std::size_t t = 1; t < stream.session_count(); ++t) {
        const Session& s = stream.sessions[t];
        learner = train_incremental_session(std::move(learner), s, hp, method, memory, seed);
        out.push_back(evaluate_joint(learner.params, stream, s.index));
        if (observer) observer(out.back(), learner);
        remember(s);
    }
    return out;
}

}  // namespace topic
