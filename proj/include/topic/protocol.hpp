#pragma once

#include "topic/dataset.hpp"
#include "topic/errors.hpp"
#include "topic/feature_model.hpp"
#include "topic/losses.hpp"
#include "topic/neural_gas.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <set>
#include <vector>

namespace topic {

struct StreamSpec {
    std::size_t base_classes = 10;
    std::size_t new_classes = 8;
    std::size_t ways = 2;   // C
    std::size_t shots = 5;  // K
    std::size_t input_dim = 16;
    double class_separation = 1.0;  // std-dev of the class means
    double cluster_spread = 1.0;    // std-dev of samples around their mean
    std::size_t train_per_base = 100;
    std::size_t test_per_class = 100;
};

struct Session {
    int index = 1;
    std::vector<Label> labels;
    LabeledSet train;
    LabeledSet test;
};

/// Sessions in order; label sets are pairwise disjoint and ids run 0, 1, ...
/// in session order.
struct SessionStream {
    std::size_t input_dim = 0;
    std::vector<Session> sessions;

    std::size_t session_count() const { return sessions.size(); }
    const Session& session(int index) const { return sessions.at(static_cast<std::size_t>(index - 1)); }
    /// Number of classes introduced in sessions 1..upto.
    std::size_t classes_through(int upto) const;
    bool labels_disjoint() const;
};

/// Each class is an isotropic Gaussian blob around a random mean.
SessionStream make_synthetic_stream(const StreamSpec& spec, std::uint64_t seed);

struct SessionMetrics {
    int session = 1;
    double joint_acc = 0.0;
    double old_acc = 0.0;  // classes of earlier sessions; equals joint_acc in session 1
    double new_acc = 0.0;  // classes of this session
    Matrix confusion;      // true class x predicted class, rows normalised

    /// Mean of the diagonal over rows that have test samples.
    double diagonal_mass() const;
};

/// Hidden and feature widths; input width and class count come from the stream.
struct ModelSpec {
    std::size_t hidden_dim = 32;
    std::size_t feature_dim = 8;
};

/// Non-finite loss during a session.
class SessionDivergence : public DivergenceError {
public:
    SessionDivergence(int session, const std::string& what)
        : DivergenceError(what), session_(session) {}
    int session() const { return session_; }

private:
    int session_;
};

struct Learner {
    ModelParams params;
    NGGraph graph;
};

/// Mini-batch SGD with CE on the base session (lr drops by 10x at 60% and 80%
/// of the epochs), then neural gas training on the base features, pseudo
/// exemplars, variances and an anchor refresh.
Learner train_base_session(const SessionStream& stream, const ModelSpec& model,
                           const HyperParams& hp, std::uint64_t seed);

/// Per-session memory the baselines carry between sessions.
struct SessionMemory {
    ExemplarSet exemplars;
};

/// One few-shot session: expand the head, grow the graph, then inc_epochs
/// full-batch steps, each followed by NG updates on the post-step features.
Learner train_incremental_session(Learner learner, const Session& session, const HyperParams& hp,
                                  Method method, const SessionMemory& memory, std::uint64_t seed);

SessionMetrics evaluate_joint(const ModelParams& params, const SessionStream& stream, int upto);

/// Called after every session with the trained state.
using SessionObserver = std::function<void(const SessionMetrics&, const Learner&)>;

/// Base session then every incremental session; metrics after each.
std::vector<SessionMetrics> run_method(const SessionStream& stream, Method method,
                                       const HyperParams& hp, const ModelSpec& model,
                                       std::uint64_t seed, const SessionObserver& observer = {});

/// Stable per-purpose seed derived from a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace topic
