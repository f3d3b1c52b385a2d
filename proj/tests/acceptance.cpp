// Acceptance gate. Prints one PASS/FAIL line per criterion; exits non-zero if
// any selected criterion fails. Usage: topic_acceptance [criterion ...]

#include "instances.hpp"
#include "oracles.hpp"

#include "topic/experiment.hpp"
#include "topic/losses.hpp"
#include "topic/neural_gas.hpp"
#include "topic/protocol.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace topic;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------- 1

Outcome gradient_suite() {
    constexpr double kTol = 1e-4;
    constexpr int kInstances = 20;
    const Stopwatch clock;
    const HyperParams hp;
    std::map<std::string, double> worst;
    for (int i = 0; i < kInstances; ++i) {
        const instances::LossInstance inst = instances::make(1000 + static_cast<std::uint64_t>(i));
        const ObjectiveContext ctx = instances::context(inst);
        const std::map<std::string, Objective> terms = {
            {"ce", [&](const ModelParams& q) { return cross_entropy_loss(inst.batch, q); }},
            {"al", [&](const ModelParams& q) { return anchor_loss(inst.graph, inst.old_nodes, q); }},
            {"mml_min",
             [&](const ModelParams& q) {
                 return min_max_loss(inst.batch, inst.graph, q, inst.xi, instances::kSession, {true, false});
             }},
            {"mml_max",
             [&](const ModelParams& q) {
                 return min_max_loss(inst.batch, inst.graph, q, inst.xi, instances::kSession, {false, true});
             }},
            {"dl",
             [&](const ModelParams& q) {
                 LabeledSet all = inst.batch;
                 all.append(inst.exemplars);
                 return distillation_loss(all, inst.snapshot, q, hp.temperature, instances::kOldClasses);
             }},
            {"composed",
             [&](const ModelParams& q) { return total_loss(inst.batch, q, hp, Method::topic_al_mml, ctx).total; }},
        };
        for (const auto& [name, obj] : terms) {
            const GradReport r = finite_difference_check(obj, inst.params, kTol);
            worst[name] = std::max(worst[name], r.max_error);
        }
    }
    const double elapsed = clock.seconds();
    Outcome out{true, ""};
    for (const auto& [name, err] : worst) {
        out.pass = out.pass && err < kTol;
        out.detail += name + " " + fmt("%.1e", err) + ", ";
    }
    out.pass = out.pass && elapsed < 60.0;
    out.detail += std::to_string(kInstances) + " instances each, " + fmt("%.1f s", elapsed);
    return out;
}

// ---------------------------------------------------------------- 2

NGGraph random_graph(std::mt19937_64& rng, std::size_t n, std::size_t dim, bool grid) {
    NGGraph g(8);
    std::uniform_int_distribution<int> cell(-2, 2);
    for (std::size_t i = 0; i < n; ++i) {
        NGNode node;
        node.centroid = oracle::random_vector(dim, rng);
        if (grid) {
            for (Eigen::Index d = 0; d < node.centroid.size(); ++d) node.centroid(d) = cell(rng);
        }
        node.variance = Vector::Ones(static_cast<Eigen::Index>(dim));
        node.label = i % 4;
        g.add_node(node);
    }
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_int_distribution<std::uint32_t> age(1, 8);
    for (std::size_t e = 0; e < n; ++e) {
        const std::size_t a = pick(rng);
        const std::size_t b = pick(rng);
        if (a != b) g.connect(a, b, age(rng));
    }
    return g;
}

std::vector<Vector> random_points(std::mt19937_64& rng, std::size_t count, std::size_t dim, bool grid) {
    std::vector<Vector> out;
    std::uniform_int_distribution<int> cell(-2, 2);
    for (std::size_t i = 0; i < count; ++i) {
        Vector v = oracle::random_vector(dim, rng);
        if (grid) {
            for (Eigen::Index d = 0; d < v.size(); ++d) v(d) = cell(rng);
        }
        out.push_back(v);
    }
    return out;
}

Outcome ng_oracles() {
    constexpr int kTrials = 50;
    constexpr double kTol = 1e-9;
    std::map<std::string, int> failures;
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> size(2, 10);
    for (int trial = 0; trial < kTrials; ++trial) {
        const bool grid = trial % 2 == 1;  // integer coordinates force distance ties
        const std::size_t n = size(rng);
        const std::size_t dim = 2 + static_cast<std::size_t>(trial % 3);
        NGGraph g = random_graph(rng, n, dim, grid);
        const auto centroids = oracle::centroids_of(g);

        // ranking
        const Vector f = random_points(rng, 1, dim, grid).front();
        const Ranking r = rank_nodes(g, f);
        const auto expect = oracle::rank(centroids, oracle::to_vec(f));
        bool ok = r.order == expect;
        for (std::size_t i = 0; ok && i < expect.size(); ++i) {
            ok = std::abs(r.distances[i] - oracle::dist(centroids[expect[i]], oracle::to_vec(f))) <= kTol;
        }
        if (!ok) ++failures["rank_nodes"];

        // edge rule, applied repeatedly so ages cross the lifetime
        oracle::EdgeTable table = oracle::edges_of(g);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        bool edges_ok = true;
        for (int step = 0; step < 30; ++step) {
            const std::size_t a = pick(rng);
            std::size_t b = pick(rng);
            if (a == b) b = (b + 1) % n;
            edge_update(g, a, b);
            table.update(a, b);
            edges_ok = edges_ok && oracle::edges_of(g).age == table.age && g.invariants_hold();
        }
        if (!edges_ok) ++failures["edge_update"];

        // pseudo exemplars
        const std::size_t samples = 1 + static_cast<std::size_t>(trial % 12);
        const auto feats = random_points(rng, samples, dim, grid);
        LabeledSet data;
        for (std::size_t s = 0; s < samples; ++s) {
            data.push_back(oracle::random_vector(5, rng), 100 + s);
        }
        assign_pseudo_exemplars(g, data, feats);
        std::vector<oracle::Vec> fv;
        for (const auto& v : feats) fv.push_back(oracle::to_vec(v));
        bool assign_ok = true;
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t s = oracle::nearest(fv, centroids[j]);
            assign_ok = assign_ok && g.node(j).pseudo_input == data.inputs[s] && g.node(j).label == data.labels[s];
        }
        if (!assign_ok) ++failures["assign_pseudo_exemplars"];

        // variances
        const auto vfeats = random_points(rng, 3 * n, dim, grid);
        std::vector<oracle::Vec> vf;
        for (const auto& v : vfeats) vf.push_back(oracle::to_vec(v));
        estimate_variances(g, vfeats, 1e-6);
        const auto expect_var = oracle::variances(centroids, vf, 1e-6);
        bool var_ok = true;
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t d = 0; d < dim; ++d) {
                var_ok = var_ok && std::abs(g.node(j).variance(static_cast<Eigen::Index>(d)) - expect_var[j][d]) <= kTol;
            }
        }
        if (!var_ok) ++failures["estimate_variances"];

        if (std::abs(quantization_error(g, vfeats) - oracle::quantization_error(centroids, vf)) > kTol) {
            ++failures["quantization_error"];
        }
        if (std::abs(xi_heuristic(g) - oracle::max_pairwise(centroids)) > kTol) ++failures["xi_heuristic"];
    }
    Outcome out{failures.empty(), std::to_string(kTrials) + " trials, graphs of 2-10 nodes"};
    for (const auto& [name, count] : failures) out.detail += ", " + name + " failed " + std::to_string(count);
    if (failures.empty()) out.detail += ", all six operations agree";
    return out;
}

// ---------------------------------------------------------------- 3

Outcome quantization_trend() {
    constexpr int kSeeds = 20;
    constexpr std::size_t kNodes = 25;
    const Stopwatch clock;
    int wins = 0;
    double ng_total = 0.0;
    double random_total = 0.0;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
        std::uniform_real_distribution<double> where(-8.0, 8.0);
        std::vector<Vector> feats;
        std::vector<Label> labels;
        for (Label blob = 0; blob < 5; ++blob) {
            Vector mean(2);
            mean << where(rng), where(rng);
            for (int i = 0; i < 100; ++i) {
                feats.push_back(mean + oracle::random_vector(2, rng));
                labels.push_back(blob);
            }
        }
        NGGraph ng = init_graph(feats, labels, kNodes, derive_seed(static_cast<std::uint64_t>(seed), 1));
        const double ng_err = train_on_features(ng, feats, 0.02, 1.0, 10, derive_seed(static_cast<std::uint64_t>(seed), 2));

        std::vector<std::size_t> idx(feats.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        NGGraph exemplars;
        for (std::size_t i = 0; i < kNodes; ++i) {
            exemplars.add_node({feats[idx[i]], Vector::Ones(2), Vector(), labels[idx[i]], 1});
        }
        const double random_err = quantization_error(exemplars, feats);
        ng_total += ng_err;
        random_total += random_err;
        if (ng_err < random_err) ++wins;
    }
    const double elapsed = clock.seconds();
    return {wins >= 18 && elapsed < 30.0,
            "NG better in " + std::to_string(wins) + "/" + std::to_string(kSeeds) +
                " seeds (need 18), mean error " + fmt("%.3f", ng_total / kSeeds) + " vs " +
                fmt("%.3f", random_total / kSeeds) + ", " + fmt("%.1f s", elapsed)};
}

// ---------------------------------------------------------------- 4 and 5

struct StreamRuns {
    std::map<Method, std::vector<std::vector<SessionMetrics>>> by_method;
    double seconds = 0.0;
};

const StreamRuns& desk_runs() {
    static const StreamRuns runs = [] {
        StreamRuns r;
        const Stopwatch clock;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const SessionStream stream = make_synthetic_stream(StreamSpec{}, seed);
            for (Method m : {Method::ft, Method::topic_al, Method::topic_al_mml, Method::distill}) {
                r.by_method[m].push_back(run_method(stream, m, HyperParams{}, ModelSpec{}, seed));
            }
        }
        r.seconds = clock.seconds();
        return r;
    }();
    return runs;
}

double mean_final_joint(const std::vector<std::vector<SessionMetrics>>& runs) {
    double s = 0.0;
    for (const auto& r : runs) s += r.back().joint_acc;
    return s / static_cast<double>(runs.size());
}

Outcome forgetting_trend() {
    const StreamRuns& runs = desk_runs();
    const auto& ft = runs.by_method.at(Method::ft);
    double base_old = 0.0;
    double final_old = 0.0;
    for (const auto& r : ft) {
        base_old += r.front().old_acc;
        final_old += r.back().old_acc;
    }
    const double ratio = final_old / base_old;
    const bool a = ratio < 0.3;

    const double j_ft = mean_final_joint(ft);
    const double j_al = mean_final_joint(runs.by_method.at(Method::topic_al));
    const double j_mml = mean_final_joint(runs.by_method.at(Method::topic_al_mml));
    const double j_dl = mean_final_joint(runs.by_method.at(Method::distill));
    const bool b = j_mml >= j_al + 0.02 && j_al + 0.02 >= j_ft + 0.10;
    const bool c = j_mml >= j_dl;
    const bool fast = runs.seconds < 300.0;

    std::string detail = std::string("(a) ") + (a ? "ok" : "FAIL") + " ft old ratio " + fmt("%.3f", ratio) +
                         "; (b) " + (b ? "ok" : "FAIL") + " final joint mml " + fmt("%.4f", j_mml) +
                         " al " + fmt("%.4f", j_al) + " ft " + fmt("%.4f", j_ft) + "; (c) " +
                         (c ? "ok" : "FAIL") + " distill " + fmt("%.4f", j_dl) + "; " +
                         fmt("%.1f s", runs.seconds);
    return {a && b && c && fast, detail};
}

Outcome confusion_trend() {
    const StreamRuns& runs = desk_runs();
    const auto& ft = runs.by_method.at(Method::ft);
    const auto& mml = runs.by_method.at(Method::topic_al_mml);
    int wins = 0;
    double worst_gap = 1.0;
    for (std::size_t s = 0; s < ft.size(); ++s) {
        const double gap = mml[s].back().diagonal_mass() - ft[s].back().diagonal_mass();
        worst_gap = std::min(worst_gap, gap);
        if (gap > 0.0) ++wins;
    }
    return {wins == static_cast<int>(ft.size()),
            "topic_al_mml diagonal mass above ft in " + std::to_string(wins) + "/" +
                std::to_string(ft.size()) + " seeds, smallest margin " + fmt("%.3f", worst_gap)};
}

// ---------------------------------------------------------------- 6

Outcome invariant_suite() {
    std::vector<std::string> broken;
    std::mt19937_64 rng(77);

    // edge/age symmetry and lifetime bound under random edge traffic
    {
        bool sym = true;
        bool life = true;
        for (int trial = 0; trial < 50; ++trial) {
            NGGraph g = random_graph(rng, 10, 2, false);
            std::uniform_int_distribution<std::size_t> pick(0, 9);
            for (int step = 0; step < 300; ++step) {
                const std::size_t a = pick(rng);
                const std::size_t b = (a + 1 + pick(rng) % 9) % 10;
                edge_update(g, a, b);
                for (std::size_t i = 0; i < 10; ++i) {
                    for (std::size_t j = 0; j < 10; ++j) {
                        sym = sym && g.connected(i, j) == g.connected(j, i) && g.age(i, j) == g.age(j, i);
                        life = life && g.age(i, j) <= g.lifetime();
                    }
                    sym = sym && !g.connected(i, i);
                }
            }
        }
        if (!sym) broken.push_back("edge/age symmetry");
        if (!life) broken.push_back("lifetime bound");
    }

    // ranking permutation validity
    {
        bool ok = true;
        for (int trial = 0; trial < 200; ++trial) {
            const NGGraph g = random_graph(rng, 1 + static_cast<std::size_t>(trial % 10), 3, trial % 2 == 0);
            const Ranking r = rank_nodes(g, random_points(rng, 1, 3, trial % 2 == 0).front());
            std::vector<std::size_t> seen = r.order;
            std::sort(seen.begin(), seen.end());
            for (std::size_t i = 0; i < seen.size(); ++i) ok = ok && seen[i] == i;
            ok = ok && std::is_sorted(r.distances.begin(), r.distances.end());
        }
        if (!ok) broken.push_back("ranking permutation");
    }

    // label-set disjointness across stream shapes
    {
        bool ok = true;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            for (std::size_t ways : {1, 2, 4}) {
                StreamSpec spec;
                spec.ways = ways;
                spec.train_per_base = 5;
                spec.test_per_class = 3;
                const SessionStream s = make_synthetic_stream(spec, seed);
                std::set<Label> all;
                std::size_t count = 0;
                for (const Session& sess : s.sessions) {
                    all.insert(sess.labels.begin(), sess.labels.end());
                    count += sess.labels.size();
                }
                ok = ok && s.labels_disjoint() && all.size() == count;
            }
        }
        if (!ok) broken.push_back("label disjointness");
    }

    // classifier width after each session
    {
        StreamSpec spec;
        spec.train_per_base = 30;
        spec.test_per_class = 10;
        HyperParams hp;
        hp.base_epochs = 5;
        hp.inc_epochs = 5;
        const SessionStream s = make_synthetic_stream(spec, 4);
        bool ok = true;
        for (Method m : {Method::ft, Method::distill, Method::exemplar_anchor, Method::topic_al,
                         Method::topic_al_mml, Method::topic_al_mml_dl, Method::joint}) {
            run_method(s, m, hp, ModelSpec{}, 4, [&](const SessionMetrics& metrics, const Learner& l) {
                ok = ok && l.params.class_count() == s.classes_through(metrics.session) &&
                     static_cast<std::size_t>(metrics.confusion.rows()) == l.params.class_count();
            });
        }
        if (!ok) broken.push_back("classifier width");
    }

    // byte-identical CSV on rerun
    {
        auto run_into = [](const fs::path& dir) {
            ExperimentConfig c = parse_config(
                "train_per_base = 30\ntest_per_class = 20\nbase_epochs = 10\ninc_epochs = 10\n"
                "methods = ft, topic_al_mml\nseeds = 1, 2\n");
            c.out_dir = dir.string();
            std::ostringstream log;
            const int status = run_experiment(c, log, true);
            std::ifstream in(dir / "results.csv", std::ios::binary);
            std::ostringstream text;
            text << in.rdbuf();
            return std::make_pair(status, text.str());
        };
        const fs::path a = fs::temp_directory_path() / "topic_acceptance_a";
        const fs::path b = fs::temp_directory_path() / "topic_acceptance_b";
        fs::remove_all(a);
        fs::remove_all(b);
        const auto ra = run_into(a);
        const auto rb = run_into(b);
        if (ra.first != 0 || rb.first != 0 || ra.second.empty() || ra.second != rb.second) {
            broken.push_back("CSV determinism");
        }
        fs::remove_all(a);
        fs::remove_all(b);
    }

    Outcome out{broken.empty(), "symmetry, lifetime, permutation, disjointness, width, CSV rerun"};
    for (const auto& b : broken) out.detail += "; broken: " + b;
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        int id;
        const char* name;
        Outcome (*run)();
    };
    const Criterion all[] = {
        {1, "gradient suite", gradient_suite},
        {2, "neural gas oracle equivalence", ng_oracles},
        {3, "NG beats random exemplars on quantization error", quantization_trend},
        {4, "forgetting and ablation ordering", forgetting_trend},
        {5, "confusion diagonal mass", confusion_trend},
        {6, "invariant suite", invariant_suite},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const Criterion& c : all) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const Outcome o = c.run();
        std::printf("[%s] criterion %d: %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
