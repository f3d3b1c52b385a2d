#include "topic/experiment.hpp"

#include "topic/graph_io.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace topic {

namespace {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string run_name(const RunResult& run, int session) {
    return std::string(to_string(run.method)) + "_" + std::to_string(run.seed) + "_" +
           std::to_string(session);
}

RunResult run_one(const ExperimentConfig& config, Method method, std::uint64_t seed) {
    RunResult run;
    run.method = method;
    run.seed = seed;
    const bool keep_graphs = config.emit_graphs && uses_graph(method);
    int last_done = 0;
    try {
        const SessionStream stream = make_synthetic_stream(config.stream, seed);
        auto observer = [&](const SessionMetrics& m, const Learner& learner) {
            last_done = m.session;
            run.metrics.push_back(m);
            if (keep_graphs) run.graphs.push_back(learner.graph);
        };
        run_method(stream, method, config.hp, config.model, seed, observer);
    } catch (const SessionDivergence& e) {
        run.failure = RunResult::Failure{e.session(), true, e.what()};
    } catch (const DivergenceError& e) {
        run.failure = RunResult::Failure{last_done + 1, true, e.what()};
    } catch (const StateError& e) {
        run.failure = RunResult::Failure{last_done + 1, true, e.what()};
    } catch (const std::exception& e) {
        run.failure = RunResult::Failure{last_done + 1, false, e.what()};
    }
    return run;
}

std::vector<const RunResult*> sorted_runs(const std::vector<RunResult>& runs) {
    std::vector<const RunResult*> out;
    for (const auto& r : runs) out.push_back(&r);
    std::stable_sort(out.begin(), out.end(), [](const RunResult* a, const RunResult* b) {
        const auto ta = to_string(a->method);
        const auto tb = to_string(b->method);
        if (ta != tb) return ta < tb;
        return a->seed < b->seed;
    });
    return out;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << content;
    if (!out) throw InputError("write failed for " + path.string());
}

}  // namespace

std::vector<RunResult> run_all(const ExperimentConfig& config) {
    struct Job {
        Method method;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (Method m : config.methods) {
        for (std::uint64_t s : config.seeds) jobs.push_back({m, s});
    }
    std::vector<RunResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            results[i] = run_one(config, jobs[i].method, jobs[i].seed);
        }
    };
    const std::size_t workers = std::min(std::max<std::size_t>(config.threads, 1), jobs.size());
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return results;
}

void write_results_csv(const std::vector<RunResult>& runs, std::ostream& out) {
    out << "method,seed,session,joint_acc,old_acc,new_acc\n";
    for (const RunResult* run : sorted_runs(runs)) {
        for (const SessionMetrics& m : run->metrics) {
            out << to_string(run->method) << ',' << run->seed << ',' << m.session << ','
                << fixed6(m.joint_acc) << ',' << fixed6(m.old_acc) << ',' << fixed6(m.new_acc)
                << '\n';
        }
    }
}

void write_summary_csv(const std::vector<RunResult>& runs, std::ostream& out) {
    struct Sums {
        double joint = 0.0, old = 0.0, fresh = 0.0;
        std::size_t n = 0;
    };
    std::map<std::pair<std::string, int>, Sums> table;
    for (const RunResult* run : sorted_runs(runs)) {
        for (const SessionMetrics& m : run->metrics) {
            Sums& s = table[{std::string(to_string(run->method)), m.session}];
            s.joint += m.joint_acc;
            s.old += m.old_acc;
            s.fresh += m.new_acc;
            ++s.n;
        }
    }
    out << "method,session,seeds,joint_acc,old_acc,new_acc\n";
    for (const auto& [key, s] : table) {
        const double n = static_cast<double>(s.n);
        out << key.first << ',' << key.second << ',' << s.n << ',' << fixed6(s.joint / n) << ','
            << fixed6(s.old / n) << ',' << fixed6(s.fresh / n) << '\n';
    }
}

void write_confusion(const RunResult& run, const SessionMetrics& m, std::ostream& out) {
    out << "method " << to_string(run.method) << '\n'
        << "seed " << run.seed << '\n'
        << "session " << m.session << '\n'
        << "classes " << m.confusion.rows() << '\n';
    for (Eigen::Index r = 0; r < m.confusion.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.confusion.cols(); ++c) {
            if (c > 0) out << ' ';
            out << fixed6(m.confusion(r, c));
        }
        out << '\n';
    }
}

int run_experiment(const ExperimentConfig& config, std::ostream& log, bool quiet) {
    try {
        validate_config(config);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    const fs::path dir(config.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        log << "config error: out_dir: cannot create '" << dir.string() << "'\n";
        return kExitConfig;
    }
    // A stale summary from an earlier run must not survive a failed one.
    fs::remove(dir / "summary.csv", ec);

    if (!quiet) {
        log << "running " << config.methods.size() << " method(s) x " << config.seeds.size()
            << " seed(s)\n";
    }
    const std::vector<RunResult> runs = run_all(config);

    int status = kExitOk;
    for (const RunResult* run : sorted_runs(runs)) {
        if (!run->failure) continue;
        const auto& f = *run->failure;
        log << (f.divergence ? "divergence" : "error") << ": method " << to_string(run->method)
            << " seed " << run->seed << " session " << f.session << ": " << f.message << '\n';
        status = std::max(status, f.divergence ? kExitDivergence : kExitConfig);
    }

    try {
        if (config.emit_csv) {
            std::ostringstream csv;
            write_results_csv(runs, csv);
            write_file(dir / "results.csv", csv.str());
        }
        if (config.emit_confusion) {
            fs::create_directories(dir / "confusion");
            for (const RunResult* run : sorted_runs(runs)) {
                for (const SessionMetrics& m : run->metrics) {
                    std::ostringstream text;
                    write_confusion(*run, m, text);
                    write_file(dir / "confusion" / (run_name(*run, m.session) + ".txt"), text.str());
                }
            }
        }
        if (config.emit_graphs) {
            fs::create_directories(dir / "graphs");
            for (const RunResult* run : sorted_runs(runs)) {
                for (std::size_t i = 0; i < run->graphs.size(); ++i) {
                    const int session = run->metrics.at(i).session;
                    save_graph(run->graphs[i], dir / "graphs" / (run_name(*run, session) + ".ngtxt"));
                }
            }
        }
        if (status == kExitOk && config.emit_csv) {
            std::ostringstream summary;
            write_summary_csv(runs, summary);
            write_file(dir / "summary.csv", summary.str());
        }
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    if (!quiet && status == kExitOk) {
        log << "wrote " << (dir / "results.csv").string() << '\n';
    }
    return status;
}

}  // namespace topic
