#include "topic/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>

namespace topic {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = text.find(',', start);
        out.push_back(trim(text.substr(start, comma == std::string_view::npos ? comma : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

struct BadValue {
    std::string why;
};

double to_double(std::string_view v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
        throw BadValue{"expected a number, got '" + std::string(v) + "'"};
    }
    if (!std::isfinite(out)) throw BadValue{"value must be finite"};
    return out;
}

std::uint64_t to_u64(std::string_view v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
        throw BadValue{"expected a non-negative integer, got '" + std::string(v) + "'"};
    }
    return out;
}

bool to_bool(std::string_view v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw BadValue{"expected true or false, got '" + std::string(v) + "'"};
}

std::vector<Method> methods_from(std::string_view text) {
    std::vector<Method> out;
    for (std::string_view tag : split_commas(text)) {
        Method m;
        try {
            m = parse_method(tag);
        } catch (const InputError&) {
            throw BadValue{"unknown method '" + std::string(tag) + "'"};
        }
        if (std::find(out.begin(), out.end(), m) != out.end()) {
            throw BadValue{"method '" + std::string(tag) + "' listed twice"};
        }
        out.push_back(m);
    }
    return out;
}

std::vector<std::uint64_t> seeds_from(std::string_view text) {
    std::vector<std::uint64_t> out;
    for (std::string_view s : split_commas(text)) {
        const std::uint64_t seed = to_u64(s);
        if (std::find(out.begin(), out.end(), seed) != out.end()) {
            throw BadValue{"seed " + std::string(s) + " listed twice"};
        }
        out.push_back(seed);
    }
    return out;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;

template <class T>
Setter count(T ExperimentConfig::*group, std::size_t T::*field) {
    return [=](ExperimentConfig& c, std::string_view v) { (c.*group).*field = to_u64(v); };
}

template <class T>
Setter real(T ExperimentConfig::*group, double T::*field) {
    return [=](ExperimentConfig& c, std::string_view v) { (c.*group).*field = to_double(v); };
}

const std::vector<std::pair<std::string, Setter>>& setters() {
    using C = ExperimentConfig;
    static const std::vector<std::pair<std::string, Setter>> table = {
        {"base_classes", count(&C::stream, &StreamSpec::base_classes)},
        {"new_classes", count(&C::stream, &StreamSpec::new_classes)},
        {"ways", count(&C::stream, &StreamSpec::ways)},
        {"shots", count(&C::stream, &StreamSpec::shots)},
        {"input_dim", count(&C::stream, &StreamSpec::input_dim)},
        {"class_separation", real(&C::stream, &StreamSpec::class_separation)},
        {"cluster_spread", real(&C::stream, &StreamSpec::cluster_spread)},
        {"train_per_base", count(&C::stream, &StreamSpec::train_per_base)},
        {"test_per_class", count(&C::stream, &StreamSpec::test_per_class)},
        {"hidden_dim", count(&C::model, &ModelSpec::hidden_dim)},
        {"feature_dim", count(&C::model, &ModelSpec::feature_dim)},
        {"eta", real(&C::hp, &HyperParams::eta)},
        {"alpha", real(&C::hp, &HyperParams::alpha)},
        {"lifetime",
         [](C& c, std::string_view v) {
             const std::uint64_t n = to_u64(v);
             if (n > UINT32_MAX) throw BadValue{"value too large"};
             c.hp.lifetime = static_cast<std::uint32_t>(n);
         }},
        {"node_budget", count(&C::hp, &HyperParams::node_budget)},
        {"growth_k", count(&C::hp, &HyperParams::growth_k)},
        {"ng_passes", count(&C::hp, &HyperParams::ng_passes)},
        {"variance_floor", real(&C::hp, &HyperParams::variance_floor)},
        {"lambda1", real(&C::hp, &HyperParams::lambda1)},
        {"lambda2", real(&C::hp, &HyperParams::lambda2)},
        {"xi",
         [](C& c, std::string_view v) {
             if (v == "auto") {
                 c.hp.xi.reset();
             } else {
                 c.hp.xi = to_double(v);
             }
         }},
        {"gamma", real(&C::hp, &HyperParams::gamma)},
        {"temperature", real(&C::hp, &HyperParams::temperature)},
        {"base_lr", real(&C::hp, &HyperParams::base_lr)},
        {"inc_lr", real(&C::hp, &HyperParams::inc_lr)},
        {"base_epochs", count(&C::hp, &HyperParams::base_epochs)},
        {"inc_epochs", count(&C::hp, &HyperParams::inc_epochs)},
        {"batch_size", count(&C::hp, &HyperParams::batch_size)},
        {"exemplars_per_class", count(&C::hp, &HyperParams::exemplars_per_class)},
        {"clip_norm", real(&C::hp, &HyperParams::clip_norm)},
        {"methods", [](C& c, std::string_view v) { c.methods = methods_from(v); }},
        {"seeds", [](C& c, std::string_view v) { c.seeds = seeds_from(v); }},
        {"out_dir", [](C& c, std::string_view v) { c.out_dir = std::string(v); }},
        {"emit_csv", [](C& c, std::string_view v) { c.emit_csv = to_bool(v); }},
        {"emit_confusion", [](C& c, std::string_view v) { c.emit_confusion = to_bool(v); }},
        {"emit_graphs", [](C& c, std::string_view v) { c.emit_graphs = to_bool(v); }},
        {"threads", [](C& c, std::string_view v) { c.threads = to_u64(v); }},
    };
    return table;
}

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
    throw ConfigError(0, key, key + ": " + why);
}

void require(bool ok, const std::string& key, const std::string& why) {
    if (!ok) invalid(key, why);
}

}  // namespace

std::vector<Method> parse_method_list(std::string_view text) {
    try {
        return methods_from(text);
    } catch (const BadValue& bad) {
        throw InputError(bad.why);
    }
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
    try {
        return seeds_from(text);
    } catch (const BadValue& bad) {
        throw InputError(bad.why);
    }
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, setter] : setters()) k.push_back(name);
        return k;
    }();
    return keys;
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig config;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;

        const auto where = "line " + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(line_no, "", where + "expected 'key = value'");
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(line_no, "", where + "missing key before '='");

        const auto& table = setters();
        const auto it = std::find_if(table.begin(), table.end(),
                                     [&](const auto& entry) { return entry.first == key; });
        if (it == table.end()) throw ConfigError(line_no, key, where + "unknown key '" + key + "'");
        if (!seen.insert(key).second) {
            throw ConfigError(line_no, key, where + "key '" + key + "' set twice");
        }
        if (value.empty()) throw ConfigError(line_no, key, where + key + ": missing value");
        try {
            it->second(config, value);
        } catch (const BadValue& bad) {
            throw ConfigError(line_no, key, where + key + ": " + bad.why);
        }
    }
    validate_config(config);
    return config;
}

void validate_config(const ExperimentConfig& c) {
    const StreamSpec& s = c.stream;
    require(s.base_classes >= 2, "base_classes", "must be at least 2");
    require(s.ways >= 1, "ways", "must be at least 1");
    require(s.new_classes % s.ways == 0, "new_classes", "must be a multiple of ways");
    require(s.shots >= 2, "shots", "must be at least 2");
    require(s.input_dim >= 1, "input_dim", "must be positive");
    require(s.class_separation > 0.0, "class_separation", "must be positive");
    require(s.cluster_spread > 0.0, "cluster_spread", "must be positive");
    require(s.train_per_base >= 1, "train_per_base", "must be positive");
    require(s.test_per_class >= 1, "test_per_class", "must be positive");
    require(c.model.hidden_dim >= 1, "hidden_dim", "must be positive");
    require(c.model.feature_dim >= 1, "feature_dim", "must be positive");

    const HyperParams& hp = c.hp;
    require(hp.eta >= 0.0 && hp.eta <= 1.0, "eta", "must lie in [0, 1]");
    require(hp.alpha > 0.0, "alpha", "must be positive");
    require(hp.lifetime >= 1, "lifetime", "must be positive");
    require(hp.node_budget >= 2, "node_budget", "must be at least 2");
    require(hp.node_budget <= s.base_classes * s.train_per_base, "node_budget",
            "exceeds the number of base training samples");
    require(hp.growth_k >= 1, "growth_k", "must be at least 1");
    require(hp.growth_k < s.shots, "growth_k", "must be smaller than shots");
    require(hp.ng_passes >= 1, "ng_passes", "must be at least 1");
    require(hp.variance_floor > 0.0, "variance_floor", "must be positive");
    require(hp.lambda1 >= 0.0, "lambda1", "must be non-negative");
    require(hp.lambda2 >= 0.0, "lambda2", "must be non-negative");
    require(!hp.xi || *hp.xi > 0.0, "xi", "must be positive or 'auto'");
    require(hp.gamma >= 0.0, "gamma", "must be non-negative");
    require(hp.temperature > 0.0, "temperature", "must be positive");
    require(hp.base_lr > 0.0, "base_lr", "must be positive");
    require(hp.inc_lr > 0.0, "inc_lr", "must be positive");
    require(hp.base_epochs >= 1, "base_epochs", "must be at least 1");
    require(hp.inc_epochs >= 1, "inc_epochs", "must be at least 1");
    require(hp.batch_size >= 1, "batch_size", "must be at least 1");
    require(hp.exemplars_per_class >= 1, "exemplars_per_class", "must be at least 1");
    require(hp.clip_norm >= 0.0, "clip_norm", "must be non-negative");

    require(!c.methods.empty(), "methods", "needs at least one method");
    require(!c.seeds.empty(), "seeds", "needs at least one seed");
    require(!c.out_dir.empty(), "out_dir", "must not be empty");
    require(c.threads >= 1, "threads", "must be at least 1");
}

}  // namespace topic
