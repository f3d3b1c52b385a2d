#include "topic/config.hpp"

#include <doctest.h>

#include <map>

using namespace topic;

namespace {

ConfigError parse_error(const char* text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("expected a config error for: " << text);
    return ConfigError(0, "", "");
}

}  // namespace

TEST_CASE("empty text gives the desk defaults") {
    const ExperimentConfig c = parse_config("");
    CHECK(c.stream.base_classes == 10);
    CHECK(c.stream.new_classes == 8);
    CHECK(c.stream.ways == 2);
    CHECK(c.stream.shots == 5);
    CHECK(c.model.hidden_dim == 32);
    CHECK(c.model.feature_dim == 8);
    CHECK(c.hp.lambda1 == 0.5);
    CHECK(c.hp.node_budget == 40);
    CHECK_FALSE(c.hp.xi.has_value());
    CHECK(c.seeds.size() == 10);
    CHECK_FALSE(c.methods.empty());
    CHECK(parse_config("# only a comment\n\n   \n").seeds == c.seeds);
}

TEST_CASE("values round-trip") {
    const ExperimentConfig c = parse_config(
        "lambda1 = 0.5\n"
        "lambda2=0.01   # trailing comment\n"
        "  xi = 3.5\n"
        "methods = ft, topic_al_mml\n"
        "seeds = 4,2\n"
        "shots = 10\n"
        "out_dir = runs/a\n"
        "emit_graphs = true\n"
        "threads = 2\n");
    CHECK(c.hp.lambda1 == 0.5);
    CHECK(c.hp.lambda2 == 0.01);
    REQUIRE(c.hp.xi.has_value());
    CHECK(*c.hp.xi == 3.5);
    CHECK(c.methods == std::vector<Method>{Method::ft, Method::topic_al_mml});
    CHECK(c.seeds == std::vector<std::uint64_t>{4, 2});
    CHECK(c.stream.shots == 10);
    CHECK(c.out_dir == "runs/a");
    CHECK(c.emit_graphs);
    CHECK(c.threads == 2);
    CHECK_FALSE(parse_config("xi = auto").hp.xi.has_value());
}

TEST_CASE("every documented key accepts a value") {
    const std::map<std::string, std::string> sample = {
        {"base_classes", "12"}, {"new_classes", "6"}, {"ways", "4"}, {"shots", "4"},
        {"input_dim", "8"}, {"class_separation", "1.5"}, {"cluster_spread", "0.7"},
        {"train_per_base", "50"}, {"test_per_class", "20"}, {"hidden_dim", "16"},
        {"feature_dim", "4"}, {"eta", "0.05"}, {"alpha", "2"}, {"lifetime", "50"},
        {"node_budget", "30"}, {"growth_k", "2"}, {"ng_passes", "3"}, {"variance_floor", "1e-4"},
        {"lambda1", "1"}, {"lambda2", "0"}, {"xi", "2"}, {"gamma", "0.5"}, {"temperature", "3"},
        {"base_lr", "0.05"}, {"inc_lr", "0.02"}, {"base_epochs", "5"}, {"inc_epochs", "7"},
        {"batch_size", "32"}, {"exemplars_per_class", "3"}, {"clip_norm", "0"},
        {"methods", "distill"}, {"seeds", "9"}, {"out_dir", "x"}, {"emit_csv", "false"},
        {"emit_confusion", "no"}, {"emit_graphs", "on"}, {"threads", "3"},
    };
    CHECK(config_keys().size() == sample.size());
    for (const std::string& key : config_keys()) {
        REQUIRE_MESSAGE(sample.count(key) == 1, key);
        CHECK_NOTHROW(parse_config(key + " = " + sample.at(key)));
    }
    const ExperimentConfig c = parse_config("ways = 3\nnew_classes = 6\nlifetime = 50\nclip_norm = 0");
    CHECK(c.stream.ways == 3);
    CHECK(c.hp.lifetime == 50);
    CHECK(c.hp.clip_norm == 0.0);
}

TEST_CASE("parse errors carry the line number") {
    const ConfigError missing_eq = parse_error("seeds = 1\n\nlambda1 0.5\n");
    CHECK(missing_eq.line() == 3);
    CHECK(std::string(missing_eq.what()).find("line 3") != std::string::npos);

    const ConfigError unknown = parse_error("\nlamda1 = 0.5\n");
    CHECK(unknown.line() == 2);
    CHECK(unknown.key() == "lamda1");

    CHECK(parse_error("lambda1 = 0.5\nlambda1 = 0.6\n").line() == 2);
    CHECK(parse_error(" = 4\n").line() == 1);
    CHECK(parse_error("seeds =\n").key() == "seeds");
}

TEST_CASE("invalid values name the key") {
    const ConfigError neg = parse_error("lambda1 = -1\n");
    CHECK(neg.key() == "lambda1");
    CHECK(std::string(neg.what()).find("lambda1") != std::string::npos);

    CHECK(parse_error("eta = abc").key() == "eta");
    CHECK(parse_error("ways = 3").key() == "new_classes");
    CHECK(parse_error("growth_k = 5").key() == "growth_k");
    CHECK(parse_error("methods = ft,sgd").key() == "methods");
    CHECK(parse_error("seeds = 1,1").key() == "seeds");
    CHECK(parse_error("seeds = -3").key() == "seeds");
    CHECK(parse_error("xi = 0").key() == "xi");
    CHECK(parse_error("temperature = inf").key() == "temperature");
    CHECK(parse_error("emit_csv = maybe").key() == "emit_csv");
    CHECK(parse_error("threads = 0").key() == "threads");
    CHECK(parse_error("inc_lr = 0").key() == "inc_lr");
}

TEST_CASE("list helpers") {
    CHECK(parse_seed_list("3, 1,2") == std::vector<std::uint64_t>{3, 1, 2});
    CHECK(parse_method_list("joint") == std::vector<Method>{Method::joint});
    CHECK_THROWS_AS(parse_seed_list("1,,2"), InputError);
    CHECK_THROWS_AS(parse_method_list("ft,nope"), InputError);
}
