#pragma once

#include "topic/errors.hpp"
#include "topic/losses.hpp"
#include "topic/protocol.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace topic {

struct ExperimentConfig {
    StreamSpec stream;
    ModelSpec model;
    HyperParams hp;
    std::vector<Method> methods = {Method::ft, Method::distill, Method::topic_al,
                                   Method::topic_al_mml};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::string out_dir = "results";
    bool emit_csv = true;
    bool emit_confusion = true;
    bool emit_graphs = false;
    std::size_t threads = 1;
};

/// Raised by parse_config. line() is 1-based for malformed lines and 0 for
/// values that parsed but failed validation; key() names the offending key
/// when there is one.
class ConfigError : public InputError {
public:
    ConfigError(std::size_t line, std::string key, const std::string& what)
        : InputError(what), line_(line), key_(std::move(key)) {}
    std::size_t line() const { return line_; }
    const std::string& key() const { return key_; }

private:
    std::size_t line_;
    std::string key_;
};

/// Line-oriented `key = value` text; `#` starts a comment. Unknown or repeated
/// keys are rejected, missing keys keep their defaults.
ExperimentConfig parse_config(std::string_view text);

/// Range checks that do not depend on how the config was built.
void validate_config(const ExperimentConfig& config);

std::vector<Method> parse_method_list(std::string_view text);
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

/// Every recognised key, in the order they are documented.
const std::vector<std::string>& config_keys();

}  // namespace topic
