#include "enslab/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "enslab/cli/results.hpp"
#include "enslab/numkit/errors.hpp"

namespace enslab::cli {

std::string to_string(Suite suite) {
    switch (suite) {
        case Suite::linreg: return "linreg";
        case Suite::testbed: return "testbed";
        case Suite::bandit: return "bandit";
    }
    return "?";
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        out.push_back(trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

long parse_long(const std::string& key, std::string_view text) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError("'" + key + "': expected an integer, got '" + std::string(text) + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& key, std::string_view text) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError("'" + key + "': expected an unsigned 64-bit integer, got '" + std::string(text) + "'");
    }
    return v;
}

double parse_real(const std::string& key, std::string_view text) {
    try {
        return parse_double(text);
    } catch (const Error&) {
        throw ConfigError("'" + key + "': expected a number, got '" + std::string(text) + "'");
    }
}

bool parse_bool(const std::string& key, std::string_view text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError("'" + key + "': expected true or false, got '" + std::string(text) + "'");
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
    return out;
}

std::string join(const std::vector<double>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + format_double(items[i]);
    return out;
}

struct Field {
    std::string key;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <class Block, class T>
Field field(std::string key, Block ExperimentConfig::*block, T Block::*member) {
    Field f;
    f.key = key;
    f.set = [key, block, member](ExperimentConfig& c, const std::string& text) {
        T& target = c.*block.*member;
        if constexpr (std::is_same_v<T, long>) {
            target = parse_long(key, text);
        } else if constexpr (std::is_same_v<T, double>) {
            target = parse_real(key, text);
        } else if constexpr (std::is_same_v<T, bool>) {
            target = parse_bool(key, text);
        } else if constexpr (std::is_same_v<T, std::string>) {
            target = text;
        } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
            target = split_list(text, ',');
        } else {
            target.clear();
            for (const auto& item : split_list(text, ',')) target.push_back(parse_real(key, item));
        }
    };
    f.get = [block, member](const ExperimentConfig& c) -> std::string {
        const T& value = c.*block.*member;
        if constexpr (std::is_same_v<T, long>) {
            return std::to_string(value);
        } else if constexpr (std::is_same_v<T, double>) {
            return format_double(value);
        } else if constexpr (std::is_same_v<T, bool>) {
            return value ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::string>) {
            return value;
        } else {
            return join(value);
        }
    };
    return f;
}

const std::vector<Field>& fields(Suite suite) {
    using C = ExperimentConfig;
    static const std::vector<Field> linreg{
        field("linreg.dim", &C::linreg, &LinregBlock::dim),
        field("linreg.train_size", &C::linreg, &LinregBlock::train_size),
        field("linreg.prior_variance", &C::linreg, &LinregBlock::prior_variance),
        field("linreg.noise", &C::linreg, &LinregBlock::noise),
        field("linreg.noise_variance", &C::linreg, &LinregBlock::noise_variance),
        field("linreg.low_variance", &C::linreg, &LinregBlock::low_variance),
        field("linreg.high_variance", &C::linreg, &LinregBlock::high_variance),
        field("linreg.low_axes", &C::linreg, &LinregBlock::low_axes),
        field("linreg.inputs", &C::linreg, &LinregBlock::inputs),
        field("linreg.agents", &C::linreg, &LinregBlock::agents),
        field("linreg.lambda", &C::linreg, &LinregBlock::lambda),
        field("linreg.c", &C::linreg, &LinregBlock::c),
        field("linreg.prior_sample_variance", &C::linreg, &LinregBlock::prior_sample_variance),
        field("linreg.datasets", &C::linreg, &LinregBlock::datasets),
        field("linreg.snr_samples", &C::linreg, &LinregBlock::snr_samples),
    };
    static const std::vector<Field> testbed{
        field("testbed.dim", &C::testbed, &TestbedBlock::dim),
        field("testbed.train_size", &C::testbed, &TestbedBlock::train_size),
        field("testbed.temperature", &C::testbed, &TestbedBlock::temperature),
        field("testbed.flip_fraction", &C::testbed, &TestbedBlock::flip_fraction),
        field("testbed.classes", &C::testbed, &TestbedBlock::classes),
        field("testbed.members", &C::testbed, &TestbedBlock::members),
        field("testbed.families", &C::testbed, &TestbedBlock::families),
        field("testbed.weight_decay", &C::testbed, &TestbedBlock::weight_decay),
        field("testbed.prior_scale", &C::testbed, &TestbedBlock::prior_scale),
        field("testbed.learning_rate", &C::testbed, &TestbedBlock::learning_rate),
        field("testbed.epochs", &C::testbed, &TestbedBlock::epochs),
        field("testbed.batch_size", &C::testbed, &TestbedBlock::batch_size),
        field("testbed.bootstrap", &C::testbed, &TestbedBlock::bootstrap),
        field("testbed.bootstrap_p", &C::testbed, &TestbedBlock::bootstrap_p),
        field("testbed.marginal_queries", &C::testbed, &TestbedBlock::marginal_queries),
        field("testbed.joint_tau", &C::testbed, &TestbedBlock::joint_tau),
        field("testbed.anchor_pairs", &C::testbed, &TestbedBlock::anchor_pairs),
        field("testbed.tune", &C::testbed, &TestbedBlock::tune),
        field("testbed.tuning_problems", &C::testbed, &TestbedBlock::tuning_problems),
    };
    static const std::vector<Field> bandit{
        field("bandit.dim", &C::bandit, &BanditBlock::dim),
        field("bandit.n_actions", &C::bandit, &BanditBlock::n_actions),
        field("bandit.horizon", &C::bandit, &BanditBlock::horizon),
        field("bandit.n_problems", &C::bandit, &BanditBlock::n_problems),
        field("bandit.prior_variance", &C::bandit, &BanditBlock::prior_variance),
        field("bandit.noise_scale", &C::bandit, &BanditBlock::noise_scale),
        field("bandit.policies", &C::bandit, &BanditBlock::policies),
        field("bandit.tune", &C::bandit, &BanditBlock::tune),
        field("bandit.lambdas", &C::bandit, &BanditBlock::lambdas),
        field("bandit.prior_sample_variances", &C::bandit, &BanditBlock::prior_sample_variances),
        field("bandit.lambda", &C::bandit, &BanditBlock::lambda),
        field("bandit.prior_sample_variance", &C::bandit, &BanditBlock::prior_sample_variance),
    };
    switch (suite) {
        case Suite::linreg: return linreg;
        case Suite::testbed: return testbed;
        case Suite::bandit: break;
    }
    return bandit;
}

const Field* find_field(const std::string& key) {
    for (Suite s : {Suite::linreg, Suite::testbed, Suite::bandit}) {
        for (const auto& f : fields(s)) {
            if (f.key == key) return &f;
        }
    }
    return nullptr;
}

Suite parse_suite(const std::string& text) {
    for (Suite s : {Suite::linreg, Suite::testbed, Suite::bandit}) {
        if (text == to_string(s)) return s;
    }
    throw ConfigError("unknown suite '" + text + "'");
}

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

void require_in(const std::string& key, const std::string& value, std::initializer_list<const char*> allowed) {
    for (const char* a : allowed) {
        if (value == a) return;
    }
    throw ConfigError("'" + key + "': unsupported value '" + value + "'");
}

void require_unique(const std::string& key, const std::vector<std::string>& items) {
    require(!items.empty(), "'" + key + "' must list at least one entry");
    std::set<std::string> seen(items.begin(), items.end());
    require(seen.size() == items.size(), "'" + key + "' lists an entry twice");
}

}  // namespace

KeyValues parse_key_values(std::istream& in, const std::string& source) {
    KeyValues out;
    std::string section = "run";
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const std::string text = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (text.empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        if (text.front() == '[') {
            if (text.back() != ']' || text.size() < 3) throw ConfigError(where + ": malformed section header");
            section = trim(std::string_view(text).substr(1, text.size() - 2));
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = trim(std::string_view(text).substr(0, eq));
        const std::string value = trim(std::string_view(text).substr(eq + 1));
        if (key.empty() || key.find('.') != std::string::npos) throw ConfigError(where + ": bad key '" + key + "'");
        const std::string full = section + "." + key;
        for (const auto& [k, v] : out) {
            if (k == full) throw ConfigError(where + ": duplicate key '" + full + "'");
        }
        out.emplace_back(full, value);
    }
    return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    return parse_key_values(in, path.string());
}

ExperimentConfig config_from_key_values(const KeyValues& entries) {
    ExperimentConfig config;
    bool have_suite = false;
    for (const auto& [key, value] : entries) {
        if (key == "run.suite") {
            config.suite = parse_suite(value);
            have_suite = true;
        } else if (key == "run.seed") {
            config.seed = parse_u64(key, value);
        } else if (key == "run.output_dir") {
            config.output_dir = value;
        } else if (const Field* f = find_field(key)) {
            f->set(config, value);
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    if (!have_suite) throw ConfigError("config must set 'suite'");
    for (const auto& [key, value] : entries) {
        const auto section = key.substr(0, key.find('.'));
        if (section != "run" && section != to_string(config.suite)) {
            throw ConfigError("key '" + key + "' does not belong to suite " + to_string(config.suite));
        }
    }
    validate(config);
    return config;
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
    return config_from_key_values(parse_key_values(in, source));
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    return config_from_key_values(read_key_values(path));
}

void validate(const ExperimentConfig& config) {
    switch (config.suite) {
        case Suite::linreg: {
            const auto& b = config.linreg;
            require(b.dim >= 1 && b.dim <= 512, "linreg.dim must lie in [1, 512]");
            require(b.train_size >= 0, "linreg.train_size must be >= 0");
            require(b.prior_variance > 0, "linreg.prior_variance must be positive");
            require_in("linreg.noise", b.noise, {"constant", "two_regime", "quadratic"});
            require(b.noise_variance > 0, "linreg.noise_variance must be positive");
            require(b.low_variance > 0 && b.high_variance > 0, "linreg noise variances must be positive");
            require(b.low_axes >= 0 && b.low_axes <= b.dim, "linreg.low_axes must lie in [0, dim]");
            require_in("linreg.inputs", b.inputs, {"standard_normal", "axis_aligned"});
            require_unique("linreg.agents", b.agents);
            for (const auto& a : b.agents) require_in("linreg.agents", a, {"posterior", "N", "P"});
            require(b.lambda > 0 && b.c > 0, "linreg.lambda and linreg.c must be positive");
            require(b.prior_sample_variance > 0, "linreg.prior_sample_variance must be positive");
            require(b.datasets >= 30, "linreg.datasets must be >= 30");
            require(b.snr_samples >= 1000, "linreg.snr_samples must be >= 1000");
            break;
        }
        case Suite::testbed: {
            const auto& b = config.testbed;
            require(b.dim >= 1, "testbed.dim must be >= 1");
            require(b.train_size >= 1, "testbed.train_size must be >= 1");
            require(b.temperature > 0, "testbed.temperature must be positive");
            require(b.flip_fraction >= 0 && b.flip_fraction < 1, "testbed.flip_fraction must lie in [0, 1)");
            require(b.classes >= 2, "testbed.classes must be >= 2");
            require(b.members >= 1, "testbed.members must be >= 1");
            require_unique("testbed.families", b.families);
            for (const auto& f : b.families) require_in("testbed.families", f, {"N", "P", "BP"});
            require(b.weight_decay >= 0, "testbed.weight_decay must be >= 0");
            require(b.prior_scale >= 0, "testbed.prior_scale must be >= 0");
            require(b.learning_rate > 0, "testbed.learning_rate must be positive");
            require(b.epochs >= 1 && b.batch_size >= 1, "testbed.epochs and testbed.batch_size must be >= 1");
            require_in("testbed.bootstrap", b.bootstrap, {"double_bernoulli", "bernoulli"});
            require(b.bootstrap_p > 0 && b.bootstrap_p <= 1, "testbed.bootstrap_p must lie in (0, 1]");
            require(b.marginal_queries >= 2, "testbed.marginal_queries must be >= 2");
            require(b.joint_tau >= 2 && b.joint_tau % 2 == 0, "testbed.joint_tau must be even and >= 2");
            require(b.anchor_pairs >= 2, "testbed.anchor_pairs must be >= 2");
            require(b.tuning_problems >= 1, "testbed.tuning_problems must be >= 1");
            break;
        }
        case Suite::bandit: {
            const auto& b = config.bandit;
            require(b.dim >= 1, "bandit.dim must be >= 1");
            require(b.n_actions >= 2, "bandit.n_actions must be >= 2");
            require(b.horizon >= 1, "bandit.horizon must be >= 1");
            require(b.n_problems >= 1, "bandit.n_problems must be >= 1");
            require(b.prior_variance > 0, "bandit.prior_variance must be positive");
            require(b.noise_scale >= 0, "bandit.noise_scale must be >= 0");
            require_unique("bandit.policies", b.policies);
            for (const auto& p : b.policies) {
                require_in("bandit.policies", p, {"N", "P", "BP", "P-weighted", "oracle", "uniform"});
            }
            require(!b.lambdas.empty() && !b.prior_sample_variances.empty(), "bandit tuning grids must be nonempty");
            for (double v : b.lambdas) require(v > 0, "bandit.lambdas must be positive");
            for (double v : b.prior_sample_variances) require(v > 0, "bandit.prior_sample_variances must be positive");
            require(b.lambda > 0 && b.prior_sample_variance > 0,
                    "bandit.lambda and bandit.prior_sample_variance must be positive");
            break;
        }
    }
}

std::string canonical_text(const ExperimentConfig& config) {
    std::ostringstream out;
    out << "suite = " << to_string(config.suite) << "\n[" << to_string(config.suite) << "]\n";
    for (const auto& f : fields(config.suite)) {
        out << f.key.substr(f.key.find('.') + 1) << " = " << f.get(config) << "\n";
    }
    return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical_text(config)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_config_file(const ExperimentConfig& config) {
    std::ostringstream out;
    out << "seed = " << config.seed << "\n";
    if (!config.output_dir.empty()) out << "output_dir = " << config.output_dir << "\n";
    out << canonical_text(config);
    return out.str();
}

}  // namespace enslab::cli
