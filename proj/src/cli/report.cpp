#include "enslab/cli/report.hpp"

#include <glob.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "enslab/cli/runner.hpp"
#include "enslab/numkit/errors.hpp"
#include "enslab/numkit/stats.hpp"

namespace enslab::cli {

TuningMode parse_tuning_mode(std::string_view text) {
    if (text == "per-setting") return TuningMode::per_setting;
    if (text == "global") return TuningMode::global;
    throw ConfigError("unknown report mode '" + std::string(text) + "'");
}

std::string to_string(TuningMode mode) { return mode == TuningMode::global ? "global" : "per-setting"; }

std::string selection_metric(std::string_view suite) {
    if (suite == "linreg") return "expected_kl";
    if (suite == "testbed") return "joint_kl";
    if (suite == "bandit") return "final_regret";
    throw SchemaMismatch("unknown suite '" + std::string(suite) + "'");
}

namespace {

// (suite, setting, agent, hparams, metric)
using CellKey = std::tuple<std::string, std::string, std::string, std::string, std::string>;

struct Cell {
    const ResultRow* first = nullptr;
    std::map<std::uint64_t, double> by_seed;
};

std::map<CellKey, Cell> group(std::span<const ResultRow> rows) {
    std::map<CellKey, Cell> cells;
    for (const auto& r : rows) {
        auto& cell = cells[{r.suite, r.setting(), r.agent, r.hparams, r.metric}];
        if (!cell.first) cell.first = &r;
        const auto [it, fresh] = cell.by_seed.emplace(r.seed, r.value);
        // identical reruns from different files are fine, conflicting values are not
        if (!fresh && !(it->second == r.value || (std::isnan(it->second) && std::isnan(r.value)))) {
            throw SchemaMismatch("duplicate row for " + r.agent + " " + r.metric + " seed " + std::to_string(r.seed));
        }
    }
    return cells;
}

double cell_mean(const Cell& cell) {
    double s = 0.0;
    for (const auto& [seed, v] : cell.by_seed) s += v;
    return s / static_cast<double>(cell.by_seed.size());
}

// chosen hparams per (suite, setting, agent)
std::map<std::tuple<std::string, std::string, std::string>, std::string> select(
    const std::map<CellKey, Cell>& cells, TuningMode mode) {
    std::map<std::tuple<std::string, std::string, std::string>, std::string> chosen;
    std::map<std::tuple<std::string, std::string, std::string>, double> best;
    // global mode: mean over settings of the per-setting mean, only for hparams present everywhere
    std::map<std::tuple<std::string, std::string, std::string>, std::pair<double, std::size_t>> global_score;
    std::map<std::pair<std::string, std::string>, std::set<std::string>> settings_of_agent;

    for (const auto& [key, cell] : cells) {
        const auto& [suite, setting, agent, hparams, metric] = key;
        settings_of_agent[{suite, agent}].insert(setting);
        if (metric != selection_metric(suite)) continue;
        const double m = cell_mean(cell);
        if (mode == TuningMode::per_setting) {
            auto it = best.find({suite, setting, agent});
            if (it == best.end() || m < it->second) {
                best[{suite, setting, agent}] = m;
                chosen[{suite, setting, agent}] = hparams;
            }
        } else {
            auto& [sum, n] = global_score[{suite, agent, hparams}];
            sum += m;
            ++n;
        }
    }
    if (mode == TuningMode::global) {
        std::map<std::pair<std::string, std::string>, std::pair<double, std::string>> winner;
        for (const auto& [key, score] : global_score) {
            const auto& [suite, agent, hparams] = key;
            if (score.second != settings_of_agent[{suite, agent}].size()) continue;
            const double m = score.first / static_cast<double>(score.second);
            auto it = winner.find({suite, agent});
            if (it == winner.end() || m < it->second.first) winner[{suite, agent}] = {m, hparams};
        }
        for (const auto& [key, cell] : cells) {
            const auto& [suite, setting, agent, hparams, metric] = key;
            auto it = winner.find({suite, agent});
            if (it != winner.end()) chosen[{suite, setting, agent}] = it->second.second;
        }
    }
    // agents without the selection metric keep whichever hparams they have
    for (const auto& [key, cell] : cells) {
        const auto& [suite, setting, agent, hparams, metric] = key;
        chosen.try_emplace({suite, setting, agent}, hparams);
    }
    return chosen;
}

}  // namespace

std::vector<SummaryRow> aggregate(std::span<const ResultRow> rows, TuningMode mode) {
    const auto cells = group(rows);
    const auto chosen = select(cells, mode);
    std::vector<SummaryRow> out;
    for (const auto& [key, cell] : cells) {
        const auto& [suite, setting, agent, hparams, metric] = key;
        if (chosen.at({suite, setting, agent}) != hparams) continue;
        std::vector<double> values;
        for (const auto& [seed, v] : cell.by_seed) values.push_back(v);
        SummaryRow s;
        s.suite = suite;
        s.agent = agent;
        s.hparams = hparams;
        s.d = cell.first->d;
        s.t = cell.first->t;
        s.rho = cell.first->rho;
        s.flip = cell.first->flip;
        s.metric = metric;
        s.seeds = values.size();
        if (values.size() == 1) {
            s.mean = values.front();
            s.std_error = 0.0;
        } else {
            const auto me = mean_and_error(values);
            s.mean = me.mean;
            s.std_error = me.std_error;
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<SignTestRow> sign_tests(std::span<const ResultRow> rows, std::span<const SummaryRow> summary) {
    const auto cells = group(rows);
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<const SummaryRow*>> by_metric;
    for (const auto& s : summary) by_metric[{s.suite, s.setting(), s.metric}].push_back(&s);

    std::vector<SignTestRow> out;
    for (const auto& [key, entries] : by_metric) {
        const auto& [suite, setting, metric] = key;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            for (std::size_t j = i + 1; j < entries.size(); ++j) {
                const auto& a = cells.at({suite, setting, entries[i]->agent, entries[i]->hparams, metric});
                const auto& b = cells.at({suite, setting, entries[j]->agent, entries[j]->hparams, metric});
                std::vector<double> va, vb;
                for (const auto& [seed, v] : a.by_seed) {
                    auto it = b.by_seed.find(seed);
                    if (it == b.by_seed.end()) continue;
                    va.push_back(v);
                    vb.push_back(it->second);
                }
                if (va.empty()) continue;
                const auto test = paired_sign_test(va, vb);
                out.push_back({suite, setting, metric, entries[i]->agent, entries[j]->agent, test.wins, test.losses,
                               test.ties, test.p_one_sided, test.p_two_sided});
            }
        }
    }
    return out;
}

std::vector<std::filesystem::path> expand_glob(const std::string& pattern) {
    glob_t g{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    std::vector<std::filesystem::path> out;
    if (rc == 0) {
        for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
    if (rc != 0 && rc != GLOB_NOMATCH) throw IoError("glob failed for '" + pattern + "'");
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

std::string file_safe(std::string s) {
    for (char& c : s) {
        if (c == '=' || c == ';' || c == '/') c = '_';
    }
    return s;
}

std::vector<std::pair<double, double>> read_curve(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::vector<std::pair<double, double>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw SchemaMismatch(path.string() + ": expected two tab-separated columns");
        out.emplace_back(parse_double(line.substr(0, tab)), parse_double(line.substr(tab + 1)));
    }
    return out;
}

}  // namespace

void report(const std::string& pattern, TuningMode mode, const std::filesystem::path& out_dir) {
    const auto inputs = expand_glob(pattern);
    if (inputs.empty()) throw IoError("no input files match '" + pattern + "'");
    std::vector<ResultRow> rows;
    // averaged regret traces: (setting, curve name) -> summed points and count
    std::map<std::pair<std::string, std::string>, std::pair<std::vector<std::pair<double, double>>, std::size_t>> traces;
    for (const auto& path : inputs) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot read '" + path.string() + "'");
        auto part = read_results(in, path.string());
        for (const auto& r : part) {
            if (r.suite != "bandit") continue;
            const auto trace = path.parent_path() / ("regret_" + r.agent + ".tsv");
            if (!std::filesystem::exists(trace)) continue;
            const auto points = read_curve(trace);
            auto& [sum, n] = traces[{r.setting(), "regret_" + r.agent}];
            if (n == 0) {
                sum = points;
            } else {
                if (sum.size() != points.size()) throw SchemaMismatch(trace.string() + ": trace length differs");
                for (std::size_t k = 0; k < points.size(); ++k) sum[k].second += points[k].second;
            }
            ++n;
        }
        rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

    const auto summary = aggregate(rows, mode);
    {
        std::ofstream out(out_dir / "summary.csv");
        if (!out) throw IoError("cannot write summary.csv");
        out << "suite,agent,hparams,d,T,rho,flip,metric,mean,std_error,seeds\n";
        for (const auto& s : summary) {
            out << s.suite << ',' << s.agent << ',' << s.hparams << ',' << s.d << ',' << s.t << ',' << s.rho << ','
                << s.flip << ',' << s.metric << ',' << format_double(s.mean) << ',' << format_double(s.std_error)
                << ',' << s.seeds << '\n';
        }
    }
    {
        std::ofstream out(out_dir / "sign_tests.csv");
        if (!out) throw IoError("cannot write sign_tests.csv");
        out << "suite,setting,metric,agent_a,agent_b,wins,losses,ties,p_one_sided,p_two_sided\n";
        for (const auto& t : sign_tests(rows, summary)) {
            out << t.suite << ',' << t.setting << ',' << t.metric << ',' << t.agent_a << ',' << t.agent_b << ','
                << t.wins << ',' << t.losses << ',' << t.ties << ',' << format_double(t.p_one_sided) << ','
                << format_double(t.p_two_sided) << '\n';
        }
    }
    // one bar file per (suite, setting, metric): agent index and mean
    std::map<std::string, std::vector<const SummaryRow*>> bars;
    for (const auto& s : summary) bars[s.suite + "_" + s.metric + "_" + s.setting()].push_back(&s);
    for (const auto& [name, entries] : bars) {
        std::ofstream out(out_dir / ("bars_" + file_safe(name) + ".tsv"));
        if (!out) throw IoError("cannot write bar file for " + name);
        for (const auto* s : entries) out << s->agent << '\t' << format_double(s->mean) << '\n';
    }
    for (const auto& [key, acc] : traces) {
        Curve curve{key.second + "_" + file_safe(key.first), acc.first};
        for (auto& p : curve.points) p.second /= static_cast<double>(acc.second);
        write_curve(out_dir / (curve.name + ".tsv"), curve);
    }
}

}  // namespace enslab::cli
