#include "enslab/cli/results.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "enslab/numkit/errors.hpp"

namespace enslab::cli {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc{}) throw Error("format_double: buffer too small");
    return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw SchemaMismatch("not a number: '" + std::string(text) + "'");
    }
    return v;
}

namespace {

void check_field(const std::string& s) {
    if (s.empty() || s.find_first_of(",\"\n\r") != std::string::npos) {
        throw ConfigError("results field '" + s + "' is empty or needs quoting");
    }
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

void write_results(std::ostream& out, std::span<const ResultRow> rows) {
    std::set<std::tuple<std::string, std::string, std::string, std::string, std::string, std::uint64_t>> keys;
    for (std::size_t i = 0; i < kResultColumns.size(); ++i) out << (i ? "," : "") << kResultColumns[i];
    out << "\n";
    for (const auto& r : rows) {
        for (const auto* s : {&r.suite, &r.agent, &r.hparams, &r.d, &r.t, &r.rho, &r.flip, &r.metric}) check_field(*s);
        if (!keys.emplace(r.suite, r.setting(), r.agent, r.hparams, r.metric, r.seed).second) {
            throw ConfigError("duplicate result row for " + r.agent + " " + r.metric + " at " + r.setting());
        }
        out << r.suite << ',' << r.agent << ',' << r.hparams << ',' << r.d << ',' << r.t << ',' << r.rho << ','
            << r.flip << ',' << r.metric << ',' << format_double(r.value) << ',' << format_double(r.std_error)
            << ',' << r.seed << '\n';
    }
}

std::vector<ResultRow> read_results(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaMismatch(source + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv(line);
    bool ok = header.size() == kResultColumns.size();
    for (std::size_t i = 0; ok && i < header.size(); ++i) ok = header[i] == kResultColumns[i];
    if (!ok) throw SchemaMismatch(source + ": unexpected columns '" + line + "'");

    std::vector<ResultRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv(line);
        const std::string where = source + ":" + std::to_string(line_no);
        if (f.size() != kResultColumns.size()) throw SchemaMismatch(where + ": wrong number of fields");
        ResultRow r;
        r.suite = f[0];
        r.agent = f[1];
        r.hparams = f[2];
        r.d = f[3];
        r.t = f[4];
        r.rho = f[5];
        r.flip = f[6];
        r.metric = f[7];
        try {
            r.value = parse_double(f[8]);
            r.std_error = parse_double(f[9]);
        } catch (const SchemaMismatch& e) {
            throw SchemaMismatch(where + ": " + e.what());
        }
        const auto [ptr, ec] = std::from_chars(f[10].data(), f[10].data() + f[10].size(), r.seed);
        if (ec != std::errc{} || ptr != f[10].data() + f[10].size()) throw SchemaMismatch(where + ": bad seed");
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace enslab::cli
