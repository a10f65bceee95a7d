#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace enslab::cli {

/// Column order of results.csv. Setting descriptors that do not apply to a
/// suite are written as "na".
inline constexpr std::array<std::string_view, 11> kResultColumns{
    "suite", "agent", "hparams", "d", "T", "rho", "flip", "metric", "value", "std_error", "seed"};

struct ResultRow {
    std::string suite;
    std::string agent;
    std::string hparams = "-";
    std::string d = "na";
    std::string t = "na";
    std::string rho = "na";
    std::string flip = "na";
    std::string metric;
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t seed = 0;

    std::string setting() const { return "d=" + d + ";T=" + t + ";rho=" + rho + ";flip=" + flip; }
};

/// Shortest decimal string that parses back to exactly `x` ("inf", "nan" for
/// non-finite values).
std::string format_double(double x);

double parse_double(std::string_view text);

/// Throws ConfigError on a duplicate (suite, setting, agent, hparams, metric, seed) key
/// or on a field that would need quoting.
void write_results(std::ostream& out, std::span<const ResultRow> rows);

/// Throws SchemaMismatch unless the header is exactly kResultColumns.
std::vector<ResultRow> read_results(std::istream& in, const std::string& source);

}  // namespace enslab::cli
