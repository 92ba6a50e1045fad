#ifndef HARTOGSKIT_TOOLS_CLI_HPP
#define HARTOGSKIT_TOOLS_CLI_HPP

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace hk::cli {

/// Flat key=value configuration for one subcommand run.
class RunConfig {
public:
    std::string subcommand;
    std::filesystem::path out_dir;
    int threads = 0;

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string text(const std::string& key, const std::string& fallback) const;
    double number(const std::string& key, double fallback) const;
    /// Strictly positive number (tolerances, radii, steps).
    double positive(const std::string& key, double fallback) const;
    /// Number in the open interval (lo, hi).
    double open_range(const std::string& key, double fallback, double lo, double hi) const;
    int integer(const std::string& key, int fallback, int lo, int hi) const;
    /// Integer power of two in [lo, hi].
    int power_of_two(const std::string& key, int fallback, int lo, int hi) const;

    /// ConfigError naming every key no parameter read touched.
    void reject_unused() const;

private:
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

/// Parses `key = value` lines; '#' starts a comment. Throws ConfigError.
RunConfig parse_config(std::istream& is);

/// Ordered key=value lines written as summary.txt.
class Summary {
public:
    void add(const std::string& key, const std::string& value) { rows_.emplace_back(key, value); }
    void add(const std::string& key, double value);
    void add(const std::string& key, int value) { add(key, std::to_string(value)); }
    void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }

    void write(std::ostream& os) const;

private:
    std::vector<std::pair<std::string, std::string>> rows_;
};

const std::vector<std::string>& subcommands();

/// Runs the subcommand, writing summary.txt and its CSV traces into out_dir. Module errors
/// propagate as hk::Error.
void run(const RunConfig& config, Summary& summary);

/// Command-line entry: hartogskit <subcommand> --config <path> --out <dir> [--threads N].
/// Returns the process exit code; errors print one machine-readable line on stderr.
int main_entry(int argc, char** argv);

} // namespace hk::cli

#endif // HARTOGSKIT_TOOLS_CLI_HPP
