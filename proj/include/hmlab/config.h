#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hmlab/corona.h"
#include "hmlab/lattice.h"
#include "hmlab/measure.h"
#include "hmlab/walk.h"

namespace hmlab {

/// Flat `key = value` configuration. Lines starting with '#' and blank
/// lines are ignored; a trailing `# ...` after a value is a comment too.
/// Every key must appear in the schema; values are range-checked on load.
class Config {
public:
    static Config parse(std::istream& in, const std::string& origin = "<config>");
    static Config load(const std::string& path);

    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string str(const std::string& key) const;
    double num(const std::string& key) const;
    long long integer(const std::string& key) const;
    std::uint64_t seed() const;
    bool flag(const std::string& key) const;
    std::vector<double> list(const std::string& key) const;
    /// Optional numeric key: empty when unset or set to "auto".
    std::optional<double> maybe(const std::string& key) const;

    /// Every schema key with its effective value, sorted by key.
    std::map<std::string, std::string> effective() const;

    StoppingConfig stopping() const;
    LatticeParams lattice() const;
    WalkParams walk() const;
    /// Builtin generator or measure file.
    PointMeasure measure() const;

private:
    void validate_value(const std::string& key, const std::string& value) const;

    std::map<std::string, std::string> values_;
};

struct ConfigKey {
    std::string name;
    enum class Type { Text, Real, Integer, Bool, List } type;
    std::string fallback;  ///< empty: unset
    double lo, hi;         ///< inclusive numeric range
    std::string help;
};

const std::vector<ConfigKey>& config_schema();

}  // namespace hmlab
