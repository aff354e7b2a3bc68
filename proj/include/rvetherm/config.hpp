#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "errors.hpp"
#include "spec.hpp"

namespace rvetherm {

/// One parameter sweep: a base spec plus axes varied as a cartesian product.
struct SweepConfig {
    MorphologySpec base;
    std::vector<std::pair<std::string, std::vector<double>>> axes;
    std::string output_dir = "out";
    bool emit_grids = false;
    int workers = 1;
    std::size_t max_points = 10000;
    double acc = 1e-6;

    std::size_t point_count() const {
        std::size_t n = 1;
        for (const auto& [name, values] : axes) n *= values.size();
        return n;
    }
};

namespace detail {

// parameter names follow the notation table; `a` is the aspect ratio
inline bool is_axis_key(const std::string& k) {
    static const char* keys[] = {"n_sp", "n_cyl", "n_def", "f_sp",       "f_cyl",
                                 "f_def", "wave",  "a",     "contrast",  "resolution"};
    for (const char* key : keys)
        if (k == key) return true;
    return false;
}

inline bool is_integer_key(const std::string& k) {
    return k == "n_sp" || k == "n_cyl" || k == "n_def" || k == "resolution";
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Accepts plain decimals plus the power ladder notation 2^k.
inline double parse_number(const std::string& tok, int line, int column) {
    const std::size_t caret = tok.find('^');
    if (caret != std::string::npos) {
        const std::string base = trim(tok.substr(0, caret));
        const std::string exp = trim(tok.substr(caret + 1));
        char* end = nullptr;
        const double b = std::strtod(base.c_str(), &end);
        if (end != base.c_str() + base.size() || base.empty())
            throw ConfigError("bad base in `" + tok + "`", line, column);
        const double e = std::strtod(exp.c_str(), &end);
        if (end != exp.c_str() + exp.size() || exp.empty() || e != std::floor(e))
            throw ConfigError("bad integer exponent in `" + tok + "`", line, column);
        return std::pow(b, e);
    }
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size())
        throw ConfigError("cannot parse number `" + tok + "`", line, column);
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(trim(s.substr(start)));
            break;
        }
        out.push_back(trim(s.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

// Value grammar: scalar | `{v, v, ...}` | octave ladder `lo .. hi`.
inline std::vector<double> parse_values(const std::string& value, int line, int column,
                                        bool& is_axis) {
    is_axis = false;
    if (!value.empty() && value.front() == '{') {
        if (value.back() != '}') throw ConfigError("unterminated list", line, column);
        is_axis = true;
        std::vector<double> out;
        for (const auto& tok : split(value.substr(1, value.size() - 2), ','))
            out.push_back(parse_number(tok, line, column));
        if (out.empty()) throw ConfigError("empty list", line, column);
        return out;
    }
    const std::size_t dots = value.find("..");
    if (dots != std::string::npos) {
        is_axis = true;
        const double lo = parse_number(trim(value.substr(0, dots)), line, column);
        const double hi = parse_number(trim(value.substr(dots + 2)), line, column);
        if (lo <= 0.0 || hi < lo)
            throw ConfigError("octave range needs 0 < lo <= hi", line, column);
        const double steps = std::log2(hi / lo);
        if (std::abs(steps - std::round(steps)) > 1e-9)
            throw ConfigError("octave range endpoints must differ by a power of 2", line, column);
        std::vector<double> out;
        double v = lo;
        for (int i = 0; i <= static_cast<int>(std::round(steps)); ++i, v *= 2.0) out.push_back(v);
        return out;
    }
    return {parse_number(value, line, column)};
}

inline void set_spec_param(MorphologySpec& spec, const std::string& key, double v) {
    if (is_integer_key(key) && v != std::floor(v))
        throw DomainError(key + " must be an integer");
    if (key == "n_sp") spec.n_sp = static_cast<int>(v);
    else if (key == "n_cyl") spec.n_cyl = static_cast<int>(v);
    else if (key == "n_def") spec.n_def = static_cast<int>(v);
    else if (key == "f_sp") spec.f_sp = v;
    else if (key == "f_cyl") spec.f_cyl = v;
    else if (key == "f_def") spec.f_def = v;
    else if (key == "a") spec.aspect_ratio = v;
    else if (key == "wave") spec.wave = v;
    else if (key == "contrast") spec.contrast = v;
    else if (key == "resolution") spec.resolution = static_cast<int>(v);
    else throw DomainError("not a morphology parameter: " + key);
}

} // namespace detail

/// Axis values of sweep point `flat` (row-major, first axis slowest).
inline std::vector<std::pair<std::string, double>> point_params(const SweepConfig& config,
                                                                std::size_t flat) {
    std::vector<std::pair<std::string, double>> out(config.axes.size());
    for (std::size_t k = config.axes.size(); k-- > 0;) {
        const auto& [name, values] = config.axes[k];
        out[k] = {name, values[flat % values.size()]};
        flat /= values.size();
    }
    return out;
}

inline MorphologySpec spec_for_point(const SweepConfig& config, std::size_t flat) {
    MorphologySpec spec = config.base;
    for (const auto& [name, value] : point_params(config, flat))
        detail::set_spec_param(spec, name, value);
    return spec;
}

/// Parse a line-oriented `key = value` config. `#` starts a comment. Axis
/// values (lists or octave ranges) are allowed on the morphology keys only;
/// unknown keys are errors.
inline SweepConfig parse_config(const std::string& text) {
    SweepConfig config;
    config.base.f_sp = 0.0;
    config.base.f_cyl = 0.0;

    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t eol = text.find('\n', start);
        std::string line = eol == std::string::npos ? text.substr(start) : text.substr(start, eol - start);
        ++line_no;
        start = eol == std::string::npos ? text.size() + 1 : eol + 1;

        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (detail::trim(line).empty()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected `key = value`", line_no, 1);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const int vcol = static_cast<int>(eq) + 2;
        if (key.empty()) throw ConfigError("missing key", line_no, 1);
        if (value.empty()) throw ConfigError("missing value for `" + key + "`", line_no, vcol);

        if (detail::is_axis_key(key)) {
            bool is_axis = false;
            const auto values = detail::parse_values(value, line_no, vcol, is_axis);
            try {
                if (is_axis) {
                    for (const auto& [name, existing] : config.axes)
                        if (name == key)
                            throw ConfigError("duplicate axis `" + key + "`", line_no, 1);
                    for (double v : values) {
                        MorphologySpec probe = config.base;
                        detail::set_spec_param(probe, key, v); // integrality check
                    }
                    config.axes.emplace_back(key, values);
                } else {
                    detail::set_spec_param(config.base, key, values.front());
                }
            } catch (const DomainError& err) {
                throw ConfigError(err.what(), line_no, vcol);
            }
            continue;
        }

        // scalar-only keys
        auto number = [&] { return detail::parse_number(value, line_no, vcol); };
        auto integer = [&] {
            const double v = number();
            if (v != std::floor(v)) throw ConfigError(key + " must be an integer", line_no, vcol);
            return static_cast<long long>(v);
        };
        if (key == "periods") config.base.corrugation_periods = static_cast<int>(integer());
        else if (key == "seed") config.base.seed = static_cast<std::uint64_t>(integer());
        else if (key == "runs") config.base.runs = static_cast<int>(integer());
        else if (key == "acc") config.acc = number();
        else if (key == "workers") config.workers = static_cast<int>(integer());
        else if (key == "max_points") config.max_points = static_cast<std::size_t>(integer());
        else if (key == "out") config.output_dir = value;
        else if (key == "emit_grids") {
            if (value == "true") config.emit_grids = true;
            else if (value == "false") config.emit_grids = false;
            else throw ConfigError("emit_grids must be true or false", line_no, vcol);
        } else {
            throw ConfigError("unknown key `" + key + "`", line_no, 1);
        }
    }

    if (config.point_count() > config.max_points)
        throw ConfigError("sweep has " + std::to_string(config.point_count()) +
                          " points, above the cap of " + std::to_string(config.max_points));

    // hard range violations surface at parse time, for every sweep point
    for (std::size_t p = 0; p < config.point_count(); ++p) {
        try {
            validate(spec_for_point(config, p));
        } catch (const DomainError& err) {
            throw ConfigError(std::string(err.what()) + " (sweep point " + std::to_string(p) + ")");
        }
    }
    return config;
}

} // namespace rvetherm
