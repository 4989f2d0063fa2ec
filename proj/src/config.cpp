#include "mrm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "mrm/csv.hpp"
#include "mrm/random.hpp"

namespace mrm {

namespace {

std::string join(const std::vector<std::string>& v, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += v[i];
    }
    return out;
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    for (const auto& part : csv::split_line(s)) {
        const auto t = trim(part);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
};

using Section = std::map<std::string, Entry>;
using Raw = std::map<std::string, Section>;

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"model", {"kind", "sigma2", "m", "normalize", "jumps", "atoms", "jump_c", "jump_alpha",
                   "jump_rate", "jump_upper", "jump_side", "jump_eps", "gamma2", "R", "r"}},
        {"grid", {"T", "l", "length", "resolution", "n"}},
        {"set", {"kind", "ratio", "depth", "points"}},
        {"run", {"replicas", "seed", "q", "scales", "lambda", "tolerance", "levels", "base",
                 "bootstrap", "threads", "batch", "dumps", "blocks", "method"}},
        {"output", {"dir", "formats"}},
    };
    return s;
}

Raw parse_raw(std::string_view text, std::vector<std::string>& issues) {
    Raw raw;
    std::string section;
    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        const std::string where = "line " + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') {
                issues.push_back(where + ": malformed section header");
                continue;
            }
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!schema().count(section)) issues.push_back(where + ": unknown section [" + section + "]");
            raw[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            issues.push_back(where + ": expected key = value");
            continue;
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (section.empty()) {
            issues.push_back(where + ": key '" + key + "' outside any section");
            continue;
        }
        const auto sch = schema().find(section);
        if (sch == schema().end()) continue;
        if (!sch->second.count(key)) {
            issues.push_back(where + ": unknown key '" + section + "." + key + "'");
            continue;
        }
        if (raw[section].count(key)) {
            issues.push_back(where + ": duplicate key '" + section + "." + key + "'");
            continue;
        }
        raw[section][key] = {value, lineno, false};
    }
    return raw;
}

// Typed access with issue collection.
class Reader {
  public:
    Reader(Raw& raw, std::vector<std::string>& issues) : raw_(raw), issues_(issues) {}

    bool has(const std::string& sec, const std::string& key) const {
        const auto s = raw_.find(sec);
        return s != raw_.end() && s->second.count(key);
    }

    std::optional<std::string> str(const std::string& sec, const std::string& key) {
        if (!has(sec, key)) return std::nullopt;
        auto& e = raw_[sec][key];
        e.used = true;
        return e.value;
    }

    void issue(const std::string& sec, const std::string& key, const std::string& msg) {
        issues_.push_back(sec + "." + key + ": " + msg);
    }

    double num(const std::string& sec, const std::string& key, double def,
               const std::function<bool(double)>& ok, const std::string& rule) {
        const auto v = str(sec, key);
        if (!v) return def;
        try {
            const double x = parse_number(*v);
            if (!ok(x)) issue(sec, key, rule + " (got " + *v + ")");
            return x;
        } catch (const std::exception&) {
            issue(sec, key, "not a number: '" + *v + "'");
            return def;
        }
    }

    long long integer(const std::string& sec, const std::string& key, long long def, long long lo,
                      long long hi) {
        const auto v = str(sec, key);
        if (!v) return def;
        long long x = 0;
        const auto res = std::from_chars(v->data(), v->data() + v->size(), x);
        if (res.ec != std::errc{} || res.ptr != v->data() + v->size()) {
            issue(sec, key, "not an integer: '" + *v + "'");
            return def;
        }
        if (x < lo || x > hi)
            issue(sec, key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return x;
    }

    std::vector<double> nums(const std::string& sec, const std::string& key, std::vector<double> def,
                             const std::function<bool(double)>& ok, const std::string& rule) {
        const auto v = str(sec, key);
        if (!v) return def;
        std::vector<double> out;
        for (const auto& tok : split_list(*v)) {
            try {
                const double x = parse_number(tok);
                if (!ok(x)) issue(sec, key, rule + " (got " + tok + ")");
                out.push_back(x);
            } catch (const std::exception&) {
                issue(sec, key, "not a number: '" + tok + "'");
            }
        }
        if (out.empty()) issue(sec, key, "empty list");
        return out;
    }

    bool boolean(const std::string& sec, const std::string& key, bool def) {
        const auto v = str(sec, key);
        if (!v) return def;
        if (*v == "true" || *v == "yes" || *v == "1") return true;
        if (*v == "false" || *v == "no" || *v == "0") return false;
        issue(sec, key, "expected true or false");
        return def;
    }

    std::string choice(const std::string& sec, const std::string& key, const std::string& def,
                       const std::vector<std::string>& allowed) {
        const auto v = str(sec, key);
        if (!v) return def;
        if (std::find(allowed.begin(), allowed.end(), *v) == allowed.end()) {
            issue(sec, key, "must be one of " + join(allowed, ", "));
            return def;
        }
        return *v;
    }

  private:
    Raw& raw_;
    std::vector<std::string>& issues_;
};

auto positive = [](double x) { return x > 0 && std::isfinite(x); };
auto finite = [](double x) { return std::isfinite(x); };

ExperimentConfig::Model parse_model(Reader& rd) {
    ExperimentConfig::Model m;
    const auto kind = rd.choice("model", "kind", "levy", {"levy", "lognormal-2d", "gff"});
    m.kind = kind == "levy" ? ModelKind::Levy1D : kind == "gff" ? ModelKind::Gff2D : ModelKind::Lognormal2D;

    const double sigma2 = rd.num("model", "sigma2", 0.0, [](double x) { return x >= 0 && std::isfinite(x); },
                                 "must be >= 0");
    const bool norm = rd.boolean("model", "normalize", true);
    const auto jumps = rd.choice("model", "jumps", "none", {"none", "atoms", "power-exp"});
    JumpMeasure nu = NoJumps{};
    if (jumps == "atoms") {
        AtomicJumps a;
        const auto v = rd.str("model", "atoms");
        if (!v) rd.issue("model", "atoms", "required when jumps = atoms");
        else
            for (const auto& tok : split_list(*v)) {
                const auto colon = tok.find(':');
                try {
                    if (colon == std::string::npos) throw std::invalid_argument("x:w");
                    const double x = parse_number(trim(std::string_view(tok).substr(0, colon)));
                    const double w = parse_number(trim(std::string_view(tok).substr(colon + 1)));
                    if (!(w > 0) || !std::isfinite(x) || x == 0.0)
                        rd.issue("model", "atoms", "need x != 0 and w > 0 (got " + tok + ")");
                    a.atoms.push_back({x, w});
                } catch (const std::exception&) {
                    rd.issue("model", "atoms", "expected x:w, got '" + tok + "'");
                }
            }
        nu = a;
    } else if (jumps == "power-exp") {
        PowerExpFamily f;
        f.c = rd.num("model", "jump_c", 1.0, positive, "must be > 0");
        f.alpha = rd.num("model", "jump_alpha", 0.5, [](double x) { return x >= -1 && x < 2; }, "must lie in [-1, 2)");
        f.rate = rd.num("model", "jump_rate", 0.0, [](double x) { return x >= 0 && std::isfinite(x); }, "must be >= 0");
        f.upper = rd.num("model", "jump_upper", 1.0, [](double x) { return x > 0; }, "must be > 0");
        f.side = static_cast<int>(rd.integer("model", "jump_side", 1, -1, 1));
        if (f.side == 0) rd.issue("model", "jump_side", "must be +1 or -1");
        if (std::isinf(f.upper) && f.rate == 0) rd.issue("model", "jump_upper", "infinite upper end needs jump_rate > 0");
        const double eps = rd.num("model", "jump_eps", 1e-2, positive, "must be > 0");
        try {
            nu = make_density(f, eps);
        } catch (const std::exception& e) {
            rd.issue("model", "jumps", e.what());
        }
    } else {
        for (const char* k : {"atoms", "jump_c", "jump_alpha", "jump_rate", "jump_upper", "jump_side", "jump_eps"})
            if (rd.has("model", k)) rd.issue("model", k, "only valid with jumps = atoms or power-exp");
    }
    if (norm && rd.has("model", "m")) rd.issue("model", "m", "conflicts with normalize = true");
    const double drift = rd.num("model", "m", 0.0, finite, "must be finite");
    try {
        if (norm) m.triple = normalize(sigma2, nu);
        else m.triple = LevyTriple{drift, sigma2, nu};
        validate(m.triple);
    } catch (const std::exception& e) {
        rd.issue("model", "sigma2", std::string("invalid triple: ") + e.what());
    }

    m.gamma2 = rd.num("model", "gamma2", 0.5, [](double x) { return x >= 0 && x < 4; }, "must lie in [0, 4)");
    m.R = rd.num("model", "R", 1.0, positive, "must be > 0");
    m.r = rd.num("model", "r", 0.8 * m.R, positive, "must be > 0");
    if (m.r >= m.R) rd.issue("model", "r", "must be < R");
    if (m.kind != ModelKind::Levy1D) {
        for (const char* k : {"sigma2", "m", "jumps"})
            if (rd.has("model", k)) rd.issue("model", k, "not used by 2D models");
    } else {
        for (const char* k : {"gamma2", "R", "r"})
            if (rd.has("model", k)) rd.issue("model", k, "only used by 2D models");
    }
    return m;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : ValidationError("invalid config: " + join(issues, "; ")), issues_(std::move(issues)) {}

bool ExperimentConfig::wants(std::string_view format) const {
    return std::find(output.formats.begin(), output.formats.end(), format) != output.formats.end();
}

double parse_number(std::string_view token) {
    token = trim(token);
    if (token == "inf" || token == "+inf") return kInf;
    if (token == "-inf") return -kInf;
    if (const auto slash = token.find('/'); slash != std::string_view::npos) {
        const double den = parse_number(token.substr(slash + 1));
        if (den == 0) throw ValidationError("division by zero");
        return parse_number(token.substr(0, slash)) / den;
    }
    if (const auto caret = token.find('^'); caret != std::string_view::npos)
        return std::pow(parse_number(token.substr(0, caret)), parse_number(token.substr(caret + 1)));
    const char* b = token.data();
    if (!token.empty() && *b == '+') ++b;
    double v = 0.0;
    const auto res = std::from_chars(b, token.data() + token.size(), v);
    if (token.empty() || res.ec != std::errc{} || res.ptr != token.data() + token.size())
        throw ValidationError("not a number: " + std::string(token));
    return v;
}

ExperimentConfig parse_config(std::string_view text) {
    std::vector<std::string> issues;
    Raw raw = parse_raw(text, issues);
    Reader rd(raw, issues);
    ExperimentConfig cfg;
    cfg.text = std::string(text);
    cfg.hash = fnv1a64(text);

    cfg.model = parse_model(rd);

    auto& g = cfg.grid;
    g.T = rd.num("grid", "T", 1.0, positive, "must be > 0");
    g.l_set = rd.has("grid", "l");
    g.l = rd.num("grid", "l", g.T / 1024, positive, "must be > 0");
    if (g.l > g.T) rd.issue("grid", "l", "must be <= T");
    g.length = rd.num("grid", "length", g.T, positive, "must be > 0");
    g.resolution = rd.num("grid", "resolution", 4.0, [](double x) { return x >= 4 && x <= 16; }, "must lie in [4, 16]");
    g.n = static_cast<std::size_t>(rd.integer("grid", "n", 64, 1, 64));

    if (cfg.model.kind == ModelKind::Levy1D && issues.empty()) {
        try {
            if (!(critical_moment(cfg.model.triple) > 1.0))
                rd.issue("model", "jumps", "critical moment q_c must exceed 1");
            const bool gaussian_part = cfg.model.triple.sigma2 > 0 ||
                                       default_method(cfg.model.triple) == FieldMethod::TruncatedGeneral;
            const double cells = std::ceil(g.length * g.resolution / g.l - 1e-9);
            if (gaussian_part && cells > static_cast<double>(kMaxExactGrid))
                rd.issue("grid", "l", "length * resolution / l exceeds the exact grid limit 8192");
        } catch (const std::exception& e) {
            rd.issue("model", "sigma2", e.what());
        }
    }

    auto& s = cfg.set;
    const auto kind = rd.choice("set", "kind", "none",
                                {"none", "cantor", "full-interval", "points", "cantor-dust", "full-square"});
    s.kind = kind == "cantor"          ? SetChoice::Cantor
             : kind == "full-interval" ? SetChoice::FullInterval
             : kind == "points"        ? SetChoice::Points
             : kind == "cantor-dust"   ? SetChoice::CantorDust
             : kind == "full-square"   ? SetChoice::FullSquare
                                       : SetChoice::None;
    s.ratio = rd.num("set", "ratio", 1.0 / 3, [](double x) { return x > 0 && x <= 0.5; }, "must lie in (0, 1/2]");
    s.depth = static_cast<int>(rd.integer("set", "depth", s.kind == SetChoice::CantorDust ? 6 : 12, 1,
                                          s.kind == SetChoice::CantorDust ? 8 : 26));
    s.points = rd.nums("set", "points", {}, [&](double x) { return x >= 0 && x <= g.length; },
                       "points must lie in [0, length]");
    if (s.kind == SetChoice::Points && s.points.empty()) rd.issue("set", "points", "required for kind = points");

    auto& r = cfg.run;
    r.replicas = static_cast<std::size_t>(rd.integer("run", "replicas", 100, 1, 10'000'000));
    if (const auto v = rd.str("run", "seed")) {
        std::uint64_t x = 0;
        const auto res = std::from_chars(v->data(), v->data() + v->size(), x);
        if (res.ec != std::errc{} || res.ptr != v->data() + v->size()) rd.issue("run", "seed", "not an unsigned 64-bit integer");
        r.seed = x;
    }
    r.q = rd.nums("run", "q", r.q, finite, "must be finite");
    r.scales = rd.nums("run", "scales", {}, positive, "must be > 0");
    std::sort(r.scales.begin(), r.scales.end());
    r.lambda = rd.nums("run", "lambda", r.lambda, [](double x) { return x > 0 && x <= 1; }, "must lie in (0, 1]");
    if (rd.has("run", "tolerance")) r.tolerance = rd.num("run", "tolerance", 0.0, positive, "must be > 0");
    for (double v : rd.nums("run", "levels", {}, [](double x) { return x >= 0 && x <= 12 && x == std::floor(x); },
                            "levels must be integers in [0, 12]"))
        r.levels.push_back(static_cast<int>(v));
    r.base = static_cast<int>(rd.integer("run", "base", 2, 2, 16));
    r.bootstrap = static_cast<std::size_t>(rd.integer("run", "bootstrap", 200, 2, 100000));
    r.threads = static_cast<unsigned>(rd.integer("run", "threads", 1, 1, 1024));
    r.batch = static_cast<std::size_t>(rd.integer("run", "batch", 64, 1, 4096));
    r.dumps = static_cast<std::size_t>(rd.integer("run", "dumps", 1, 0, 1000));
    r.blocks = static_cast<std::size_t>(rd.integer("run", "blocks", 1, 1, 64));
    if (const auto m = rd.str("run", "method"); m && *m != "auto") {
        try {
            r.method = field_method_from_string(*m);
        } catch (const std::exception& e) {
            rd.issue("run", "method", e.what());
        }
    }
    if (r.method && issues.empty() && cfg.model.kind == ModelKind::Levy1D) {
        const auto& t = cfg.model.triple;
        if (*r.method == FieldMethod::GaussianExact && !t.is_gaussian())
            rd.issue("run", "method", "gaussian-exact needs jumps = none");
        if (*r.method == FieldMethod::PoissonExact && !std::isfinite(total_mass(t.nu)))
            rd.issue("run", "method", "poisson-exact needs a finite jump measure");
    }

    auto& o = cfg.output;
    if (const auto d = rd.str("output", "dir")) {
        if (d->empty()) rd.issue("output", "dir", "must not be empty");
        o.dir = *d;
    }
    if (const auto f = rd.str("output", "formats")) {
        o.formats = split_list(*f);
        for (const auto& x : o.formats)
            if (x != "csv" && x != "bin" && x != "summary")
                rd.issue("output", "formats", "unknown format '" + x + "' (csv, bin, summary)");
        if (std::find(o.formats.begin(), o.formats.end(), "csv") == o.formats.end())
            rd.issue("output", "formats", "csv is always emitted and must be listed");
    }

    if (!issues.empty()) throw ConfigError(std::move(issues));
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError({"cannot read config file '" + path + "'"});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string triple_to_config(const LevyTriple& t) {
    std::ostringstream os;
    os << "[model]\nkind = levy\nsigma2 = " << csv::num(t.sigma2) << "\nnormalize = false\nm = "
       << csv::num(t.m) << '\n';
    if (const auto* a = std::get_if<AtomicJumps>(&t.nu)) {
        os << "jumps = atoms\natoms = ";
        for (std::size_t i = 0; i < a->atoms.size(); ++i)
            os << (i ? ", " : "") << csv::num(a->atoms[i].x) << ':' << csv::num(a->atoms[i].w);
        os << '\n';
    } else if (const auto* d = std::get_if<DensityJumps>(&t.nu)) {
        if (!d->family || d->cut != 0.0)
            throw ValidationError("triple_to_config: only power-exp densities are serializable");
        const auto& f = *d->family;
        os << "jumps = power-exp\njump_c = " << csv::num(f.c) << "\njump_alpha = " << csv::num(f.alpha)
           << "\njump_rate = " << csv::num(f.rate) << "\njump_upper = " << csv::num(f.upper)
           << "\njump_side = " << f.side << "\njump_eps = " << csv::num(d->eps) << '\n';
    } else {
        os << "jumps = none\n";
    }
    return os.str();
}

LevyTriple triple_from_config(std::string_view text) {
    std::vector<std::string> issues;
    Raw raw = parse_raw(text, issues);
    Reader rd(raw, issues);
    const auto model = parse_model(rd);
    if (model.kind != ModelKind::Levy1D) issues.push_back("model.kind: expected levy");
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return model.triple;
}

}  // namespace mrm
