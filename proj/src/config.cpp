#include "entroflow/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace entroflow {

namespace {

struct RawValue {
    enum class Kind { Scalar, List } kind = Kind::Scalar;
    std::string scalar;
    std::vector<std::string> list;
    int line = 0, col = 0;
};

using Section = std::map<std::string, RawValue>;
using Tree = std::map<std::string, Section>;

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::string strip(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && is_space(s[a])) ++a;
    while (b > a && is_space(s[b - 1])) --b;
    return s.substr(a, b - a);
}

/// removes a trailing comment that is not inside a quoted string
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

std::string unquote(const std::string& s, int line, int col) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    if (!s.empty() && (s.front() == '"' || s.back() == '"'))
        throw ConfigError("unterminated string", line, col);
    return s;
}

Tree parse_tree(const std::string& text) {
    Tree tree;
    std::string section = "";
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = strip(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("malformed section header", line_no, 1);
            section = strip(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError("empty section name", line_no, 2);
            tree[section];
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value", line_no, 1);
        const std::string key = strip(line.substr(0, eq));
        std::string value = strip(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line_no, 1);
        if (value.empty())
            throw ConfigError("missing value for key '" + key + "'", line_no,
                              static_cast<int>(eq + 2));

        RawValue rv;
        rv.line = line_no;
        rv.col = static_cast<int>(eq + 2);
        if (value.front() == '[') {
            if (value.back() != ']')
                throw ConfigError("unterminated list for key '" + key + "'", line_no, rv.col);
            rv.kind = RawValue::Kind::List;
            std::string inner = value.substr(1, value.size() - 2);
            std::string item;
            bool quoted = false;
            for (char c : inner) {
                if (c == '"') quoted = !quoted;
                if (c == ',' && !quoted) {
                    const std::string t = strip(item);
                    if (!t.empty()) rv.list.push_back(unquote(t, line_no, rv.col));
                    item.clear();
                } else {
                    item += c;
                }
            }
            const std::string t = strip(item);
            if (!t.empty()) rv.list.push_back(unquote(t, line_no, rv.col));
        } else {
            rv.scalar = unquote(value, line_no, rv.col);
        }
        if (tree[section].count(key))
            throw ConfigError("duplicate key '" + key + "'", line_no, 1);
        tree[section][key] = rv;
    }
    return tree;
}

/// strict typed readers; every consumed key is crossed off so leftovers
/// can be rejected
class SectionReader {
public:
    SectionReader(const Tree& tree, const std::string& name) : name_(name) {
        auto it = tree.find(name);
        if (it != tree.end()) section_ = &it->second;
    }

    bool present() const { return section_ != nullptr; }

    double number(const std::string& key, double fallback) {
        const RawValue* rv = take(key);
        if (!rv) return fallback;
        return to_number(*rv, key);
    }
    int integer(const std::string& key, int fallback) {
        const RawValue* rv = take(key);
        if (!rv) return fallback;
        const double v = to_number(*rv, key);
        if (v != std::floor(v))
            throw ConfigError("key '" + key + "' expects an integer", rv->line, rv->col);
        return static_cast<int>(v);
    }
    std::uint64_t u64(const std::string& key, std::uint64_t fallback) {
        const RawValue* rv = take(key);
        if (!rv) return fallback;
        try {
            return std::stoull(rv->scalar);
        } catch (...) {
            throw ConfigError("key '" + key + "' expects an unsigned integer", rv->line, rv->col);
        }
    }
    bool boolean(const std::string& key, bool fallback) {
        const RawValue* rv = take(key);
        if (!rv) return fallback;
        if (rv->scalar == "true") return true;
        if (rv->scalar == "false") return false;
        throw ConfigError("key '" + key + "' expects true or false", rv->line, rv->col);
    }
    std::string text(const std::string& key, const std::string& fallback) {
        const RawValue* rv = take(key);
        if (!rv) return fallback;
        return rv->scalar;
    }
    std::vector<std::string> strings(const std::string& key, std::vector<std::string> fallback) {
        const RawValue* rv = take(key);
        if (!rv) return fallback;
        if (rv->kind != RawValue::Kind::List)
            throw ConfigError("key '" + key + "' expects a list", rv->line, rv->col);
        return rv->list;
    }
    std::vector<int> integers(const std::string& key, std::vector<int> fallback) {
        const RawValue* rv = take(key);
        if (!rv) return fallback;
        if (rv->kind != RawValue::Kind::List)
            throw ConfigError("key '" + key + "' expects a list", rv->line, rv->col);
        std::vector<int> out;
        for (const auto& s : rv->list) out.push_back(parse_int(s, *rv, key));
        return out;
    }
    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
        const RawValue* rv = take(key);
        if (!rv) return fallback;
        if (rv->kind != RawValue::Kind::List)
            throw ConfigError("key '" + key + "' expects a list", rv->line, rv->col);
        std::vector<double> out;
        for (const auto& s : rv->list) out.push_back(parse_double(s, *rv, key));
        return out;
    }

    void finish() const {
        if (!section_) return;
        for (const auto& [key, rv] : *section_)
            if (!consumed_.count(key))
                throw ConfigError("unknown key '" + key + "' in section [" + name_ + "]", rv.line,
                                  1);
    }

private:
    const RawValue* take(const std::string& key) {
        if (!section_) return nullptr;
        auto it = section_->find(key);
        if (it == section_->end()) return nullptr;
        consumed_.insert(key);
        return &it->second;
    }
    static double parse_double(const std::string& s, const RawValue& rv, const std::string& key) {
        try {
            size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument("trail");
            return v;
        } catch (...) {
            throw ConfigError("key '" + key + "' has a malformed number '" + s + "'", rv.line,
                              rv.col);
        }
    }
    static int parse_int(const std::string& s, const RawValue& rv, const std::string& key) {
        const double v = parse_double(s, rv, key);
        if (v != std::floor(v))
            throw ConfigError("key '" + key + "' expects integers", rv.line, rv.col);
        return static_cast<int>(v);
    }
    double to_number(const RawValue& rv, const std::string& key) {
        if (rv.kind != RawValue::Kind::Scalar)
            throw ConfigError("key '" + key + "' expects a scalar", rv.line, rv.col);
        return parse_double(rv.scalar, rv, key);
    }

    std::string name_;
    const Section* section_ = nullptr;
    std::set<std::string> consumed_;
};

InitialSpec read_initial(const Tree& tree, const std::string& section, bool& present) {
    SectionReader r(tree, section);
    present = r.present();
    InitialSpec spec;
    spec.kind = r.text("kind", spec.kind);
    spec.amplitude = r.number("amplitude", spec.amplitude);
    spec.offset = r.number("offset", spec.offset);
    spec.freq = r.number("freq", spec.freq);
    spec.width = r.number("width", spec.width);
    spec.center = r.number("center", spec.center);
    r.finish();
    if (spec.kind != "cosine" && spec.kind != "bump" && spec.kind != "constant")
        throw ConfigError("unknown initial profile kind '" + spec.kind + "' in [" + section + "]");
    return spec;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    const Tree tree = parse_tree(text);

    static const std::set<std::string> known_sections = {
        "run",        "nonlinearity",        "grid",
        "time",       "noise",               "flux",
        "bounds",     "initial",             "initial_b",
        "ensemble",   "experiments",         "mcf",
        "experiment.contraction", "experiment.moments", "experiment.entropy",
        "experiment.fracreg",     "experiment.phistab"};
    for (const auto& [name, _] : tree)
        if (!name.empty() && !known_sections.count(name))
            throw ConfigError("unknown section [" + name + "]");

    RunConfig cfg;

    SectionReader run(tree, "run");
    cfg.equation = run.text("equation", cfg.equation);
    cfg.out_dir = run.text("out_dir", cfg.out_dir);
    cfg.jobs = run.integer("jobs", cfg.jobs);
    cfg.write_csv = run.boolean("write_csv", cfg.write_csv);
    cfg.write_svg = run.boolean("write_svg", cfg.write_svg);
    run.finish();
    if (cfg.equation != "pme" && cfg.equation != "mcf" && cfg.equation != "custom")
        throw ConfigError("equation must be pme, mcf or custom");

    SectionReader nl(tree, "nonlinearity");
    cfg.family = nl.text("family", cfg.family);
    cfg.m = nl.number("m", cfg.m);
    cfg.K = nl.number("K", cfg.K);
    cfg.n = nl.integer("n", cfg.n);
    nl.finish();

    SectionReader grid(tree, "grid");
    cfg.dim = grid.integer("dim", cfg.dim);
    cfg.M = grid.integer("M", cfg.M);
    grid.finish();
    if (cfg.dim != 1 && cfg.dim != 2) throw ConfigError("grid dim must be 1 or 2");
    if (cfg.M < 8) throw ConfigError("grid M must be at least 8");

    SectionReader time(tree, "time");
    cfg.dt = time.number("dt", cfg.dt);
    cfg.T = time.number("T", cfg.T);
    cfg.cfl_safety = time.number("cfl_safety", cfg.cfl_safety);
    cfg.snapshots = time.integer("snapshots", cfg.snapshots);
    time.finish();
    if (cfg.T <= 0.0) throw ConfigError("T must be positive");
    if (cfg.cfl_safety <= 0.0 || cfg.cfl_safety >= 1.0)
        throw ConfigError("cfl_safety must lie in (0,1)");

    SectionReader noise(tree, "noise");
    cfg.seed = noise.u64("seed", cfg.seed);
    cfg.radial = noise.text("radial", cfg.radial);
    cfg.amplitude = noise.number("amplitude", cfg.amplitude);
    cfg.modes = noise.strings("modes", cfg.modes);
    noise.finish();

    SectionReader flux(tree, "flux");
    cfg.flux_terms = flux.strings("terms", cfg.flux_terms);
    flux.finish();

    SectionReader bounds(tree, "bounds");
    cfg.N0 = bounds.number("N0", cfg.N0);
    cfg.N1 = bounds.number("N1", cfg.N1);
    cfg.kappa_bar = bounds.number("kappa_bar", cfg.kappa_bar);
    cfg.beta = bounds.number("beta", cfg.beta);
    cfg.beta_tilde = bounds.number("beta_tilde", cfg.beta_tilde);
    bounds.finish();

    bool present = false;
    if (tree.count("initial")) cfg.initial = read_initial(tree, "initial", present);
    cfg.initial_b = read_initial(tree, "initial_b", cfg.has_initial_b);

    SectionReader ens(tree, "ensemble");
    cfg.count = ens.integer("count", cfg.count);
    ens.finish();
    if (cfg.count < 1) throw ConfigError("ensemble count must be at least 1");

    SectionReader exps(tree, "experiments");
    cfg.experiments = exps.strings("run", cfg.experiments);
    exps.finish();
    static const std::set<std::string> known_exps = {"contraction", "moments",  "entropy",
                                                     "fracreg",     "phistab", "mcf-consistency"};
    for (const auto& e : cfg.experiments)
        if (!known_exps.count(e)) throw ConfigError("unknown experiment '" + e + "'");

    SectionReader mcf(tree, "mcf");
    cfg.mcf_n = mcf.integer("n", cfg.mcf_n);
    cfg.mcf_modes = mcf.strings("h_modes", cfg.mcf_modes);
    mcf.finish();

    SectionReader ec(tree, "experiment.contraction");
    cfg.c_hat_limit = ec.number("c_hat_limit", cfg.c_hat_limit);
    ec.finish();

    SectionReader em(tree, "experiment.moments");
    cfg.moment_n = em.integers("n_list", cfg.moment_n);
    cfg.moment_M = em.integers("M_list", cfg.moment_M);
    cfg.moment_count = em.integer("count", cfg.moment_count);
    em.finish();

    SectionReader ee(tree, "experiment.entropy");
    cfg.entropy_M = ee.integers("M_list", cfg.entropy_M);
    cfg.entropy_delta0 = ee.number("delta0", cfg.entropy_delta0);
    cfg.entropy_count = ee.integer("count", cfg.entropy_count);
    cfg.entropy_T = ee.number("T", cfg.entropy_T);
    ee.finish();

    SectionReader ef(tree, "experiment.fracreg");
    cfg.fracreg_eps_over_h = ef.numbers("eps_over_h", cfg.fracreg_eps_over_h);
    cfg.fracreg_count = ef.integer("count", cfg.fracreg_count);
    ef.finish();

    SectionReader ep(tree, "experiment.phistab");
    cfg.phistab_n = ep.integers("n_list", cfg.phistab_n);
    cfg.phistab_count = ep.integer("count", cfg.phistab_count);
    ep.finish();

    // the CFL validity of a configured dt is checked in build_solver_config,
    // where the budget is known
    if (cfg.dt > 0.0) build_solver_config(cfg);
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

GridFunction build_initial(const InitialSpec& spec, int dim, int M) {
    if (spec.kind == "constant")
        return GridFunction(dim, M, spec.offset);
    if (spec.kind == "cosine") {
        return GridFunction::sample(dim, M, [&](double x, double y) {
            double v = std::cos(kTwoPi * spec.freq * x);
            if (dim == 2) v *= std::cos(kTwoPi * spec.freq * y);
            return spec.offset + spec.amplitude * v;
        });
    }
    // smooth compactly supported bump
    auto bump1 = [&](double x) {
        double d = std::abs(x - spec.center);
        d = std::min(d, 1.0 - d);
        const double s = d / spec.width;
        if (s >= 1.0) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - s * s));
    };
    return GridFunction::sample(dim, M, [&](double x, double y) {
        double v = bump1(x);
        if (dim == 2) v *= bump1(y);
        return spec.offset + spec.amplitude * v;
    });
}

NoiseMode parse_mode_spec(const std::string& spec, double amp, int dim) {
    (void)dim;
    NoiseMode mode;
    SpatialProfile p = profile_const(amp);
    if (spec == "const") {
        // keep the constant profile
    } else {
        const size_t colon = spec.find(':');
        if (colon == std::string::npos)
            throw ConfigError("malformed mode spec '" + spec + "' (want const, cos:k or sin:k)");
        const std::string kind = spec.substr(0, colon);
        double freq = 0.0;
        try {
            freq = std::stod(spec.substr(colon + 1));
        } catch (...) {
            throw ConfigError("malformed mode frequency in '" + spec + "'");
        }
        if (kind == "cos")
            p.axes[0] = wave_cos(freq);
        else if (kind == "sin")
            p.axes[0] = wave_sin(freq);
        else
            throw ConfigError("unknown mode kind '" + kind + "' in '" + spec + "'");
    }
    mode.h[0] = p;
    return mode;
}

CoefficientSet build_coefficients(const RunConfig& cfg) {
    std::vector<NoiseMode> modes;
    for (const auto& s : cfg.modes) modes.push_back(parse_mode_spec(s, cfg.amplitude, cfg.dim));

    std::array<std::vector<FluxTerm>, 2> flux;
    for (const auto& s : cfg.flux_terms) {
        const size_t colon = s.find(':');
        if (colon == std::string::npos)
            throw ConfigError("malformed flux term '" + s + "' (want radial:amp)");
        FluxTerm term;
        term.q.kind = radial_kind_from_name(s.substr(0, colon));
        double amp = 1.0;
        try {
            amp = std::stod(s.substr(colon + 1));
        } catch (...) {
            throw ConfigError("malformed flux amplitude in '" + s + "'");
        }
        term.q.scale = amp;
        term.w = profile_const(1.0);
        flux[0].push_back(term);
    }

    CoefficientBounds bounds{cfg.N0, cfg.N1, cfg.kappa_bar, cfg.beta, cfg.beta_tilde};
    RadialProfile radial{radial_kind_from_name(cfg.radial), 1.0};
    return CoefficientSet(cfg.dim, radial, std::move(modes), std::move(flux), bounds);
}

NonlinearityFamily build_family(const RunConfig& cfg) {
    return family_from_name(cfg.family, cfg.m, cfg.K);
}

double snap_time_step(double t_final, double budget) {
    double dt = t_final;
    while (dt > budget) dt *= 0.5;
    return dt;
}

SolverConfig build_solver_config(const RunConfig& cfg, int n_override, int M_override,
                                 double T_override) {
    const int n = n_override > 0 ? n_override : cfg.n;
    const int M = M_override > 0 ? M_override : cfg.M;
    const double T = T_override > 0.0 ? T_override : cfg.T;

    SolverConfig sc;
    if (cfg.equation == "mcf")
        sc.nonlinearity = mcf_regularize(n);
    else
        sc.nonlinearity = regularize(build_family(cfg), n);
    sc.coeffs = build_coefficients(cfg);
    sc.t_final = T;
    sc.cfl_safety = cfg.cfl_safety;

    // budget probed at the truncation range
    sc.dt = 1.0;
    const double budget = cfl_budget(sc, M, cfg.dim, std::max(2.0, static_cast<double>(n)));
    if (cfg.dt > 0.0) {
        if (cfg.dt > budget) {
            std::ostringstream os;
            os << "configured dt = " << cfg.dt << " violates the stability budget " << budget
               << " (cfl_safety * h^2 / (2 d sup|Phi_n'| + d^2 sup|a|)) at M = " << M
               << ", n = " << n;
            throw ConfigError(os.str());
        }
        sc.dt = cfg.dt;
    } else {
        sc.dt = snap_time_step(T, budget);
    }

    sc.snapshot_times.clear();
    for (int i = 1; i <= cfg.snapshots; ++i)
        sc.snapshot_times.push_back(T * i / static_cast<double>(cfg.snapshots));
    return sc;
}

}  // namespace entroflow
