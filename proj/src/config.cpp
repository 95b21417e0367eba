#include "dfpt/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace dfpt {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double_strict(const std::string& s, const std::string& key) {
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw ConfigError("config: key '" + key + "' is not a number: '" + s + "'");
    return v;
}

}  // namespace

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

KeyValueFile KeyValueFile::parse_text(const std::string& text) {
    KeyValueFile f;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) +
                              " is not 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config: empty key on line " + std::to_string(lineno));
        f.entries_.emplace_back(std::move(key), std::move(value));
    }
    return f;
}

bool KeyValueFile::has(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return true;
    return false;
}

std::string KeyValueFile::get_string(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return v;
    throw ConfigError("config: missing key '" + key + "'");
}

std::string KeyValueFile::get_string(const std::string& key,
                                     const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

double KeyValueFile::get_double(const std::string& key) const {
    return parse_double_strict(get_string(key), key);
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long KeyValueFile::get_long(const std::string& key) const {
    const std::string s = get_string(key);
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' is not an integer: '" + s + "'");
    }
    if (pos != s.size())
        throw ConfigError("config: key '" + key + "' is not an integer: '" + s + "'");
    return v;
}

long KeyValueFile::get_long(const std::string& key, long fallback) const {
    return has(key) ? get_long(key) : fallback;
}

std::vector<std::string> KeyValueFile::get_all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_)
        if (k == key) out.push_back(v);
    return out;
}

LocalPotential parse_potential_triples(const std::string& text) {
    // tokens between parentheses/commas/whitespace form (mode, re, im) triples
    std::string cleaned = text;
    for (char& c : cleaned)
        if (c == '(' || c == ')' || c == ',') c = ' ';
    std::istringstream in(cleaned);
    std::vector<std::string> tokens;
    std::string t;
    while (in >> t) tokens.push_back(t);
    if (tokens.size() % 3 != 0)
        throw ConfigError("potential: expected (mode, re, im) triples");
    std::map<int, Complex> coeffs;
    for (std::size_t i = 0; i < tokens.size(); i += 3) {
        int mode = 0;
        try {
            std::size_t pos = 0;
            mode = std::stoi(tokens[i], &pos);
            if (pos != tokens[i].size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ConfigError("potential: bad mode index '" + tokens[i] + "'");
        }
        double re = parse_double_strict(tokens[i + 1], "potential");
        double im = parse_double_strict(tokens[i + 2], "potential");
        coeffs[mode] += Complex(re, im);
    }
    try {
        return LocalPotential(std::move(coeffs));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("potential: ") + e.what());
    }
}

std::string format_potential_triples(const LocalPotential& pot) {
    std::ostringstream out;
    bool first = true;
    for (const auto& [m, c] : pot.coeffs()) {
        if (!first) out << ' ';
        first = false;
        char buf[96];
        std::snprintf(buf, sizeof(buf), "(%d, %.17g, %.17g)", m, c.real(), c.imag());
        out << buf;
    }
    return out.str();
}

std::vector<HamiltonianChannel> RunConfig::make_channels() const {
    std::vector<HamiltonianChannel> out;
    PlaneWaveBasis basis(cell_length, ecut);
    for (std::size_t i = 0; i < potentials.size(); ++i)
        out.emplace_back(basis, potentials[i], weights[i], f_max);
    return out;
}

RunConfig load_run_config(const std::string& path) {
    KeyValueFile f = KeyValueFile::parse_file(path);
    RunConfig cfg;
    cfg.cell_length = f.get_double("cell_length");
    cfg.ecut = f.get_double("ecut");
    cfg.f_max = f.get_double("f_max", 2.0);

    auto pots = f.get_all("potential");
    auto weights = f.get_all("weight");
    if (pots.empty()) pots.push_back("");
    for (const auto& p : pots)
        cfg.potentials.push_back(p.empty() ? LocalPotential() : parse_potential_triples(p));
    if (weights.empty()) {
        cfg.weights.assign(cfg.potentials.size(), 1.0 / cfg.potentials.size());
    } else {
        if (weights.size() != cfg.potentials.size())
            throw ConfigError("config: weight/potential counts differ");
        for (const auto& w : weights)
            cfg.weights.push_back(parse_double_strict(w, "weight"));
    }

    std::string kind = f.get_string("smearing", "fermi-dirac");
    if (kind == "fermi-dirac")
        cfg.smearing.kind = SmearingKind::FermiDirac;
    else if (kind == "gaussian")
        cfg.smearing.kind = SmearingKind::Gaussian;
    else
        throw ConfigError("config: unknown smearing '" + kind + "'");
    cfg.smearing.temperature = f.get_double("temperature", 1e-2);
    cfg.n_el = f.get_double("n_el", 2.0);
    cfg.policy.n_conv = static_cast<int>(f.get_long("n_conv", 0));
    cfg.policy.n_ex = static_cast<int>(f.get_long("n_ex", 3));
    cfg.policy.eig_tol = f.get_double("eig_tol", 1e-10);
    cfg.policy.max_iter = static_cast<int>(f.get_long("eig_max_iter", 500));
    cfg.occ_threshold = f.get_double("occ_threshold", 1e-8);
    cfg.seed = static_cast<std::uint64_t>(f.get_long("seed", 0));
    cfg.stern.tol = f.get_double("tol", 1e-9);
    cfg.stern.max_iter = static_cast<int>(f.get_long("max_iter", 5000));
    cfg.stern.precond_shift = f.get_double("precond_shift", 1.0);
    try {
        cfg.stern.method = sternheimer_method_from_string(f.get_string("method", "schur"));
        cfg.gauge = gauge_from_string(f.get_string("gauge", "min"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.mixing = f.get_double("mixing", 0.5);
    cfg.dyson_tol = f.get_double("dyson_tol", 1e-8);
    cfg.dyson_max_iter = static_cast<int>(f.get_long("dyson_max_iter", 200));
    return cfg;
}

}  // namespace dfpt
