// config.hpp - `key = value` structured-text configuration files
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dfpt/gauges.hpp"
#include "dfpt/groundstate.hpp"
#include "dfpt/model.hpp"
#include "dfpt/sternheimer.hpp"

namespace dfpt {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One `key = value` pair per line, `#` comments, repeated keys allowed.
/// Doubles are parsed bit-exactly from their decimal representations.
class KeyValueFile {
public:
    static KeyValueFile parse_file(const std::string& path);
    static KeyValueFile parse_text(const std::string& text);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key) const;
    long get_long(const std::string& key, long fallback) const;
    std::vector<std::string> get_all(const std::string& key) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// (mode, re, im) triples, e.g. "(1, -0.35, 0) (2, 0.1, 0.05)"
LocalPotential parse_potential_triples(const std::string& text);
std::string format_potential_triples(const LocalPotential& pot);

struct RunConfig {
    double cell_length = 2.0 * 3.14159265358979323846;
    double ecut = 10.0;
    std::vector<LocalPotential> potentials;  // one per channel
    std::vector<double> weights;
    double f_max = 2.0;
    SmearingScheme smearing;
    double n_el = 2.0;
    BandPolicy policy;
    double occ_threshold = 1e-8;
    std::uint64_t seed = 0;
    SternheimerOptions stern;
    GaugeKind gauge = GaugeKind::Minimal;
    double mixing = 0.5;
    double dyson_tol = 1e-8;
    int dyson_max_iter = 200;

    std::vector<HamiltonianChannel> make_channels() const;
};

/// Model-definition keys (cell_length, ecut, potential, weight, f_max) extended
/// with solver keys; `potential`/`weight` may repeat, pairing up channels.
RunConfig load_run_config(const std::string& path);

}  // namespace dfpt
