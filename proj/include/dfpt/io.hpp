// io.hpp - ground-state / response persistence and report tables
#pragma once

#include <string>

#include "dfpt/csv.hpp"
#include "dfpt/groundstate.hpp"
#include "dfpt/response.hpp"

namespace dfpt {

/// Named-array container with bit-exact round-trips; holds basis descriptors,
/// bands, Ritz values, residuals, occupations, Fermi level, smearing
/// parameters and application counters.
void save_groundstate(const std::string& path, const GroundState& gs);
GroundState load_groundstate(const std::string& path);

/// Response container: drho coefficients, deF, metadata and the reports table.
void save_response(const std::string& path, const ResponseResult& r, std::uint64_t seed);

/// Solver reports as a CSV table (one row per solve, one totals row per
/// method; totals rows carry band = -1).
CsvTable reports_to_csv(const std::vector<SolverReport>& reports);

}  // namespace dfpt
