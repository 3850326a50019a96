#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "lrll/linalg.hpp"
#include "lrll/objective.hpp"

namespace lrll::cli {

/// Entry point of the `lrll` tool. Exit codes: 0 success, 1 input error
/// (including unknown flags), 2 numerical failure (divergence, capacity).
int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

/// "n=30,m=30,r=3,p=900"; m defaults to n.
struct SensingSpec {
  Index n = 0;
  Index m = 0;
  Index r = 0;
  Index p = 0;
};
SensingSpec parse_sensing_spec(const std::string& text);

/// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

/// Sensing ensembles are stored as a JSON header plus a CSV payload.
///
/// Header (`<name>.json`): {"schema": "lrll.ensemble/1", "n", "m", "p",
/// "seed", "scale", "rank", "mstar", "payload"}. Scalars are decimal strings;
/// "mstar" (optional) is an array of rows; "payload" is the CSV file name,
/// relative to the header.
///
/// Payload (`<name>.csv`): header row `b,a0,a1,...,a{nm-1}`, then one row per
/// measurement holding b_i and vec(A_i) in column-major order, so entry k is
/// A_i(k mod n, k div n). Values use shortest round-trip formatting, which
/// makes save/load bit-exact.
void write_ensemble(const std::filesystem::path& header,
                    const SensingEnsemble& ensemble,
                    std::optional<Index> rank = std::nullopt);
SensingEnsemble read_ensemble(const std::filesystem::path& header);

}  // namespace lrll::cli
