#pragma once

#include "premia/errors.hpp"
#include "premia/panel_data.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace premia {

enum ExitCode : int {
    exit_ok = 0,
    exit_internal = 1,
    exit_io = 2,
    exit_identification = 3,
    exit_config = 4,
};

int exit_code_for(ErrorKind kind) noexcept;

/// Returns, factors (risk-free removed, momentum appended when given) on a
/// common period grid.
struct LoadedData {
    ReturnsPanel returns;
    FactorPanel factors;
};

struct InputPaths {
    std::filesystem::path returns;
    std::filesystem::path factors;
    std::optional<std::filesystem::path> riskfree;
    std::optional<std::filesystem::path> momentum;
    int block = 0;
};

/// Reads either the canonical CSV layout or a French-library file.
RawTable read_table(const std::filesystem::path& path, int block = 0);
LoadedData load_inputs(const InputPaths& paths);

/// Entry point shared by the binary and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace premia
