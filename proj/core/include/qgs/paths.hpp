#pragma once

#include <filesystem>

namespace qgs {

/// Root of the shipped data files (materials, line lists, curves, presets).
/// `QGS_DATA_DIR` in the environment overrides it; otherwise the source tree
/// when present, else the installed share/qgs.
std::filesystem::path data_dir();

}  // namespace qgs
