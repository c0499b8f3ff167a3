#include "qgs/paths.hpp"

#include <cstdlib>

#ifndef QGS_DATA_DIR_DEFAULT
#define QGS_DATA_DIR_DEFAULT "data"
#endif

namespace qgs {

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("QGS_DATA_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  // The source tree while developing, the installed copy otherwise.
  const std::filesystem::path source_tree = QGS_DATA_DIR_DEFAULT;
  if (std::filesystem::is_directory(source_tree / "presets")) return source_tree;
  return QGS_DATA_DIR_INSTALLED;
}

}  // namespace qgs
