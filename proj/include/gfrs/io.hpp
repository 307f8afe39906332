#ifndef GFRS_IO_HPP
#define GFRS_IO_HPP

#include "gfrs/metrics.hpp"
#include "gfrs/model.hpp"
#include "gfrs/point_cloud.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace gfrs {

/// Malformed file contents. Messages name the offending line (XYZ) or byte
/// offset (PLY).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One point per line, three whitespace-separated reals; blank lines and
/// '#' comments are skipped. Files with no points are rejected.
PointCloud read_xyz(const std::string& path);

/// Writes 9 significant digits per coordinate.
void write_xyz(const std::string& path, const PointCloud& cloud);

struct PlyContents {
    PointCloud cloud;
    std::optional<TriangleMesh> mesh; // present when the file has faces
};

/// ASCII PLY with a vertex element (x, y, z) and an optional face element.
/// Binary PLY is rejected with "binary PLY unsupported".
PlyContents read_ply(const std::string& path);

void write_ply(const std::string& path, const PointCloud& cloud);
void write_ply(const std::string& path, const TriangleMesh& mesh);

/// Text checkpoint: magic "GFRS", format version, config echo, and every
/// named tensor at 17 significant digits (bit-exact double round-trip).
void save_checkpoint(const std::string& path, const GradientFieldModel& model);

/// Throws ParseError on bad magic, unknown version, or tensor mismatches.
GradientFieldModel load_checkpoint(const std::string& path);

} // namespace gfrs

#endif
