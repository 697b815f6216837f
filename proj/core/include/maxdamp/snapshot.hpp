#pragma once

#include <cstdint>
#include <string>

#include "maxdamp/linalg.hpp"
#include "maxdamp/mesh.hpp"

namespace maxdamp
{

enum class FieldKind
{
  edge,
  face,
  node,
  cell,
};

std::string to_string(FieldKind kind);
FieldKind parse_field_kind(const std::string &name);

/// Sidecar header of a binary snapshot. The payload is `dofs` little-endian
/// IEEE-754 binary64 values in grid order (axis-major, then k, j, i).
struct SnapshotHeader
{
  int schema = 1;
  int n = 0;
  double length = 1.0;
  FieldKind kind = FieldKind::edge;
  std::int64_t dofs = 0;
  double time = 0.0;
  std::string name;
};

/// DoF count of a field kind on a grid.
std::int64_t dof_count(const StaggeredGrid &grid, FieldKind kind);

std::string header_json(const SnapshotHeader &header);
SnapshotHeader parse_header_json(const std::string &text);

/// Writes `<stem>.bin` and `<stem>.json`.
void write_snapshot(const std::string &stem, const SnapshotHeader &header, const Vec &values);

struct Snapshot
{
  SnapshotHeader header;
  Vec values;
};

/// Throws io when the payload length differs from 8 x dofs.
Snapshot read_snapshot(const std::string &stem);

} // namespace maxdamp
