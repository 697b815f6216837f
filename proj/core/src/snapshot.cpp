#include "maxdamp/snapshot.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "maxdamp/errors.hpp"

namespace maxdamp
{

namespace
{

std::uint64_t to_little(std::uint64_t x)
{
  if constexpr (std::endian::native == std::endian::big)
  {
    std::uint64_t y = 0;
    for (int i = 0; i < 8; ++i)
      y |= ((x >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return y;
  }
  return x;
}

} // namespace

std::string to_string(FieldKind kind)
{
  switch (kind)
  {
  case FieldKind::edge: return "edge";
  case FieldKind::face: return "face";
  case FieldKind::node: return "node";
  case FieldKind::cell: return "cell";
  }
  return "edge";
}

FieldKind parse_field_kind(const std::string &name)
{
  if (name == "edge")
    return FieldKind::edge;
  if (name == "face")
    return FieldKind::face;
  if (name == "node")
    return FieldKind::node;
  if (name == "cell")
    return FieldKind::cell;
  throw Error(ErrorKind::invalid_parameter, "unknown field kind '" + name + "'");
}

std::int64_t dof_count(const StaggeredGrid &grid, FieldKind kind)
{
  switch (kind)
  {
  case FieldKind::edge: return grid.num_edges();
  case FieldKind::face: return grid.num_faces();
  case FieldKind::node: return grid.nodes;
  case FieldKind::cell: return grid.cells;
  }
  return 0;
}

std::string header_json(const SnapshotHeader &h)
{
  nlohmann::ordered_json j;
  j["schema"] = h.schema;
  j["name"] = h.name;
  j["grid"] = {{"n", h.n}, {"length", h.length}};
  j["field_kind"] = to_string(h.kind);
  j["dofs"] = h.dofs;
  j["time"] = h.time;
  j["byte_order"] = "little-endian";
  j["scalar_width"] = 8;
  j["dof_order"] = "axis-major, then k, j, i";
  return j.dump(2);
}

SnapshotHeader parse_header_json(const std::string &text)
{
  try
  {
    const auto j = nlohmann::json::parse(text);
    if (j.at("byte_order").get<std::string>() != "little-endian" || j.at("scalar_width").get<int>() != 8)
      throw Error(ErrorKind::io, "snapshot header declares an unsupported scalar layout");
    SnapshotHeader h;
    h.schema = j.at("schema").get<int>();
    h.name = j.value("name", std::string{});
    h.n = j.at("grid").at("n").get<int>();
    h.length = j.at("grid").at("length").get<double>();
    h.kind = parse_field_kind(j.at("field_kind").get<std::string>());
    h.dofs = j.at("dofs").get<std::int64_t>();
    h.time = j.at("time").get<double>();
    return h;
  }
  catch (const nlohmann::json::exception &e)
  {
    throw Error(ErrorKind::io, std::string("malformed snapshot header: ") + e.what());
  }
}

void write_snapshot(const std::string &stem, const SnapshotHeader &header, const Vec &values)
{
  if (values.size() != header.dofs)
    throw Error(ErrorKind::shape, "snapshot payload length differs from the declared DoF count");
  std::ofstream bin(stem + ".bin", std::ios::binary);
  if (!bin)
    throw Error(ErrorKind::io, "cannot write '" + stem + ".bin'");
  for (Eigen::Index i = 0; i < values.size(); ++i)
  {
    std::uint64_t bits = 0;
    const double v = values[i];
    std::memcpy(&bits, &v, 8);
    bits = to_little(bits);
    bin.write(reinterpret_cast<const char *>(&bits), 8);
  }
  std::ofstream js(stem + ".json");
  if (!js)
    throw Error(ErrorKind::io, "cannot write '" + stem + ".json'");
  js << header_json(header) << '\n';
}

Snapshot read_snapshot(const std::string &stem)
{
  std::ifstream js(stem + ".json");
  if (!js)
    throw Error(ErrorKind::io, "cannot read '" + stem + ".json'");
  std::stringstream ss;
  ss << js.rdbuf();
  Snapshot out;
  out.header = parse_header_json(ss.str());

  std::ifstream bin(stem + ".bin", std::ios::binary | std::ios::ate);
  if (!bin)
    throw Error(ErrorKind::io, "cannot read '" + stem + ".bin'");
  const auto bytes = static_cast<std::int64_t>(bin.tellg());
  if (bytes != 8 * out.header.dofs)
    throw Error(ErrorKind::io, "payload holds " + std::to_string(bytes) + " bytes, header declares " +
                                   std::to_string(out.header.dofs) + " values");
  bin.seekg(0);
  out.values.resize(out.header.dofs);
  for (std::int64_t i = 0; i < out.header.dofs; ++i)
  {
    std::uint64_t bits = 0;
    bin.read(reinterpret_cast<char *>(&bits), 8);
    bits = to_little(bits);
    double v = 0.0;
    std::memcpy(&v, &bits, 8);
    out.values[i] = v;
  }
  return out;
}

} // namespace maxdamp
