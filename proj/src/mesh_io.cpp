#include "isa/mesh_io.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

namespace isa {
namespace {

[[noreturn]] void fail(const std::string& name, size_t line, const std::string& what) {
  throw MalformedFileError(name + ":" + std::to_string(line) + ": " + what);
}

struct LineScanner {
  std::istringstream in;
  std::string name;
  size_t line_no = 0;
  std::string current;

  LineScanner(const std::string& text, const std::string& n) : in(text), name(n) {}

  // Next non-empty, non-comment line. Returns false at end of input.
  bool next(char comment) {
    while (std::getline(in, current)) {
      ++line_no;
      if (!current.empty() && current.back() == '\r') current.pop_back();
      const size_t first = current.find_first_not_of(" \t");
      if (first == std::string::npos) continue;
      if (current[first] == comment) continue;
      return true;
    }
    return false;
  }
};

std::vector<std::string> tokenize(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

double parse_real(const std::string& tok, const std::string& name, size_t line) {
  try {
    size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) fail(name, line, "bad number '" + tok + "'");
    return v;
  } catch (const std::exception&) {
    fail(name, line, "bad number '" + tok + "'");
  }
}

long parse_int(const std::string& tok, const std::string& name, size_t line) {
  long v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    fail(name, line, "bad integer '" + tok + "'");
  return v;
}

void add_face(Mesh& mesh, const std::vector<long>& idx, const std::string& name,
              size_t line) {
  if (idx.size() < 3) fail(name, line, "face with fewer than 3 vertices");
  for (long i : idx)
    if (i < 0 || i >= static_cast<long>(mesh.vertices.size()))
      fail(name, line, "vertex index " + std::to_string(i) + " out of range (" +
                           std::to_string(mesh.vertices.size()) + " vertices)");
  for (size_t k = 2; k < idx.size(); ++k)
    mesh.triangles.push_back({static_cast<int>(idx[0]),
                              static_cast<int>(idx[k - 1]),
                              static_cast<int>(idx[k])});
}

}  // namespace

Mesh parse_off(const std::string& text, const std::string& name) {
  LineScanner sc(text, name);
  if (!sc.next('#')) fail(name, 1, "empty OFF file");

  std::string counts_line;
  size_t counts_line_no;
  std::string header = sc.current;
  const size_t first = header.find_first_not_of(" \t");
  header = header.substr(first);
  if (header.rfind("OFF", 0) != 0) fail(name, sc.line_no, "missing OFF header");
  // Some ModelNet files glue the counts to the header ("OFF123 456 0").
  if (header.size() > 3) {
    counts_line = header.substr(3);
    counts_line_no = sc.line_no;
  } else {
    if (!sc.next('#')) fail(name, sc.line_no, "missing element counts");
    counts_line = sc.current;
    counts_line_no = sc.line_no;
  }

  const auto counts = tokenize(counts_line);
  if (counts.size() < 2) fail(name, counts_line_no, "expected vertex/face counts");
  const long n_vertices = parse_int(counts[0], name, counts_line_no);
  const long n_faces = parse_int(counts[1], name, counts_line_no);
  if (n_vertices < 0 || n_faces < 0) fail(name, counts_line_no, "negative counts");

  Mesh mesh;
  mesh.vertices.reserve(n_vertices);
  for (long i = 0; i < n_vertices; ++i) {
    if (!sc.next('#')) fail(name, sc.line_no, "unexpected end of vertex list");
    const auto toks = tokenize(sc.current);
    if (toks.size() < 3) fail(name, sc.line_no, "vertex needs 3 coordinates");
    mesh.vertices.emplace_back(parse_real(toks[0], name, sc.line_no),
                               parse_real(toks[1], name, sc.line_no),
                               parse_real(toks[2], name, sc.line_no));
  }
  for (long i = 0; i < n_faces; ++i) {
    if (!sc.next('#')) fail(name, sc.line_no, "unexpected end of face list");
    const auto toks = tokenize(sc.current);
    if (toks.empty()) fail(name, sc.line_no, "empty face line");
    const long arity = parse_int(toks[0], name, sc.line_no);
    if (arity < 3 || static_cast<size_t>(arity) + 1 > toks.size())
      fail(name, sc.line_no, "face arity does not match vertex list");
    std::vector<long> idx(arity);
    for (long k = 0; k < arity; ++k)
      idx[k] = parse_int(toks[k + 1], name, sc.line_no);
    add_face(mesh, idx, name, sc.line_no);
  }
  return mesh;
}

Mesh parse_obj(const std::string& text, const std::string& name) {
  LineScanner sc(text, name);
  Mesh mesh;
  while (sc.next('#')) {
    const auto toks = tokenize(sc.current);
    if (toks.empty()) continue;
    if (toks[0] == "v") {
      if (toks.size() < 4) fail(name, sc.line_no, "vertex needs 3 coordinates");
      mesh.vertices.emplace_back(parse_real(toks[1], name, sc.line_no),
                                 parse_real(toks[2], name, sc.line_no),
                                 parse_real(toks[3], name, sc.line_no));
    } else if (toks[0] == "f") {
      std::vector<long> idx;
      for (size_t k = 1; k < toks.size(); ++k) {
        // "f v", "f v/vt", "f v/vt/vn", "f v//vn" — only the position index.
        std::string head = toks[k].substr(0, toks[k].find('/'));
        long i = parse_int(head, name, sc.line_no);
        if (i < 0)
          i = static_cast<long>(mesh.vertices.size()) + i;  // relative index
        else
          i -= 1;  // OBJ is 1-based
        idx.push_back(i);
      }
      add_face(mesh, idx, name, sc.line_no);
    }
    // Other directives (vn, vt, usemtl, o, g, s, mtllib) are ignored.
  }
  return mesh;
}

Mesh load_mesh(const std::string& path, double scale) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open mesh file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());

  const auto dot = path.find_last_of('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  for (auto& c : ext) c = static_cast<char>(std::tolower(c));

  Mesh mesh;
  if (ext == "off")
    mesh = parse_off(text, path);
  else if (ext == "obj")
    mesh = parse_obj(text, path);
  else if (text.rfind("OFF", 0) == 0)
    mesh = parse_off(text, path);
  else
    mesh = parse_obj(text, path);

  if (mesh.vertices.empty() || mesh.triangles.empty())
    throw EmptyMeshError("no geometry in: " + path);

  if (scale != 1.0)
    for (auto& v : mesh.vertices) v *= scale;

  const double diag = bounding_box_diagonal(mesh);
  if (diag > 50.0)
    std::cerr << "warning: " << path << " has bounding-box diagonal " << diag
              << " m; if the file is in millimeters pass an explicit rescale\n";
  return mesh;
}

void save_off(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "OFF\n" << mesh.vertices.size() << " " << mesh.triangles.size() << " 0\n";
  out.precision(17);
  for (const auto& v : mesh.vertices)
    out << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& t : mesh.triangles)
    out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  if (!out) throw Error("write failure: " + path);
}

}  // namespace isa
