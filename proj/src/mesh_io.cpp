#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "anisoadapt/errors.hpp"
#include "anisoadapt/mesh.hpp"

namespace aniso {

namespace {

// Line-oriented tokenizer that keeps track of the current line for error
// reporting. '#' starts a comment.
class Scanner {
 public:
  explicit Scanner(std::istream& in) : in_(in) {}

  bool next_token(std::string& tok) {
    while (true) {
      if (pos_ >= line_.size()) {
        if (!std::getline(in_, line_)) return false;
        ++line_no_;
        pos_ = 0;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(line_[pos_]))) {
        ++pos_;
        continue;
      }
      if (line_[pos_] == '#') {
        pos_ = line_.size();
        continue;
      }
      size_t start = pos_;
      while (pos_ < line_.size() && !std::isspace(static_cast<unsigned char>(line_[pos_])) )
        ++pos_;
      tok = line_.substr(start, pos_ - start);
      return true;
    }
  }

  int expect_int(const char* what) {
    std::string tok;
    if (!next_token(tok)) throw ParseError(std::string("unexpected end of file reading ") + what, line_no_);
    try {
      size_t used = 0;
      int v = std::stoi(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError(std::string("expected integer for ") + what + ", got '" + tok + "'", line_no_);
    }
  }

  double expect_double(const char* what) {
    std::string tok;
    if (!next_token(tok)) throw ParseError(std::string("unexpected end of file reading ") + what, line_no_);
    try {
      size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError(std::string("expected number for ") + what + ", got '" + tok + "'", line_no_);
    }
  }

  int line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::string line_;
  size_t pos_ = 0;
  int line_no_ = 0;
};

void put_double(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

Mesh read_mesh(std::istream& in) {
  Scanner sc(in);
  Mesh m;
  bool saw_vertices = false, saw_triangles = false;
  std::string tok;
  while (sc.next_token(tok)) {
    if (tok == "Vertices") {
      int n = sc.expect_int("vertex count");
      if (n < 0) throw ParseError("negative vertex count", sc.line_no());
      m.points.resize(n);
      m.point_tags.resize(n);
      for (int i = 0; i < n; ++i) {
        m.points[i].x = sc.expect_double("vertex x");
        m.points[i].y = sc.expect_double("vertex y");
        m.point_tags[i] = sc.expect_int("vertex tag");
      }
      saw_vertices = true;
    } else if (tok == "Triangles") {
      if (!saw_vertices) throw ParseError("Triangles section before Vertices", sc.line_no());
      int n = sc.expect_int("triangle count");
      if (n < 0) throw ParseError("negative triangle count", sc.line_no());
      m.tris.resize(n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) {
          int v = sc.expect_int("triangle vertex");
          if (v < 1 || v > m.vertex_count())
            throw ParseError("triangle vertex index out of range", sc.line_no());
          m.tris[i].v[j] = v - 1;
        }
        m.tris[i].region = sc.expect_int("triangle region");
      }
      saw_triangles = true;
    } else if (tok == "Edges") {
      if (!saw_vertices) throw ParseError("Edges section before Vertices", sc.line_no());
      int n = sc.expect_int("edge count");
      if (n < 0) throw ParseError("negative edge count", sc.line_no());
      m.edges.resize(n);
      for (int i = 0; i < n; ++i) {
        int a = sc.expect_int("edge vertex");
        int b = sc.expect_int("edge vertex");
        if (a < 1 || a > m.vertex_count() || b < 1 || b > m.vertex_count())
          throw ParseError("edge vertex index out of range", sc.line_no());
        m.edges[i] = {a - 1, b - 1, sc.expect_int("edge tag")};
      }
    } else if (tok == "End") {
      break;
    } else if (tok == "MeshVersionFormatted" || tok == "Dimension") {
      sc.expect_int(tok.c_str());  // tolerated interchange headers
    } else {
      throw ParseError("unknown section '" + tok + "'", sc.line_no());
    }
  }
  if (!saw_vertices || !saw_triangles)
    throw ParseError("mesh file lacks a Vertices or Triangles section", sc.line_no());
  normalize_orientation(m);
  return m;
}

Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mesh file '" + path + "'");
  return read_mesh(in);
}

void write_mesh(const Mesh& m, std::ostream& out) {
  out << "Vertices\n" << m.vertex_count() << "\n";
  for (int i = 0; i < m.vertex_count(); ++i) {
    put_double(out, m.points[i].x);
    out << ' ';
    put_double(out, m.points[i].y);
    out << ' ' << (i < static_cast<int>(m.point_tags.size()) ? m.point_tags[i] : 0) << "\n";
  }
  out << "Triangles\n" << m.triangle_count() << "\n";
  for (const auto& t : m.tris)
    out << t.v[0] + 1 << ' ' << t.v[1] + 1 << ' ' << t.v[2] + 1 << ' ' << t.region << "\n";
  out << "Edges\n" << m.edges.size() << "\n";
  for (const auto& e : m.edges) out << e.a + 1 << ' ' << e.b + 1 << ' ' << e.tag << "\n";
  out << "End\n";
}

void write_mesh_file(const Mesh& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  write_mesh(m, out);
}

std::vector<SymMat2> read_metric(std::istream& in) {
  // header: vertex count, optionally followed on the same line by a column
  // count (bamg writes "N 3")
  std::string header;
  int line_no = 0;
  while (std::getline(in, header)) {
    ++line_no;
    size_t hash = header.find('#');
    if (hash != std::string::npos) header.erase(hash);
    if (header.find_first_not_of(" \t\r") != std::string::npos) break;
    header.clear();
  }
  std::istringstream hs(header);
  int n = 0;
  if (!(hs >> n) || n < 0) throw ParseError("bad metric header '" + header + "'", line_no);

  Scanner sc(in);
  std::vector<SymMat2> m(n);
  for (int i = 0; i < n; ++i) {
    m[i].xx = sc.expect_double("m11");
    m[i].xy = sc.expect_double("m12");
    m[i].yy = sc.expect_double("m22");
  }
  return m;
}

std::vector<SymMat2> read_metric_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open metric file '" + path + "'");
  return read_metric(in);
}

void write_metric(const std::vector<SymMat2>& m, std::ostream& out) {
  out << m.size() << " 3\n";
  for (const auto& s : m) {
    put_double(out, s.xx);
    out << ' ';
    put_double(out, s.xy);
    out << ' ';
    put_double(out, s.yy);
    out << "\n";
  }
}

void write_metric_file(const std::vector<SymMat2>& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  write_metric(m, out);
}

std::vector<double> read_field(std::istream& in) {
  Scanner sc(in);
  int n = sc.expect_int("field size");
  if (n < 0) throw ParseError("negative field size", sc.line_no());
  std::vector<double> f(n);
  for (int i = 0; i < n; ++i) f[i] = sc.expect_double("field value");
  return f;
}

void write_field(const std::vector<double>& f, std::ostream& out) {
  out << f.size() << "\n";
  for (double v : f) {
    put_double(out, v);
    out << "\n";
  }
}

void write_field_file(const std::vector<double>& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  write_field(f, out);
}

}  // namespace aniso
