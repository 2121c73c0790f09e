#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace ehl {

using Point = std::array<double, 2>;

class MeshError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Axis-aligned box partitioned into a structured tensor grid.
struct DomainSpec {
  int dim = 1;
  std::array<double, 2> lower{0.0, 0.0};
  std::array<double, 2> upper{1.0, 1.0};
  std::array<int, 2> cells{1, 1};

  void validate() const {
    if (dim != 1 && dim != 2) throw MeshError("domain dimension must be 1 or 2");
    for (int a = 0; a < dim; ++a) {
      if (!(lower[a] < upper[a])) throw MeshError("domain bounds must satisfy lower < upper on axis " + std::to_string(a));
      if (cells[a] < 1) throw MeshError("domain needs at least one cell on axis " + std::to_string(a));
    }
  }
};

struct Cell {
  Point lower{0.0, 0.0};
  Point upper{0.0, 0.0};
  int degree = 1;

  [[nodiscard]] double extent(int axis) const { return upper[axis] - lower[axis]; }
};

/// A face between `left` and `right` (or the domain boundary when right < 0).
/// The face is orthogonal to `axis`; `normal_sign` gives the direction of the
/// unit normal exterior to the left element (+1 or -1 along `axis`).
struct Face {
  int left = -1;
  int right = -1;
  int axis = 0;
  int normal_sign = 1;
  double position = 0.0;         // coordinate along `axis`
  double span_lower = 0.0;       // extent along the tangential axis (2D)
  double span_upper = 0.0;
  double measure = 0.0;          // |e_k| entering the stabilization weight

  [[nodiscard]] bool boundary() const { return right < 0; }
  [[nodiscard]] double normal_left() const { return normal_sign; }
  [[nodiscard]] double normal_right() const { return -normal_sign; }
};

class Mesh {
 public:
  Mesh() = default;

  /// Builds a structured mesh with a uniform polynomial degree.
  static Mesh build(const DomainSpec& spec, int degree) {
    spec.validate();
    const int count = spec.cells[0] * (spec.dim == 2 ? spec.cells[1] : 1);
    return build(spec, std::vector<int>(static_cast<std::size_t>(count), degree));
  }

  /// Builds a structured mesh with a per-element polynomial degree
  /// (element index = iy * nx + ix).
  static Mesh build(const DomainSpec& spec, const std::vector<int>& degrees) {
    spec.validate();
    Mesh m;
    m.spec_ = spec;
    const int nx = spec.cells[0];
    const int ny = spec.dim == 2 ? spec.cells[1] : 1;
    if (static_cast<int>(degrees.size()) != nx * ny) throw MeshError("degree list does not match element count");
    for (int d : degrees) {
      if (d < 1) throw MeshError("polynomial degree must be >= 1");
    }
    auto node = [&](int axis, int i) {
      const int n = spec.cells[axis];
      if (i == 0) return spec.lower[axis];
      if (i == n) return spec.upper[axis];
      return spec.lower[axis] + (spec.upper[axis] - spec.lower[axis]) * (static_cast<double>(i) / n);
    };
    m.cells_.reserve(static_cast<std::size_t>(nx * ny));
    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix < nx; ++ix) {
        Cell c;
        c.lower = {node(0, ix), spec.dim == 2 ? node(1, iy) : 0.0};
        c.upper = {node(0, ix + 1), spec.dim == 2 ? node(1, iy + 1) : 0.0};
        c.degree = degrees[static_cast<std::size_t>(iy * nx + ix)];
        m.cells_.push_back(c);
      }
    }
    if (spec.dim == 1) {
      m.build_faces_1d();
    } else {
      m.build_faces_2d();
    }
    return m;
  }

  /// Splits every cell in half along each axis; children inherit the degree.
  [[nodiscard]] Mesh refine_uniform() const {
    DomainSpec fine = spec_;
    const int nx = spec_.cells[0];
    fine.cells[0] *= 2;
    if (spec_.dim == 2) fine.cells[1] *= 2;
    const int fnx = fine.cells[0];
    const int fny = spec_.dim == 2 ? fine.cells[1] : 1;
    std::vector<int> degrees(static_cast<std::size_t>(fnx * fny));
    for (int iy = 0; iy < fny; ++iy) {
      for (int ix = 0; ix < fnx; ++ix) {
        const int parent = (spec_.dim == 2 ? iy / 2 : 0) * nx + ix / 2;
        degrees[static_cast<std::size_t>(iy * fnx + ix)] = cells_[static_cast<std::size_t>(parent)].degree;
      }
    }
    return build(fine, degrees);
  }

  [[nodiscard]] int dim() const { return spec_.dim; }
  [[nodiscard]] const DomainSpec& spec() const { return spec_; }
  [[nodiscard]] int num_elements() const { return static_cast<int>(cells_.size()); }
  [[nodiscard]] int num_faces() const { return static_cast<int>(faces_.size()); }
  [[nodiscard]] const std::vector<Cell>& elements() const { return cells_; }
  [[nodiscard]] const Cell& element(int i) const { return cells_.at(static_cast<std::size_t>(i)); }
  [[nodiscard]] const std::vector<Face>& faces() const { return faces_; }
  [[nodiscard]] const Face& face(int k) const { return faces_.at(static_cast<std::size_t>(k)); }

  /// Element diameter h_i (length in 1D, diagonal in 2D).
  [[nodiscard]] double element_size(int i) const {
    const Cell& c = element(i);
    if (dim() == 1) return c.extent(0);
    return std::hypot(c.extent(0), c.extent(1));
  }

  [[nodiscard]] double element_measure(int i) const {
    const Cell& c = element(i);
    return dim() == 1 ? c.extent(0) : c.extent(0) * c.extent(1);
  }

  [[nodiscard]] double max_element_size() const {
    double h = 0.0;
    for (int i = 0; i < num_elements(); ++i) h = std::max(h, element_size(i));
    return h;
  }

  [[nodiscard]] double domain_measure() const {
    double m = spec_.upper[0] - spec_.lower[0];
    if (dim() == 2) m *= spec_.upper[1] - spec_.lower[1];
    return m;
  }

  /// Face polynomial degree: max of the adjacent element degrees.
  [[nodiscard]] int face_degree(const Face& f) const {
    int p = element(f.left).degree;
    if (!f.boundary()) p = std::max(p, element(f.right).degree);
    return p;
  }

  [[nodiscard]] bool same_layout(const Mesh& other) const {
    if (num_elements() != other.num_elements() || dim() != other.dim()) return false;
    for (int i = 0; i < num_elements(); ++i) {
      const Cell& a = cells_[static_cast<std::size_t>(i)];
      const Cell& b = other.cells_[static_cast<std::size_t>(i)];
      if (a.lower != b.lower || a.upper != b.upper || a.degree != b.degree) return false;
    }
    return true;
  }

 private:
  void build_faces_1d() {
    const int n = spec_.cells[0];
    faces_.clear();
    faces_.reserve(static_cast<std::size_t>(n + 1));
    // Left boundary face: exterior normal of element 0 points in -x.
    {
      Face f;
      f.left = 0;
      f.axis = 0;
      f.normal_sign = -1;
      f.position = cells_[0].lower[0];
      f.measure = cells_[0].extent(0);
      faces_.push_back(f);
    }
    for (int i = 0; i + 1 < n; ++i) {
      Face f;
      f.left = i;
      f.right = i + 1;
      f.axis = 0;
      f.normal_sign = 1;
      f.position = cells_[static_cast<std::size_t>(i)].upper[0];
      f.measure = std::min(cells_[static_cast<std::size_t>(i)].extent(0), cells_[static_cast<std::size_t>(i + 1)].extent(0));
      faces_.push_back(f);
    }
    {
      Face f;
      f.left = n - 1;
      f.axis = 0;
      f.normal_sign = 1;
      f.position = cells_.back().upper[0];
      f.measure = cells_.back().extent(0);
      faces_.push_back(f);
    }
  }

  void build_faces_2d() {
    const int nx = spec_.cells[0];
    const int ny = spec_.cells[1];
    auto idx = [nx](int ix, int iy) { return iy * nx + ix; };
    faces_.clear();
    // Faces orthogonal to x, sweeping rows then columns of nodes.
    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix <= nx; ++ix) {
        Face f;
        f.axis = 0;
        if (ix == 0) {
          f.left = idx(0, iy);
          f.normal_sign = -1;
        } else {
          f.left = idx(ix - 1, iy);
          f.right = ix < nx ? idx(ix, iy) : -1;
          f.normal_sign = 1;
        }
        const Cell& c = cells_[static_cast<std::size_t>(f.left)];
        f.position = ix == 0 ? c.lower[0] : c.upper[0];
        f.span_lower = c.lower[1];
        f.span_upper = c.upper[1];
        f.measure = f.span_upper - f.span_lower;
        faces_.push_back(f);
      }
    }
    for (int iy = 0; iy <= ny; ++iy) {
      for (int ix = 0; ix < nx; ++ix) {
        Face f;
        f.axis = 1;
        if (iy == 0) {
          f.left = idx(ix, 0);
          f.normal_sign = -1;
        } else {
          f.left = idx(ix, iy - 1);
          f.right = iy < ny ? idx(ix, iy) : -1;
          f.normal_sign = 1;
        }
        const Cell& c = cells_[static_cast<std::size_t>(f.left)];
        f.position = iy == 0 ? c.lower[1] : c.upper[1];
        f.span_lower = c.lower[0];
        f.span_upper = c.upper[0];
        f.measure = f.span_upper - f.span_lower;
        faces_.push_back(f);
      }
    }
  }

  DomainSpec spec_;
  std::vector<Cell> cells_;
  std::vector<Face> faces_;
};

}  // namespace ehl
