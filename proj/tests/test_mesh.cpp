#include <gtest/gtest.h>

#include "ehl/mesh.hpp"

using namespace ehl;

namespace {

DomainSpec line(double a, double b, int n) {
  DomainSpec d;
  d.dim = 1;
  d.lower = {a, 0.0};
  d.upper = {b, 0.0};
  d.cells = {n, 1};
  return d;
}

DomainSpec square(int nx, int ny) {
  DomainSpec d;
  d.dim = 2;
  d.lower = {0.0, 0.0};
  d.upper = {1.0, 1.0};
  d.cells = {nx, ny};
  return d;
}

int count_boundary(const Mesh& m) {
  int n = 0;
  for (const Face& f : m.faces()) n += f.boundary() ? 1 : 0;
  return n;
}

}  // namespace

TEST(Mesh, Counts1D) {
  const Mesh m = Mesh::build(line(0, 1, 4), 1);
  EXPECT_EQ(m.num_elements(), 4);
  EXPECT_EQ(m.num_faces(), 5);
  EXPECT_EQ(count_boundary(m), 2);
}

TEST(Mesh, Counts2D) {
  const Mesh m = Mesh::build(square(2, 2), 1);
  EXPECT_EQ(m.num_elements(), 4);
  EXPECT_EQ(m.num_faces(), 12);
  EXPECT_EQ(count_boundary(m), 8);
}

TEST(Mesh, UniformSizes) {
  const Mesh m = Mesh::build(line(-4, 2, 6), 1);
  for (int i = 0; i < m.num_elements(); ++i) EXPECT_EQ(m.element_size(i), 1.0);
}

TEST(Mesh, FaceMeasure1DIsMinAdjacentSize) {
  const Mesh m = Mesh::build(line(0, 1, 4), 2);
  for (const Face& f : m.faces()) {
    double expect = m.element_size(f.left);
    if (!f.boundary()) expect = std::min(expect, m.element_size(f.right));
    EXPECT_EQ(f.measure, expect);
    EXPECT_GT(f.measure, 0.0);
  }
}

TEST(Mesh, InteriorNormalsOpposite) {
  for (const Mesh& m : {Mesh::build(line(0, 1, 5), 1), Mesh::build(square(3, 2), 1)}) {
    for (const Face& f : m.faces()) {
      EXPECT_EQ(f.normal_left(), -f.normal_right());
      EXPECT_EQ(std::abs(f.normal_left()), 1.0);
    }
  }
}

TEST(Mesh, MeasuresSumToDomain) {
  const Mesh m = Mesh::build(square(3, 5), 1);
  double sum = 0.0;
  for (int i = 0; i < m.num_elements(); ++i) sum += m.element_measure(i);
  EXPECT_NEAR(sum, m.domain_measure(), 1e-14);
}

TEST(Mesh, EachElementSideCoveredOnce2D) {
  const Mesh m = Mesh::build(square(3, 2), 1);
  std::vector<int> sides(static_cast<std::size_t>(m.num_elements()), 0);
  for (const Face& f : m.faces()) {
    ++sides[static_cast<std::size_t>(f.left)];
    if (!f.boundary()) ++sides[static_cast<std::size_t>(f.right)];
  }
  for (int s : sides) EXPECT_EQ(s, 4);
}

TEST(Mesh, ZeroCellsRejected) {
  EXPECT_THROW(Mesh::build(line(0, 1, 0), 1), MeshError);
  DomainSpec bad = line(1, 0, 2);
  EXPECT_THROW(Mesh::build(bad, 1), MeshError);
  EXPECT_THROW(Mesh::build(line(0, 1, 2), 0), MeshError);
}

TEST(Mesh, RefineUniform) {
  const Mesh m = Mesh::build(line(0, 1, 4), 2);
  const Mesh r = m.refine_uniform();
  EXPECT_EQ(r.num_elements(), 8);
  for (int i = 0; i < r.num_elements(); ++i) {
    EXPECT_EQ(r.element_size(i), 0.5 * m.element_size(i / 2));
    EXPECT_EQ(r.element(i).degree, 2);
  }
  EXPECT_EQ(r.element(0).lower[0], 0.0);
  EXPECT_EQ(r.element(7).upper[0], 1.0);

  const Mesh q = Mesh::build(square(2, 2), 1).refine_uniform();
  EXPECT_EQ(q.spec().cells[0], 4);
  EXPECT_EQ(q.spec().cells[1], 4);
  EXPECT_EQ(q.num_elements(), 16);
}

TEST(Mesh, PerElementDegreesAndFaceDegree) {
  const Mesh m = Mesh::build(line(0, 1, 3), std::vector<int>{1, 3, 2});
  EXPECT_EQ(m.element(1).degree, 3);
  for (const Face& f : m.faces()) {
    if (!f.boundary()) {
      EXPECT_EQ(m.face_degree(f), std::max(m.element(f.left).degree, m.element(f.right).degree));
    }
  }
  EXPECT_THROW(Mesh::build(line(0, 1, 3), std::vector<int>{1, 2}), MeshError);
}

TEST(Mesh, Deterministic) {
  const Mesh a = Mesh::build(square(3, 3), 2);
  const Mesh b = Mesh::build(square(3, 3), 2);
  ASSERT_EQ(a.num_faces(), b.num_faces());
  for (int k = 0; k < a.num_faces(); ++k) {
    EXPECT_EQ(a.face(k).left, b.face(k).left);
    EXPECT_EQ(a.face(k).right, b.face(k).right);
    EXPECT_EQ(a.face(k).position, b.face(k).position);
  }
}
