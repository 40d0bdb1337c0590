#pragma once

// Closed subsets of R^n and the three oracles every analysis relies on:
// membership, distance and metric projection.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tvx/numkernel.hpp"

namespace tvx {

using ScalarFn = std::function<double(const Vec&)>;
using GradFn = std::function<Vec(const Vec&)>;
using DomainFn = std::function<bool(const Vec&)>;

enum class LevelSense { LessEqual, Equal };

/// f(x) = max_j (slopes.row(j) . x + offsets[j]) on the domain {D x <= d};
/// +infinity outside the domain. Indicators use a single zero piece.
struct PolyFunction {
  Mat slopes;
  Vec offsets;
  Mat domain_A;
  Vec domain_b;

  int dim() const { return static_cast<int>(slopes.cols()); }
  bool in_domain(const Vec& x, double tol = 1e-9) const;
  /// Throws Error(Precondition) outside the domain.
  double value(const Vec& x) const;

  static PolyFunction affine(const Vec& slope, double offset);
  static PolyFunction max_affine(const Mat& slopes, const Vec& offsets);
  static PolyFunction indicator(const Mat& A, const Vec& b);
  /// |x| on R, or the l1 norm on R^n, as a max of 2^n affine pieces.
  static PolyFunction l1_norm(int dim);
};

/// g(x) = x^T Q x + q.x + c; kept so level sets survive serialization.
struct Quadratic {
  Mat Q;
  Vec q;
  double c = 0.0;
};

class SetSpec;

struct PolyhedronData {
  Mat A;
  Vec b;
  Mat Aeq;
  Vec beq;
};

struct BallData {
  Vec center;
  double radius = 0.0;
};

struct AffineData {
  Vec base;
  Mat directions;  // columns
  Mat basis;       // orthonormal columns spanning the directions
  Mat normals;     // rows spanning the orthogonal complement
};

struct LevelSetData {
  ScalarFn g;
  GradFn grad;
  LevelSense sense = LevelSense::LessEqual;
  std::optional<Quadratic> quadratic;
};

struct TranslateData {
  std::shared_ptr<const SetSpec> inner;
  Vec shift;
};

struct UnionData {
  std::vector<SetSpec> members;
};

/// Epigraph of f : R^base_dim -> R u {+inf}; +inf is modelled by the domain
/// predicate, never by a sentinel value.
struct EpigraphData {
  int base_dim = 0;
  ScalarFn f;
  GradFn grad;
  DomainFn in_domain;
  std::optional<PolyFunction> poly;
};

struct ProductData {
  std::vector<SetSpec> factors;
};

enum class SetKind { Polyhedron, Ball, Affine, LevelSet, Translate, Union, Epigraph, Product };

const char* to_string(SetKind kind);

/// Immutable closed-set description. Copies share the underlying node.
class SetSpec {
 public:
  using Node = std::variant<PolyhedronData, BallData, AffineData, LevelSetData, TranslateData,
                            UnionData, EpigraphData, ProductData>;

  static SetSpec polyhedron(Mat A, Vec b, Mat Aeq = Mat(), Vec beq = Vec());
  static SetSpec halfspace(const Vec& normal, double offset);
  static SetSpec box(const Vec& lo, const Vec& hi);
  static SetSpec whole_space(int dim);
  static SetSpec ball(Vec center, double radius);
  static SetSpec affine(Vec base, Mat directions);
  static SetSpec line(const Vec& base, const Vec& direction);
  static SetSpec point(const Vec& p);
  static SetSpec level_set(int dim, ScalarFn g, GradFn grad, LevelSense sense);
  static SetSpec quadratic_level_set(Quadratic quad, LevelSense sense);
  static SetSpec translate(const SetSpec& inner, Vec shift);
  static SetSpec union_of(std::vector<SetSpec> members);
  static SetSpec epigraph(int base_dim, ScalarFn f, GradFn grad = {}, DomainFn in_domain = {});
  static SetSpec epigraph(PolyFunction f);
  static SetSpec product(std::vector<SetSpec> factors);

  int dim() const { return dim_; }
  SetKind kind() const;
  const Node& node() const { return *node_; }
  template <class T>
  const T* get() const {
    return std::get_if<T>(node_.get());
  }

  /// True when `project` is exact (convex variants, translates and products
  /// of them, polyhedral epigraphs).
  bool exact_projection() const;
  /// True for polyhedral, ball and affine variants (and their translates and
  /// products): the sets whose tangent cones are computed exactly.
  bool convex_exact() const;

 private:
  SetSpec(std::shared_ptr<const Node> node, int dim) : node_(std::move(node)), dim_(dim) {}

  std::shared_ptr<const Node> node_;
  int dim_ = 0;
};

/// A point together with its constraint violation against a set.
struct PointInSet {
  Vec point;
  double residual = 0.0;
};

/// Throws Error(Precondition) when the residual exceeds `tol`.
PointInSet point_in_set(const SetSpec& S, const Vec& x, double tol = 1e-9);

bool member(const SetSpec& S, const Vec& x, double tol = 1e-9);
double distance(const SetSpec& S, const Vec& x);
/// Distance under a parametrized norm. MaxProduct is supported for Product
/// sets whose factor boundary coincides with the split index.
double distance(const SetSpec& S, const Vec& x, const NormKind& norm_kind);

/// Exact metric projection; throws Error(Unsupported) for LevelSet and
/// non-polyhedral Epigraph variants (use project_approx).
Vec project(const SetSpec& S, const Vec& x);

struct ApproxProjection {
  Vec point;
  double distance = 0.0;
  bool approximate = false;
};

/// Multi-start local descent for nonconvex variants; exact variants are
/// delegated to `project` and reported with approximate == false.
ApproxProjection project_approx(const SetSpec& S, const Vec& x, int starts = 8);

/// Exact intersection for polyhedral/affine pairs, ball pairs that meet in
/// a point or nest, and unions thereof. Rows are sorted so the result does not
/// depend on operand order.
SetSpec intersect(const SetSpec& S1, const SetSpec& S2);

/// H-representation when the set is polyhedral (Polyhedron, Affine, polyhedral
/// Epigraph, Translate/Product of those).
std::optional<PolyhedronData> polyhedral_form(const SetSpec& S);

/// The image of S under x -> factor * x.
SetSpec dilate(const SetSpec& S, double factor);

std::string describe(const SetSpec& S);

}  // namespace tvx
