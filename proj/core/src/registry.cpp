#include "cecm/registry.hpp"

#include <cmath>
#include <memory>

namespace cecm {

namespace {

// Equally spaced Lagrange cardinal functions on [-1, 1].
struct Lagrange1d {
  Vector nodes;

  explicit Lagrange1d(int degree) {
    const int n = degree + 1;
    nodes = Vector(n);
    for (int j = 0; j < n; ++j)
      nodes(j) = (n == 1) ? 0.0
                          : -1.0 + 2.0 * static_cast<double>(j) /
                                       static_cast<double>(n - 1);
  }

  int count() const { return static_cast<int>(nodes.size()); }

  double value(int i, double x) const {
    double v = 1.0;
    for (int j = 0; j < count(); ++j)
      if (j != i) v *= (x - nodes(j)) / (nodes(i) - nodes(j));
    return v;
  }

  double deriv(int i, double x) const {
    double sum = 0.0;
    for (int k = 0; k < count(); ++k) {
      if (k == i) continue;
      double term = 1.0 / (nodes(i) - nodes(k));
      for (int j = 0; j < count(); ++j)
        if (j != i && j != k) term *= (x - nodes(j)) / (nodes(i) - nodes(j));
      sum += term;
    }
    return sum;
  }
};

}  // namespace

AnalyticIntegrand lagrange_family(int dim, int degree) {
  if (dim < 1 || dim > 3) throw InputError("lagrange_family: dim must be 1-3");
  if (degree < 0) throw InputError("lagrange_family: degree must be >= 0");
  auto basis = std::make_shared<Lagrange1d>(degree);
  const int n1 = basis->count();
  Index count = 1;
  for (int i = 0; i < dim; ++i) count *= n1;

  AnalyticIntegrand f;
  f.dim = dim;
  f.components = count;
  f.value = [basis, dim, n1, count](const Vector& x) {
    RowVector row(count);
    for (Index l = 0; l < count; ++l) {
      Index rest = l;
      double v = 1.0;
      for (int axis = 0; axis < dim; ++axis) {
        const int i = static_cast<int>(rest % n1);
        rest /= n1;
        v *= basis->value(i, x(axis));
      }
      row(l) = v;
    }
    return row;
  };
  f.gradient = [basis, dim, n1, count](const Vector& x) {
    Matrix g(dim, count);
    for (Index l = 0; l < count; ++l) {
      Index rest = l;
      int idx[3] = {0, 0, 0};
      double vals[3] = {1.0, 1.0, 1.0};
      for (int axis = 0; axis < dim; ++axis) {
        idx[axis] = static_cast<int>(rest % n1);
        rest /= n1;
        vals[axis] = basis->value(idx[axis], x(axis));
      }
      for (int axis = 0; axis < dim; ++axis) {
        double v = basis->deriv(idx[axis], x(axis));
        for (int other = 0; other < dim; ++other)
          if (other != axis) v *= vals[other];
        g(axis, l) = v;
      }
    }
    return g;
  };
  return f;
}

namespace {

constexpr double kPi = 3.14159265358979323846;

// Univariate factors of the exponential-sinusoidal family.
inline double fB(double r) { return 1.0 - r; }
inline double dB(double) { return -1.0; }
inline double fC(double r, double s) {
  return std::cos(3.0 * kPi * s * (r + 1.0));
}
inline double dC(double r, double s) {
  return -3.0 * kPi * s * std::sin(3.0 * kPi * s * (r + 1.0));
}
inline double fE(double r, double s) { return std::exp((r - 1.0) * s); }
inline double dE(double r, double s) { return s * std::exp((r - 1.0) * s); }

}  // namespace

AnalyticIntegrand expsin3d_family(int grid) {
  if (grid < 1) throw InputError("expsin3d_family: grid must be >= 1");
  std::vector<std::pair<double, double>> samples;
  samples.reserve(static_cast<std::size_t>(grid) * grid);
  for (int b = 0; b < grid; ++b) {
    for (int a = 0; a < grid; ++a) {
      const auto coord = [&](int t) {
        return (grid == 1) ? 1.0
                           : 1.0 + (kPi - 1.0) * static_cast<double>(t) /
                                       static_cast<double>(grid - 1);
      };
      samples.emplace_back(coord(a), coord(b));
    }
  }

  AnalyticIntegrand f;
  f.dim = 3;
  f.components = static_cast<Index>(samples.size()) * 6;
  f.value = [samples](const Vector& x) {
    RowVector row(static_cast<Index>(samples.size()) * 6);
    Index col = 0;
    for (const auto& [m1, m2] : samples) {
      const double bc1 = fB(x(0)) * fC(x(0), m1);
      const double bc2 = fB(x(1)) * fC(x(1), m1);
      const double bc3 = fB(x(2)) * fC(x(2), m2);
      row(col++) = bc1 * fE(x(0), m1) + 1.0;
      row(col++) = bc2 * fE(x(1), m1) + 1.0;
      row(col++) = bc1 * fE(x(1), m1) + 1.0;
      row(col++) = bc2 * fE(x(0), m1) + 1.0;
      row(col++) = bc1 * fE(x(2), m2) + 1.0;
      row(col++) = bc3 * fE(x(1), m1) + 1.0;
    }
    return row;
  };
  f.gradient = [samples](const Vector& x) {
    Matrix g = Matrix::Zero(3, static_cast<Index>(samples.size()) * 6);
    Index col = 0;
    for (const auto& [m1, m2] : samples) {
      const double b1 = fB(x(0)), c1 = fC(x(0), m1), e1 = fE(x(0), m1);
      const double b2 = fB(x(1)), c2 = fC(x(1), m1), e2 = fE(x(1), m1);
      const double b3 = fB(x(2)), c3 = fC(x(2), m2), e3 = fE(x(2), m2);
      const double dbc1 = dB(x(0)) * c1 + b1 * dC(x(0), m1);
      const double dbc2 = dB(x(1)) * c2 + b2 * dC(x(1), m1);
      const double dbc3 = dB(x(2)) * c3 + b3 * dC(x(2), m2);

      // a1 = B C E (x1) + 1
      g(0, col) = dbc1 * e1 + b1 * c1 * dE(x(0), m1);
      ++col;
      // a2 = B C E (x2) + 1
      g(1, col) = dbc2 * e2 + b2 * c2 * dE(x(1), m1);
      ++col;
      // a3 = B(x1) C(x1) E(x2) + 1
      g(0, col) = dbc1 * e2;
      g(1, col) = b1 * c1 * dE(x(1), m1);
      ++col;
      // a4 = B(x2) C(x2) E(x1) + 1
      g(1, col) = dbc2 * e1;
      g(0, col) = b2 * c2 * dE(x(0), m1);
      ++col;
      // a5 = B(x1) C(x1) E(x3, mu2) + 1
      g(0, col) = dbc1 * e3;
      g(2, col) = b1 * c1 * dE(x(2), m2);
      ++col;
      // a6 = B(x3) C(x3, mu2) E(x2) + 1
      g(2, col) = dbc3 * e2;
      g(1, col) = b3 * c3 * dE(x(1), m1);
      ++col;
    }
    return g;
  };
  return f;
}

AnalyticIntegrand make_registry_function(const std::string& name, int degree,
                                         int grid) {
  if (name == "lagrange1d") return lagrange_family(1, degree);
  if (name == "lagrange2d") return lagrange_family(2, degree);
  if (name == "lagrange3d") return lagrange_family(3, degree);
  if (name == "expsin3d") return expsin3d_family(grid);
  throw InputError("unknown registry function \"" + name + "\"");
}

Matrix sample_integrand(const AnalyticIntegrand& f, const Matrix& points) {
  Matrix a(points.rows(), f.components);
  for (Index g = 0; g < points.rows(); ++g)
    a.row(g) = f.value(points.row(g).transpose());
  return a;
}

SampledBlockSource::SampledBlockSource(AnalyticIntegrand f, Matrix points,
                                       Index cols_per_block)
    : f_(std::move(f)),
      points_(std::move(points)),
      cols_per_block_(cols_per_block) {
  if (cols_per_block_ < 1)
    throw InputError("SampledBlockSource: block width must be positive");
}

int SampledBlockSource::block_count() const {
  return static_cast<int>((f_.components + cols_per_block_ - 1) /
                          cols_per_block_);
}

Index SampledBlockSource::block_cols(int i) const {
  const Index begin = static_cast<Index>(i) * cols_per_block_;
  return std::min(cols_per_block_, f_.components - begin);
}

Matrix SampledBlockSource::load(int i) const {
  const Index begin = static_cast<Index>(i) * cols_per_block_;
  const Index cols = block_cols(i);
  Matrix block(points_.rows(), cols);
  for (Index g = 0; g < points_.rows(); ++g) {
    const RowVector row = f_.value(points_.row(g).transpose());
    block.row(g) = row.segment(begin, cols);
  }
  return block;
}

}  // namespace cecm
