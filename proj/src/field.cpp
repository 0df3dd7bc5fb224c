/// @file field.cpp
/// Polar-grid iterate fields: bicubic Hermite interpolation in
/// (log rho, theta), fitted power tails, inner blend, and the sampled
/// weighted sup norm.

#include <rotflow/field.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rotflow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Cubic Hermite on [0, 1] from endpoint values and local-coordinate slopes.
Vec2 hermite(Vec2 p0, Vec2 m0, Vec2 p1, Vec2 m1, double u) {
  const double u2 = u * u, u3 = u2 * u;
  return (2.0 * u3 - 3.0 * u2 + 1.0) * p0 + (u3 - 2.0 * u2 + u) * m0 +
         (-2.0 * u3 + 3.0 * u2) * p1 + (u3 - u2) * m1;
}

/// d/du of hermite().
Vec2 hermite_du(Vec2 p0, Vec2 m0, Vec2 p1, Vec2 m1, double u) {
  const double u2 = u * u;
  return (6.0 * u2 - 6.0 * u) * p0 + (3.0 * u2 - 4.0 * u + 1.0) * m0 +
         (-6.0 * u2 + 6.0 * u) * p1 + (3.0 * u2 - 2.0 * u) * m1;
}

/// Periodic cardinal interpolation of a ring of n values at angle theta.
/// Returns the value and, when dv is non-null, the derivative d/d theta.
Vec2 ring_interp(const Vec2* ring, int n, double theta, Vec2* dv) {
  double t = theta / (kTwoPi / n);
  double cell;
  double u = std::modf(t, &cell);
  int j0 = static_cast<int>(cell) % n;
  if (j0 < 0) j0 += n;
  const auto wrap = [n](int j) { return ((j % n) + n) % n; };
  const Vec2 pm1 = ring[wrap(j0 - 1)];
  const Vec2 p0 = ring[j0];
  const Vec2 p1 = ring[wrap(j0 + 1)];
  const Vec2 p2 = ring[wrap(j0 + 2)];
  const Vec2 m0 = 0.5 * (p1 - pm1);
  const Vec2 m1 = 0.5 * (p2 - p0);
  if (dv != nullptr) {
    *dv = hermite_du(p0, m0, p1, m1, u) * (n / kTwoPi);
  }
  return hermite(p0, m0, p1, m1, u);
}

double wrap_angle(Vec2 x) {
  double th = std::atan2(x.e2, x.e1);
  if (th < 0.0) th += kTwoPi;
  return th;
}

}  // namespace

FieldGrid FieldGrid::standard() {
  FieldGrid g;
  const int n = 24;
  const double lo = 0.1, hi = 64.0;
  g.radii.resize(n);
  for (int i = 0; i < n; ++i) {
    g.radii[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  }
  g.radii.front() = lo;
  g.radii.back() = hi;
  g.n_theta = 32;
  return g;
}

double FieldGrid::theta(int j) const { return kTwoPi * j / n_theta; }

Vec2 FieldGrid::node(int i, int j) const { return radii[i] * dir(theta(j)); }

bool FieldGrid::same_layout(const FieldGrid& other) const {
  return n_theta == other.n_theta && radii == other.radii;
}

IterateField IterateField::zero(const FieldGrid& grid, double r) {
  IterateField w;
  w.grid = grid;
  w.decay_r = r;
  w.values.assign(grid.nodes(), Vec2{});
  w.finalize();
  return w;
}

Vec2 IterateField::at(int i, int j) const {
  return values[static_cast<std::size_t>(i) * grid.n_theta + j];
}

Vec2& IterateField::at(int i, int j) {
  return values[static_cast<std::size_t>(i) * grid.n_theta + j];
}

void IterateField::finalize() {
  const int n = grid.n_theta;
  const std::size_t rings = grid.rings();
  if (rings < 2 || values.size() != grid.nodes()) {
    throw std::invalid_argument("iterate field needs at least two rings of values");
  }
  const double p = 1.0 + decay_r;
  tail_c.assign(static_cast<std::size_t>(n), Vec2{});
  // Per angle, least squares of the outermost two rings against c rho^-p.
  double denom = 0.0;
  const double rA = grid.radii[rings - 2], rB = grid.radii[rings - 1];
  const double bA = std::pow(rA, -p), bB = std::pow(rB, -p);
  denom = bA * bA + bB * bB;
  for (int j = 0; j < n; ++j) {
    const Vec2 wA = at(static_cast<int>(rings) - 2, j);
    const Vec2 wB = at(static_cast<int>(rings) - 1, j);
    tail_c[j] = (bA * wA + bB * wB) / denom;
  }
  Vec2 mean{};
  for (int j = 0; j < n; ++j) mean += at(0, j);
  inner_mean = mean / static_cast<double>(n);
}

Vec2 IterateField::value(Vec2 x) const {
  const int n = grid.n_theta;
  const double rho = norm(x);
  const double rho_min = grid.radii.front();
  const double rho_max = grid.radii.back();
  const double th = wrap_angle(x);

  if (rho <= rho_min) {
    const Vec2 V = ring_interp(values.data(), n, th, nullptr);
    return inner_mean + (rho / rho_min) * (V - inner_mean);
  }
  if (rho >= rho_max) {
    const std::size_t last = (grid.rings() - 1) * static_cast<std::size_t>(n);
    const Vec2 W = ring_interp(values.data() + last, n, th, nullptr);
    const Vec2 c = ring_interp(tail_c.data(), n, th, nullptr);
    const double p = 1.0 + decay_r;
    const double cut = std::pow(rho_max / rho, 3.0);
    return std::pow(rho, -p) * c + cut * (W - std::pow(rho_max, -p) * c);
  }

  const double s = std::log(rho);
  const auto& rr = grid.radii;
  // Radial cell k with rr[k] <= rho < rr[k+1].
  int k = static_cast<int>(std::upper_bound(rr.begin(), rr.end(), rho) - rr.begin()) - 1;
  k = std::clamp(k, 0, static_cast<int>(grid.rings()) - 2);
  const double sk = std::log(rr[k]), sk1 = std::log(rr[k + 1]);
  const double h = sk1 - sk;
  const double u = (s - sk) / h;

  // Theta-interpolated row values for the slope stencil.
  const int top = static_cast<int>(grid.rings()) - 1;
  const auto row = [&](int i) {
    i = std::clamp(i, 0, top);
    return ring_interp(values.data() + static_cast<std::size_t>(i) * n, n, th, nullptr);
  };
  const Vec2 vk = row(k), vk1 = row(k + 1);
  Vec2 mk, mk1;
  if (k == 0) {
    mk = (vk1 - vk) / h;
  } else {
    mk = (vk1 - row(k - 1)) / (sk1 - std::log(rr[k - 1]));
  }
  if (k + 1 == top) {
    mk1 = (vk1 - vk) / h;
  } else {
    mk1 = (row(k + 2) - vk) / (std::log(rr[k + 2]) - sk);
  }
  return hermite(vk, h * mk, vk1, h * mk1, u);
}

Mat2 IterateField::gradient(Vec2 x) const {
  const int n = grid.n_theta;
  const double rho = norm(x);
  const double rho_min = grid.radii.front();
  const double rho_max = grid.radii.back();
  const double th = wrap_angle(x);

  Vec2 drho, dth_over_rho;  // d w / d rho and (1 / rho) d w / d theta
  if (rho <= rho_min) {
    Vec2 Vp;
    const Vec2 V = ring_interp(values.data(), n, th, &Vp);
    drho = (V - inner_mean) / rho_min;
    dth_over_rho = Vp / rho_min;
  } else if (rho >= rho_max) {
    const std::size_t last = (grid.rings() - 1) * static_cast<std::size_t>(n);
    Vec2 Wp, cp;
    const Vec2 W = ring_interp(values.data() + last, n, th, &Wp);
    const Vec2 c = ring_interp(tail_c.data(), n, th, &cp);
    const double p = 1.0 + decay_r;
    const double rp = std::pow(rho, -p);
    const double cap = std::pow(rho_max, -p);
    const double cut = std::pow(rho_max / rho, 3.0);
    drho = (-p * rp / rho) * c - (3.0 * cut / rho) * (W - cap * c);
    dth_over_rho = (rp / rho) * cp + (cut / rho) * (Wp - cap * cp);
  } else {
    const double s = std::log(rho);
    const auto& rr = grid.radii;
    int k = static_cast<int>(std::upper_bound(rr.begin(), rr.end(), rho) - rr.begin()) - 1;
    k = std::clamp(k, 0, static_cast<int>(grid.rings()) - 2);
    const double sk = std::log(rr[k]), sk1 = std::log(rr[k + 1]);
    const double h = sk1 - sk;
    const double u = (s - sk) / h;
    const int top = static_cast<int>(grid.rings()) - 1;
    const auto row = [&](int i, Vec2* dv) {
      i = std::clamp(i, 0, top);
      return ring_interp(values.data() + static_cast<std::size_t>(i) * n, n, th, dv);
    };
    Vec2 dk, dk1, dkm, dkp;
    const Vec2 vk = row(k, &dk), vk1 = row(k + 1, &dk1);
    Vec2 mk, mk1, mdk, mdk1;
    if (k == 0) {
      mk = (vk1 - vk) / h;
      mdk = (dk1 - dk) / h;
    } else {
      const Vec2 vm = row(k - 1, &dkm);
      const double span = sk1 - std::log(rr[k - 1]);
      mk = (vk1 - vm) / span;
      mdk = (dk1 - dkm) / span;
    }
    if (k + 1 == top) {
      mk1 = (vk1 - vk) / h;
      mdk1 = (dk1 - dk) / h;
    } else {
      const Vec2 vp = row(k + 2, &dkp);
      const double span = std::log(rr[k + 2]) - sk;
      mk1 = (vp - vk) / span;
      mdk1 = (dkp - dk) / span;
    }
    const Vec2 ds = hermite_du(vk, h * mk, vk1, h * mk1, u) / h;
    const Vec2 dth = hermite(dk, h * mdk, dk1, h * mdk1, u);
    drho = ds / rho;  // d/d rho = (1 / rho) d/d log rho
    dth_over_rho = dth / rho;
  }

  Vec2 er, et;
  if (rho < 1e-12) {
    er = {1.0, 0.0};
    et = {0.0, 1.0};
  } else {
    er = x / rho;
    et = perp(er);
  }
  // M(i, j) = d w_i / d x_j = drho_i er_j + (dth_over_rho)_i et_j.
  return Mat2{drho.e1 * er.e1 + dth_over_rho.e1 * et.e1,
              drho.e1 * er.e2 + dth_over_rho.e1 * et.e2,
              drho.e2 * er.e1 + dth_over_rho.e2 * et.e1,
              drho.e2 * er.e2 + dth_over_rho.e2 * et.e2};
}

double IterateField::weighted_norm() const {
  const double p = 1.0 + decay_r;
  const int n = grid.n_theta;
  const int rings = static_cast<int>(grid.rings());
  double best = 0.0;
  const auto consider = [&](double rho, double mag) {
    best = std::max(best, std::pow(1.0 + rho, p) * mag);
  };
  // Grid nodes.
  for (int i = 0; i < rings; ++i) {
    for (int j = 0; j < n; ++j) consider(grid.radii[i], norm(at(i, j)));
  }
  // Oversampled bulk lattice: 4x in each direction.
  for (int i = 0; i + 1 < rings; ++i) {
    for (int q = 1; q < 4; ++q) {
      const double rho = grid.radii[i] *
                         std::pow(grid.radii[i + 1] / grid.radii[i], q / 4.0);
      for (int j = 0; j < 4 * n; ++j) {
        const Vec2 x = rho * dir(kTwoPi * j / (4 * n));
        consider(rho, norm(value(x)));
      }
    }
  }
  // Inner blend.
  for (int q = 1; q <= 3; ++q) {
    const double rho = grid.radii.front() * q / 4.0;
    for (int j = 0; j < 2 * n; ++j) {
      consider(rho, norm(value(rho * dir(kTwoPi * j / (2 * n)))));
    }
  }
  consider(0.0, norm(inner_mean));
  // Tail ladder plus its rho -> infinity limit.
  for (int k = 1; k <= 48; ++k) {
    const double rho = grid.radii.back() * std::pow(2.0, k / 4.0);
    for (int j = 0; j < 2 * n; ++j) {
      consider(rho, norm(value(rho * dir(kTwoPi * j / (2 * n)))));
    }
  }
  for (int j = 0; j < 4 * n; ++j) {
    Vec2 c = ring_interp(tail_c.data(), n, kTwoPi * j / (4 * n), nullptr);
    best = std::max(best, norm(c));
  }
  return best;
}

IterateField field_axpby(double alpha, const IterateField& A, double beta,
                         const IterateField& B) {
  if (!A.grid.same_layout(B.grid)) {
    throw std::invalid_argument("field_axpby needs fields on the same grid");
  }
  IterateField out = A;
  for (std::size_t q = 0; q < out.values.size(); ++q) {
    out.values[q] = alpha * A.values[q] + beta * B.values[q];
  }
  out.finalize();
  return out;
}

double weighted_diff_norm(const IterateField& A, const IterateField& B) {
  return field_axpby(1.0, A, -1.0, B).weighted_norm();
}

}  // namespace rotflow
