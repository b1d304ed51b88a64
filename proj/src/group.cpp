#include "gfno/group.hpp"

#include <cstring>

namespace gfno::group {

namespace {

constexpr Mat2 kRot{0, -1, 1, 0};
constexpr Mat2 kFlip{1, 0, 0, -1};
constexpr Mat2 kEye{1, 0, 0, 1};

long wrap(long v, long n) { return ((v % n) + n) % n; }

void require_group(Group g, const StabilizerElement& s, const char* what) {
  if (s.group != g) {
    throw std::invalid_argument(std::string(what) + ": mixed groups " + to_string(g) + " and " + to_string(s.group));
  }
}

// Applies a per-plane index map to every slice; elements of `width` doubles.
Tensor permute_planes(const Tensor& x, const std::vector<std::size_t>& src_of, std::size_t plane) {
  Tensor out(x.shape(), x.dtype());
  const std::size_t width = x.is_complex() ? 2 : 1;
  const std::size_t slices = x.numel() / plane;
  auto in = x.raw();
  auto o = out.raw();
  for (std::size_t s = 0; s < slices; ++s) {
    const double* a = in.data() + s * plane * width;
    double* b = o.data() + s * plane * width;
    for (std::size_t p = 0; p < plane; ++p) std::memcpy(b + p * width, a + src_of[p] * width, width * sizeof(double));
  }
  return out;
}

}  // namespace

Group parse_group(const std::string& name) {
  if (name == "none") return Group::none;
  if (name == "p4") return Group::p4;
  if (name == "p4m") return Group::p4m;
  throw std::invalid_argument("unknown group '" + name + "' (expected none, p4 or p4m)");
}

std::string to_string(Group g) {
  switch (g) {
    case Group::none: return "none";
    case Group::p4: return "p4";
    case Group::p4m: return "p4m";
  }
  return "?";
}

std::size_t order(Group g) {
  switch (g) {
    case Group::none: return 1;
    case Group::p4: return 4;
    case Group::p4m: return 8;
  }
  return 0;
}

Mat2 StabilizerElement::matrix() const {
  Mat2 m = kEye;
  for (int r = 0; r < rot; ++r) m = m * kRot;
  return refl == -1 ? kFlip * m : m;
}

StabilizerElement StabilizerElement::from_index(Group g, std::size_t idx) {
  if (idx >= order(g)) {
    throw std::out_of_range("stabilizer index " + std::to_string(idx) + " out of range for " + to_string(g));
  }
  return {g, static_cast<int>(idx % 4), idx < 4 ? 1 : -1};
}

std::string to_string(const StabilizerElement& s) {
  return to_string(s.group) + "(rot=" + std::to_string(s.rot) + ", refl=" + std::to_string(s.refl) + ")";
}

std::vector<StabilizerElement> elements(Group g) {
  std::vector<StabilizerElement> out;
  for (std::size_t i = 0; i < order(g); ++i) out.push_back(StabilizerElement::from_index(g, i));
  return out;
}

StabilizerElement stab_compose(const StabilizerElement& a, const StabilizerElement& b) {
  require_group(a.group, b, "stab_compose");
  const Mat2 m = a.matrix() * b.matrix();
  // Rot^r Flip = Flip Rot^{-r}
  const int rot = b.refl == 1 ? a.rot + b.rot : b.rot - a.rot;
  StabilizerElement out{a.group, static_cast<int>(wrap(rot, 4)), a.refl * b.refl};
  if (out.matrix() != m) throw std::logic_error("stab_compose: matrix mismatch");
  return out;
}

StabilizerElement stab_inverse(const StabilizerElement& a) {
  if (a.refl == -1) return a;
  return {a.group, static_cast<int>(wrap(-a.rot, 4)), 1};
}

GroupElement compose(const GroupElement& g, const GroupElement& h) {
  const auto mt = g.stab.matrix().apply(h.trans[0], h.trans[1]);
  return {stab_compose(g.stab, h.stab), {g.trans[0] + mt[0], g.trans[1] + mt[1]}};
}

GroupElement inverse(const GroupElement& g) {
  const StabilizerElement si = stab_inverse(g.stab);
  const auto mt = si.matrix().apply(g.trans[0], g.trans[1]);
  return {si, {-mt[0], -mt[1]}};
}

GroupElement origin_fixing(const StabilizerElement& s, std::size_t n) {
  const long c2 = static_cast<long>(n) - 1;
  const auto mc = s.matrix().apply(c2, c2);
  return {s, {(mc[0] - c2) / 2, (mc[1] - c2) / 2}};
}

Tensor act_plane(const GroupElement& g, const Tensor& x) {
  if (x.rank() < 2) throw ShapeError("act_plane: need two spatial axes, got " + gfno::to_string(x.shape()));
  const long nx = static_cast<long>(x.extent(-2)), ny = static_cast<long>(x.extent(-1));
  if (g.stab.rot % 2 == 1 && nx != ny) {
    throw ShapeError("act_plane: rotation needs square spatial extents, got " + gfno::to_string(x.shape()));
  }
  const Mat2 minv = stab_inverse(g.stab).matrix();
  std::vector<std::size_t> src_of(static_cast<std::size_t>(nx * ny));
  // Doubled coordinates keep the half-integer center exact.
  for (long i = 0; i < nx; ++i) {
    for (long j = 0; j < ny; ++j) {
      const long v1 = 2 * i - (nx - 1) - 2 * g.trans[0];
      const long v2 = 2 * j - (ny - 1) - 2 * g.trans[1];
      const auto u = minv.apply(v1, v2);
      const long si = wrap((u[0] + nx - 1) / 2, nx);
      const long sj = wrap((u[1] + ny - 1) / 2, ny);
      src_of[static_cast<std::size_t>(i * ny + j)] = static_cast<std::size_t>(si * ny + sj);
    }
  }
  return permute_planes(x, src_of, static_cast<std::size_t>(nx * ny));
}

Tensor act_gstack(const GroupElement& g, const Tensor& f) {
  const std::size_t dg = order(g.stab.group);
  if (f.rank() < 3 || f.extent(-3) != dg) {
    throw ShapeError("act_gstack: expected stabilizer axis of extent " + std::to_string(dg) + " at axis -3, got " +
                     gfno::to_string(f.shape()));
  }
  const Tensor moved = act_plane(g, f);
  const std::size_t plane = f.extent(-1) * f.extent(-2);
  const std::size_t width = f.is_complex() ? 2 : 1;
  const std::size_t outer = f.numel() / (plane * dg);
  const StabilizerElement ginv = stab_inverse(g.stab);
  std::vector<std::size_t> src(dg);
  for (std::size_t t = 0; t < dg; ++t) {
    src[t] = stab_compose(ginv, StabilizerElement::from_index(g.stab.group, t)).index();
  }
  Tensor out(f.shape(), f.dtype());
  auto in = moved.raw();
  auto o = out.raw();
  const std::size_t block = plane * width;
  for (std::size_t b = 0; b < outer; ++b)
    for (std::size_t t = 0; t < dg; ++t)
      std::memcpy(o.data() + (b * dg + t) * block, in.data() + (b * dg + src[t]) * block, block * sizeof(double));
  return out;
}

Tensor act_spectrum(const StabilizerElement& s, const Tensor& band) {
  if (band.rank() < 2) throw ShapeError("act_spectrum: need a 2-D band, got " + gfno::to_string(band.shape()));
  const long b = static_cast<long>(band.extent(-1));
  if (static_cast<long>(band.extent(-2)) != b || b % 2 == 0) {
    throw ShapeError("act_spectrum: band must be odd and square, got " + gfno::to_string(band.shape()));
  }
  const long h = (b - 1) / 2;
  const Mat2 minv = stab_inverse(s).matrix();
  std::vector<std::size_t> src_of(static_cast<std::size_t>(b * b));
  for (long i = 0; i < b; ++i) {
    for (long j = 0; j < b; ++j) {
      const auto u = minv.apply(i - h, j - h);
      src_of[static_cast<std::size_t>(i * b + j)] = static_cast<std::size_t>((u[0] + h) * b + (u[1] + h));
    }
  }
  return permute_planes(band, src_of, static_cast<std::size_t>(b * b));
}

}  // namespace gfno::group
