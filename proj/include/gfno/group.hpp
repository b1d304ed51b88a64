#pragma once

#include <array>
#include <string>
#include <vector>

#include "gfno/tensor.hpp"

/// The wallpaper groups p4 and p4m, split as translations and a finite
/// stabilizer S_G, and their actions on fields, stacked feature maps and
/// centered spectra. `Group::none` is the trivial stabilizer used by the
/// plain FNO (d_g = 1).
namespace gfno::group {

enum class Group { none, p4, p4m };

Group parse_group(const std::string& name);
std::string to_string(Group g);
/// d_g = |S_G|.
std::size_t order(Group g);

/// Integer 2x2 matrix acting on (x1, x2) = (row, column) coordinates.
struct Mat2 {
  int a, b, c, d;

  std::array<long, 2> apply(long x1, long x2) const { return {a * x1 + b * x2, c * x1 + d * x2}; }
  friend Mat2 operator*(const Mat2& p, const Mat2& q) {
    return {p.a * q.a + p.b * q.c, p.a * q.b + p.b * q.d, p.c * q.a + p.d * q.c, p.c * q.b + p.d * q.d};
  }
  friend bool operator==(const Mat2&, const Mat2&) = default;
};

struct StabilizerElement {
  Group group = Group::p4;
  int rot = 0;   // mod 4
  int refl = 1;  // +1 or -1

  /// Flip^{(1-refl)/2} * Rot90^{rot}, Rot90 = [[0,-1],[1,0]], Flip = diag(1,-1).
  Mat2 matrix() const;
  /// Canonical position on the stabilizer axis: rot for refl=+1, 4+rot otherwise.
  std::size_t index() const { return static_cast<std::size_t>((refl == 1 ? 0 : 4) + rot); }
  static StabilizerElement from_index(Group g, std::size_t idx);
  static StabilizerElement identity(Group g) { return {g, 0, 1}; }

  friend bool operator==(const StabilizerElement&, const StabilizerElement&) = default;
};

std::string to_string(const StabilizerElement& s);

/// All elements in canonical stabilizer-axis order.
std::vector<StabilizerElement> elements(Group g);

StabilizerElement stab_compose(const StabilizerElement& a, const StabilizerElement& b);
StabilizerElement stab_inverse(const StabilizerElement& a);

/// g = x_g s_g. Acting on a field, the stabilizer rotates/reflects about the
/// grid center first, then the translation shifts circularly.
struct GroupElement {
  StabilizerElement stab;
  std::array<long, 2> trans{0, 0};

  static GroupElement identity(Group g) { return {StabilizerElement::identity(g), {0, 0}}; }
  static GroupElement rotation(StabilizerElement s) { return {s, {0, 0}}; }
};

GroupElement compose(const GroupElement& g, const GroupElement& h);
GroupElement inverse(const GroupElement& g);

/// The element whose planar action fixes index (0, 0): stabilizer `s`
/// composed with the translation that turns a center rotation on an n x n
/// grid into the modular rotation y -> M y (mod n).
GroupElement origin_fixing(const StabilizerElement& s, std::size_t n);

/// (L_g x)(y) = x(T_g^{-1} y) on the last two axes, T_g(y) = M(y - c) + c + t,
/// c the grid center. Real or complex input.
Tensor act_plane(const GroupElement& g, const Tensor& x);

/// Stack action on axis -3 (the stabilizer axis, extent d_g):
/// out[t] = act_plane(g, f[stab_inverse(g) . t]).
Tensor act_gstack(const GroupElement& g, const Tensor& f);

/// (L_s B)(xi) = B(M_s^{-1} xi) on an odd centered square band (last two axes).
Tensor act_spectrum(const StabilizerElement& s, const Tensor& band);

}  // namespace gfno::group
