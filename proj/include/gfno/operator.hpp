#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "gfno/autodiff.hpp"
#include "gfno/group.hpp"
#include "gfno/tensor.hpp"

namespace gfno::model {

enum class Variant { gfno, fno, radial_fno };
enum class PosEnc { none, symmetric, cartesian };

Variant parse_variant(const std::string& s);
std::string to_string(Variant v);
PosEnc parse_pos_enc(const std::string& s);
std::string to_string(PosEnc p);

struct ModelConfig {
  Variant variant = Variant::gfno;
  group::Group group = group::Group::p4;  // for radial-fno: the tying group
  std::size_t d_z = 10;
  std::size_t k = 8;
  std::size_t layers = 4;
  PosEnc pos_enc = PosEnc::symmetric;
  std::size_t in_steps = 10;

  /// Size of the stabilizer axis carried by feature maps.
  std::size_t d_g() const;
  /// Group used to stack feature maps (none unless variant is gfno).
  group::Group stack_group() const;
  std::size_t pos_channels() const;
  void validate() const;
};

// Literal single-sample forms. Feature maps are (d_z, d_g, n, n), spectral
// banks are centered (d_out, d_in, d_g, 2k-1, 2k-1).

/// R'(xi) = (R(xi) + conj(R(-xi))) / 2 on the last two (odd, centered) axes.
Tensor hermitian_project(const Tensor& bank);
/// Orbit average (1/|S_G|) sum_s act_spectrum(s, R).
Tensor radial_tie(const Tensor& bank, group::Group g);
/// Frequency-domain G-convolution through full centered spectra; returns the
/// complex inverse transform so callers can inspect its imaginary part.
Tensor gconv_freq_complex(const Tensor& f, const Tensor& bank, group::Group g);
Tensor gconv_freq(const Tensor& f, const Tensor& bank, group::Group g);
/// out[o, t] = sum_{i, s} w[o, i, t^{-1} s] f[i, s].
Tensor gconv_1x1(const Tensor& f, const Tensor& w, group::Group g);
Tensor gmlp(const Tensor& f, const Tensor& w1, const Tensor& w2, group::Group g);
/// x (c_in, n, n), w (d_z, c_in) -> (d_z, d_g, n, n) with identical slices.
Tensor lift(const Tensor& x, const Tensor& w, group::Group g);
/// Stabilizer mean then w (c_out, d_z): (d_z, d_g, n, n) -> (c_out, n, n).
Tensor project(const Tensor& f, const Tensor& w);
Tensor pos_encoding(PosEnc kind, std::size_t n);

/// Maps used to turn stored parameters into the batched spectral kernel.
/// Half-band storage (P..., 2k-1, k) -> full centered band (P..., 2k-1, 2k-1).
ad::SparseMap hermitian_extend_map(const Shape& prefix, std::size_t k);
ad::SparseMap hermitian_project_map(const Shape& prefix, std::size_t k);
ad::SparseMap radial_tie_map(const Shape& prefix, std::size_t k, group::Group g);
/// Full bank (d_out, d_in, d_g, 2k-1, 2k-1) -> mode-major half-band kernel
/// (M, d_out d_g, d_in d_g), entry [(o,t),(i,s)] = (L_t R[o, i, t^{-1} s])(xi).
ad::SparseMap group_expand_map(std::size_t d_out, std::size_t d_in, group::Group g, std::size_t k);
/// Weight sharing for 1x1 G-convs: (d_out, d_in, d_g) -> (d_out d_g, d_in d_g).
ad::SparseMap gconv1x1_expand_map(std::size_t d_out, std::size_t d_in, group::Group g);

class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
  ad::Parameter& parameter(const std::string& name);
  std::size_t param_count() const;

  /// x (B, in_steps, n, n) -> next frame (B, 1, n, n). With track=false the
  /// parameters enter as constants and nothing is differentiable.
  ad::Var forward(ad::Tape& tape, ad::Var x, bool track = true);
  /// No-grad convenience; accepts (in_steps, n, n) or (B, in_steps, n, n).
  Tensor predict(const Tensor& x);

  // Stages of forward, exposed for the equivariance and gradient suites.
  // Feature maps are batched (B, d_z d_g, n, n).
  ad::Var lift(ad::Tape& tape, ad::Var x, bool track = true);
  ad::Var layer(ad::Tape& tape, std::size_t l, ad::Var h, bool track = true);
  ad::Var project(ad::Tape& tape, ad::Var h, bool track = true);

  /// Hermitian-projected (and, for radial-fno, tied) centered bank of layer l.
  Tensor bank(std::size_t l) const;

  void save(const std::filesystem::path& dir) const;
  static Model load(const std::filesystem::path& dir);

 private:
  ad::Var use(ad::Tape& tape, ad::Parameter& p, bool track);
  ad::Var kernel(ad::Tape& tape, std::size_t l, bool track);
  ad::Var expand(ad::Tape& tape, ad::Parameter& p, const std::shared_ptr<const ad::SparseMap>& map, bool track);

  ModelConfig cfg_;
  std::vector<std::unique_ptr<ad::Parameter>> params_;
  std::shared_ptr<const ad::SparseMap> bank_map_;     // raw half band -> projected full band
  std::shared_ptr<const ad::SparseMap> kernel_map_;   // raw half band -> batched kernel
  std::shared_ptr<const ad::SparseMap> mix_map_;      // 1x1 G-conv weight sharing
  std::shared_ptr<const ad::SparseMap> lift_map_;
  std::shared_ptr<const ad::SparseMap> project_map_;
};

std::size_t param_count(const Model& m);

}  // namespace gfno::model
